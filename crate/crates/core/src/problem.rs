//! Matrix Market I/O and structured-grid problem generators.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{check_len, Error, Result};
use crate::linalg::DenseVector;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    MatrixMarketFile,
    Generator,
}

/// A fixed system matrix together with the starting vector `d` of its
/// right-hand side sequence.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub a: CsrMatrix,
    pub label: String,
    pub origin: Origin,
    pub d: DenseVector,
}

impl ProblemInstance {
    /// `d` defaults to `A·𝟙`.
    pub fn new(a: CsrMatrix, label: impl Into<String>, origin: Origin, d: Option<DenseVector>) -> Result<Self> {
        if !a.is_symmetric() {
            return Err(Error::InvalidInput("problem matrix must be symmetric".into()));
        }
        let d = match d {
            Some(d) => {
                check_len("starting vector", a.n_rows(), d.len())?;
                d
            }
            None => a.spmv(&DenseVector::ones(a.n_cols()))?,
        };
        if d.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidInput("starting vector d is zero".into()));
        }
        Ok(ProblemInstance {
            a,
            label: label.into(),
            origin,
            d,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.n_rows()
    }
}

/// `scale · tridiag(−1, 2, −1)` of order `n`.
pub fn gen_laplace_1d(n: usize, scale: f64) -> Result<CsrMatrix> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("1D Laplacian needs n >= 2, got {n}")));
    }
    let mut t = Vec::with_capacity(3 * n);
    for i in 0..n {
        if i > 0 {
            t.push((i, i - 1, -scale));
        }
        t.push((i, i, 2.0 * scale));
        if i + 1 < n {
            t.push((i, i + 1, -scale));
        }
    }
    CsrMatrix::from_triplets(n, n, t)?.into_symmetric()
}

/// 5-point Laplacian on an `n × n` interior grid, lexicographic ordering.
pub fn gen_laplace_2d(n: usize) -> Result<CsrMatrix> {
    gen_shifted_laplace(n, 0.0)
}

/// `gen_laplace_2d(n) − sigma·I`.
pub fn gen_shifted_laplace(n: usize, sigma: f64) -> Result<CsrMatrix> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("2D Laplacian needs n >= 2, got {n}")));
    }
    let big_n = n * n;
    let mut t = Vec::with_capacity(5 * big_n);
    for row in 0..n {
        for col in 0..n {
            let i = row * n + col;
            if row > 0 {
                t.push((i, i - n, -1.0));
            }
            if col > 0 {
                t.push((i, i - 1, -1.0));
            }
            t.push((i, i, 4.0 - sigma));
            if col + 1 < n {
                t.push((i, i + 1, -1.0));
            }
            if row + 1 < n {
                t.push((i, i + n, -1.0));
            }
        }
    }
    CsrMatrix::from_triplets(big_n, big_n, t)?.into_symmetric()
}

/// Reads a real coordinate Matrix Market file with `symmetric` or `general` storage.
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<CsrMatrix> {
    let path = path.as_ref();
    let file = File::open(path)?;
    parse_matrix_market(BufReader::new(file), path)
}

/// Parses Matrix Market text; `path` only labels error messages.
pub fn parse_matrix_market(reader: impl BufRead, path: &Path) -> Result<CsrMatrix> {
    let err = |line: usize, message: String| Error::Parse {
        path: PathBuf::from(path),
        line,
        message,
    };
    let mut lines = reader.lines().enumerate();
    let (_, banner) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let banner = banner?;
    let tokens: Vec<String> = banner.split_whitespace().map(|s| s.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(err(1, format!("not a Matrix Market matrix banner: {banner:?}")));
    }
    if tokens[2] != "coordinate" {
        return Err(err(1, format!("unsupported format {:?}, need coordinate", tokens[2])));
    }
    if tokens[3] != "real" && tokens[3] != "integer" {
        return Err(err(1, format!("unsupported field {:?}, need real", tokens[3])));
    }
    let symmetric = match tokens[4].as_str() {
        "symmetric" => true,
        "general" => false,
        other => return Err(err(1, format!("unsupported symmetry qualifier {other:?}"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(err(lineno, "size line needs rows, cols and entries".into()));
                }
                let parse = |s: &str| s.parse::<usize>().map_err(|e| err(lineno, format!("{s:?}: {e}")));
                let (r, c, nnz) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
                if r != c {
                    return Err(err(lineno, format!("matrix is not square ({r}x{c})")));
                }
                if nnz == 0 || r == 0 {
                    return Err(err(lineno, "empty pattern".into()));
                }
                size = Some((r, c, nnz));
                triplets.reserve(if symmetric { 2 * nnz } else { nnz });
            }
            Some((r, c, _)) => {
                if fields.len() != 3 {
                    return Err(err(lineno, "entry needs row, col and value".into()));
                }
                let i: usize = fields[0].parse().map_err(|e| err(lineno, format!("row index: {e}")))?;
                let j: usize = fields[1].parse().map_err(|e| err(lineno, format!("column index: {e}")))?;
                let v: f64 = fields[2].parse().map_err(|e| err(lineno, format!("value: {e}")))?;
                if i == 0 || j == 0 || i > r || j > c {
                    return Err(err(lineno, format!("index ({i}, {j}) out of range")));
                }
                if !v.is_finite() {
                    return Err(err(lineno, "non-finite value".into()));
                }
                if symmetric && j > i {
                    return Err(err(lineno, "symmetric file stores an upper-triangle entry".into()));
                }
                triplets.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (r, c, nnz) = size.ok_or_else(|| err(1, "missing size line".into()))?;
    let stored = if symmetric {
        triplets.iter().filter(|t| t.0 >= t.1).count()
    } else {
        triplets.len()
    };
    if stored != nnz {
        return Err(err(0, format!("header announces {nnz} entries, found {stored}")));
    }
    let a = CsrMatrix::from_triplets(r, c, triplets)?;
    a.into_symmetric()
}

/// Writes the lower triangle of a symmetric matrix with 17 significant digits.
pub fn write_matrix_market(path: impl AsRef<Path>, a: &CsrMatrix) -> Result<()> {
    if !a.is_symmetric() {
        return Err(Error::InvalidInput("only symmetric matrices are written".into()));
    }
    let mut w = BufWriter::new(File::create(path)?);
    let lower: Vec<(usize, usize, f64)> = (0..a.n_rows())
        .flat_map(|i| a.row(i).filter(move |&(j, _)| j <= i).map(move |(j, v)| (i, j, v)))
        .collect();
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(w, "{} {} {}", a.n_rows(), a.n_cols(), lower.len())?;
    for (i, j, v) in lower {
        writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<CsrMatrix> {
        parse_matrix_market(text.as_bytes(), Path::new("inline.mtx"))
    }

    #[test]
    fn minimal_symmetric_file() {
        let a = parse(
            "%%MatrixMarket matrix coordinate real symmetric\n% comment\n2 2 3\n1 1 2\n2 1 -1\n2 2 2\n",
        )
        .unwrap();
        assert_eq!(a.to_dense(), vec![vec![2.0, -1.0], vec![-1.0, 2.0]]);
        assert!(a.is_symmetric());
    }

    #[test]
    fn empty_pattern_is_rejected() {
        let e = parse("%%MatrixMarket matrix coordinate real symmetric\n3 3 0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 x 2\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        let e = parse("%%MatrixMarket matrix coordinate real general\n2 3 1\n1 1 2\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        let asym = parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 2 1\n");
        assert!(matches!(asym, Err(Error::InvalidInput(_))));
        assert!(parse("%%MatrixMarket matrix array real general\n").is_err());
    }

    #[test]
    fn generators_reject_small_sizes() {
        assert!(gen_laplace_1d(1, 1.0).is_err());
        assert!(gen_laplace_2d(1).is_err());
        assert!(gen_shifted_laplace(1, 0.0).is_err());
    }

    #[test]
    fn small_generators() {
        assert_eq!(
            gen_laplace_1d(2, 1.0).unwrap().to_dense(),
            vec![vec![2.0, -1.0], vec![-1.0, 2.0]]
        );
        let a = gen_laplace_2d(2).unwrap();
        assert_eq!(a.diagonal(), vec![4.0; 4]);
        assert_eq!(a.get(0, 1), -1.0);
        assert_eq!(a.get(0, 2), -1.0);
        assert_eq!(a.get(0, 3), 0.0);
        assert_eq!(gen_shifted_laplace(3, 0.0).unwrap(), gen_laplace_2d(3).unwrap());
    }

    #[test]
    fn laplace_2d_row_sums() {
        let a = gen_laplace_2d(3).unwrap();
        let sums = a.spmv(&DenseVector::ones(9)).unwrap();
        // Only the center node has four interior neighbours.
        for (i, s) in sums.iter().enumerate() {
            if i == 4 {
                assert_eq!(*s, 0.0);
            } else {
                assert!(*s > 0.0);
            }
        }
    }

    #[test]
    fn default_starting_vector_is_a_times_ones() {
        let a = gen_laplace_1d(4, 1.0).unwrap();
        let p = ProblemInstance::new(a, "lap1d", Origin::Generator, None).unwrap();
        assert_eq!(p.d.as_slice(), &[1.0, 0.0, 0.0, 1.0]);
        let z = DenseVector::zeros(4);
        assert!(ProblemInstance::new(p.a.clone(), "x", Origin::Generator, Some(z)).is_err());
    }
}
