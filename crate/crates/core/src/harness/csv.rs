//! Convergence history files.
//!
//! Every file has the header `rhs_index,phase,iteration,mvec_cumulative,relres`
//! and one row per recorded residual. Scalars are written with 17
//! significant digits so that parsing a file back reproduces the history
//! bit for bit.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const HEADER: [&str; 5] = ["rhs_index", "phase", "iteration", "mvec_cumulative", "relres"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Projection,
    Post,
    Baseline,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Projection => "projection",
            Phase::Post => "post",
            Phase::Baseline => "baseline",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "projection" => Ok(Phase::Projection),
            "post" => Ok(Phase::Post),
            "baseline" => Ok(Phase::Baseline),
            other => Err(Error::InvalidInput(format!("unknown phase {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRow {
    pub rhs_index: usize,
    pub phase: Phase,
    pub iteration: usize,
    pub mvec_cumulative: u64,
    pub relres: f64,
}

/// `{:.16e}`, i.e. 17 significant digits; enough to round-trip any `f64`.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_history(w: impl Write, rows: &[HistoryRow]) -> Result<()> {
    let mut out = ::csv::Writer::from_writer(w);
    out.write_record(HEADER).map_err(csv_err)?;
    for r in rows {
        out.write_record([
            r.rhs_index.to_string(),
            r.phase.to_string(),
            r.iteration.to_string(),
            r.mvec_cumulative.to_string(),
            format_f64(r.relres),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_history(path: impl AsRef<Path>, rows: &[HistoryRow]) -> Result<()> {
    write_history(std::fs::File::create(path)?, rows)
}

pub fn read_history(r: impl Read) -> Result<Vec<HistoryRow>> {
    let mut rd = ::csv::Reader::from_reader(r);
    let header = rd.headers().map_err(csv_err)?;
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(Error::InvalidInput(format!("unexpected history header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let bad = |i: usize| Error::InvalidInput(format!("history row {}: bad {}", rows.len() + 1, HEADER[i]));
        rows.push(HistoryRow {
            rhs_index: field(0).parse().map_err(|_| bad(0))?,
            phase: field(1).parse()?,
            iteration: field(2).parse().map_err(|_| bad(2))?,
            mvec_cumulative: field(3).parse().map_err(|_| bad(3))?,
            relres: field(4).parse().map_err(|_| bad(4))?,
        });
    }
    Ok(rows)
}

pub fn load_history(path: impl AsRef<Path>) -> Result<Vec<HistoryRow>> {
    read_history(std::fs::File::open(path)?)
}

/// Dense matrix as CSV without header, 17 significant digits; NaN entries
/// are written as `nan`.
pub fn save_matrix(path: impl AsRef<Path>, a: &[Vec<f64>]) -> Result<()> {
    let mut out = ::csv::WriterBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(csv_err)?;
    for row in a {
        out.write_record(row.iter().map(|&x| if x.is_nan() { "nan".to_string() } else { format_f64(x) }))
            .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

fn csv_err(e: ::csv::Error) -> Error {
    match e.into_kind() {
        ::csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidInput(format!("csv: {other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_iteration_history_is_header_plus_row() {
        let rows = [HistoryRow {
            rhs_index: 1,
            phase: Phase::Baseline,
            iteration: 0,
            mvec_cumulative: 0,
            relres: 0.0,
        }];
        let mut buf = Vec::new();
        write_history(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "rhs_index,phase,iteration,mvec_cumulative,relres\n1,baseline,0,0,0.0000000000000000e0\n"
        );
    }

    #[test]
    fn awkward_values_round_trip() {
        let vals = [1.0 / 3.0, 1e-300, 5e-324, 0.1 + 0.2, f64::MAX, 123456789.123456789];
        let rows: Vec<HistoryRow> = vals
            .iter()
            .enumerate()
            .map(|(i, &relres)| HistoryRow {
                rhs_index: 2,
                phase: if i < 2 { Phase::Projection } else { Phase::Post },
                iteration: i,
                mvec_cumulative: 3 * i as u64,
                relres,
            })
            .collect();
        let mut buf = Vec::new();
        write_history(&mut buf, &rows).unwrap();
        let back = read_history(buf.as_slice()).unwrap();
        assert_eq!(back.len(), rows.len());
        for (a, b) in back.iter().zip(&rows) {
            assert_eq!(a.relres.to_bits(), b.relres.to_bits());
            assert_eq!((a.rhs_index, a.phase, a.iteration, a.mvec_cumulative), (b.rhs_index, b.phase, b.iteration, b.mvec_cumulative));
        }
    }

    #[test]
    fn wrong_header_is_rejected() {
        assert!(read_history("a,b\n1,2\n".as_bytes()).is_err());
    }
}
