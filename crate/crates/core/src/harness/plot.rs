//! Generated matplotlib script that draws the convergence curves from the
//! history CSVs. The first right-hand side is drawn thick, the rest thin.

use std::path::Path;

use crate::error::Result;

pub const SCRIPT_NAME: &str = "plot_convergence.py";

const SCRIPT: &str = r#"#!/usr/bin/env python3
# Generated by `srpcr run`. Usage: python3 plot_convergence.py [output.png]
import csv
import glob
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
TOL = __TOL__


def load(path):
    xs, ys = [], []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            xs.append(int(row["mvec_cumulative"]))
            ys.append(float(row["relres"]))
    return xs, ys


def rhs_of(path):
    return int(os.path.basename(path).split("_rhs")[1].split(".")[0])


fig, ax = plt.subplots(figsize=(7, 4.5))
for method, color in (("pminres", "tab:blue"), ("srpcr", "tab:red")):
    files = sorted(glob.glob(os.path.join(HERE, method + "_rhs*.csv")), key=rhs_of)
    for path in files:
        i = rhs_of(path)
        xs, ys = load(path)
        label = method.upper() if i == 1 else None
        ax.semilogy(xs, ys, color=color, linewidth=2.5 if i == 1 else 0.8, label=label)
ax.axhline(TOL, color="gray", linestyle=":", linewidth=0.8)
ax.set_xlabel("matrix-vector products with A")
ax.set_ylabel("relative preconditioned residual")
ax.legend()
fig.tight_layout()
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else os.path.join(HERE, "convergence.png"), dpi=150)
"#;

pub fn plot_script(tol: f64) -> String {
    SCRIPT.replace("__TOL__", &format!("{tol:e}"))
}

pub fn write_plot_script(dir: impl AsRef<Path>, tol: f64) -> Result<()> {
    std::fs::write(dir.as_ref().join(SCRIPT_NAME), plot_script(tol))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_is_substituted() {
        let s = plot_script(1e-8);
        assert!(s.contains("TOL = 1e-8"));
        assert!(!s.contains("__TOL__"));
    }
}
