use std::io::Write;

use serde::Serialize;

use crate::Result;

/// One CSV record. Fields that do not apply to an experiment stay empty.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Row {
    pub experiment: String,
    #[serde(rename = "ref")]
    pub refs: Option<usize>,
    pub dofs: Option<usize>,
    pub gamma: Option<f64>,
    pub param: Option<f64>,
    pub nonlinear_iters: Option<usize>,
    pub avg_fgmres: Option<f64>,
    pub energy: Option<f64>,
    pub constraint_norm: Option<f64>,
    pub l2_error: Option<f64>,
    pub h1_error: Option<f64>,
    pub converged: Option<bool>,
}

pub const HEADER: [&str; 12] = [
    "experiment",
    "ref",
    "dofs",
    "gamma",
    "param",
    "nonlinear_iters",
    "avg_fgmres",
    "energy",
    "constraint_norm",
    "l2_error",
    "h1_error",
    "converged",
];

pub fn write_csv<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Whitespace-separated columns for gnuplot: `x` followed by `ys`, one block
/// per experiment name, blocks separated by two blank lines.
pub fn write_dat<W: Write>(
    mut out: W,
    rows: &[Row],
    x: fn(&Row) -> Option<f64>,
    ys: &[(&str, fn(&Row) -> Option<f64>)],
) -> Result<()> {
    let mut names: Vec<&str> = Vec::new();
    for r in rows {
        if !names.contains(&r.experiment.as_str()) {
            names.push(&r.experiment);
        }
    }
    for (k, name) in names.iter().enumerate() {
        if k > 0 {
            writeln!(out, "\n")?;
        }
        write!(out, "# {name}: x")?;
        for (label, _) in ys {
            write!(out, " {label}")?;
        }
        writeln!(out)?;
        for r in rows.iter().filter(|r| r.experiment == *name) {
            let Some(xv) = x(r) else { continue };
            write!(out, "{xv:e}")?;
            for (_, f) in ys {
                match f(r) {
                    Some(v) => write!(out, " {v:e}")?,
                    None => write!(out, " NaN")?,
                }
            }
            writeln!(out)?;
        }
    }
    Ok(())
}
