//! CSV output: comma separated, header row, LF line endings, 17 significant digits.

use std::path::{Path, PathBuf};

use iga_core::assembly::Subdomain;
use iga_core::postproc::{eval_field, EmfSpectrum};

use crate::error::{CliError, Result};

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |source| CliError::Csv { path: path.to_path_buf(), source }
}

/// Writes `header` and `rows` to `path`.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for r in rows {
        w.write_record(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reads a numeric table back: `(header, rows)`.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| CliError::Parse {
                    path: path.display().to_string(),
                    line: k + 2,
                    message: format!("'{f}' is not a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

pub const SPECTRUM_HEADER: [&str; 2] = ["order", "magnitude_v"];
pub const HISTORY_HEADER: [&str; 3] = ["k", "eps_rt", "eps_st"];
pub const LINKAGE_HEADER: [&str; 3] = ["position", "angle_rad", "psi_wb"];
pub const GRID_HEADER: [&str; 5] = ["x", "y", "a_z", "bx", "by"];

pub fn write_spectrum(path: &Path, s: &EmfSpectrum) -> Result<()> {
    let rows: Vec<Vec<String>> =
        s.magnitudes.iter().enumerate().map(|(h, e)| vec![(h + 1).to_string(), num(*e)]).collect();
    write_table(path, &SPECTRUM_HEADER, &rows)
}

pub fn write_history(path: &Path, history: &[(f64, f64)]) -> Result<()> {
    let rows: Vec<Vec<String>> =
        history.iter().enumerate().map(|(k, (a, b))| vec![(k + 1).to_string(), num(*a), num(*b)]).collect();
    write_table(path, &HISTORY_HEADER, &rows)
}

pub fn write_linkage(path: &Path, angles: &[f64], psi: &[f64]) -> Result<()> {
    let rows: Vec<Vec<String>> =
        angles.iter().zip(psi).enumerate().map(|(i, (a, p))| vec![i.to_string(), num(*a), num(*p)]).collect();
    write_table(path, &LINKAGE_HEADER, &rows)
}

/// One file `grid_patch<k>.csv` per patch with columns `x, y, a_z, bx, by` on a
/// `samples × samples` parametric grid, `u` fastest. `k` is the model patch index.
pub fn write_grid(dir: &Path, sub: &Subdomain<'_>, coeffs: &[f64], samples: usize) -> Result<Vec<PathBuf>> {
    let n = samples.max(2);
    let mut written = Vec::new();
    for (member, &k) in sub.patches().iter().enumerate() {
        let mut pts = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                pts.push((member, i as f64 / (n - 1) as f64, j as f64 / (n - 1) as f64));
            }
        }
        let rows: Vec<Vec<String>> = eval_field(sub, coeffs, &pts)?
            .iter()
            .map(|f| vec![num(f.point.x), num(f.point.y), num(f.a), num(f.b[0]), num(f.b[1])])
            .collect();
        let path = dir.join(format!("grid_patch{k:03}.csv"));
        write_table(&path, &GRID_HEADER, &rows)?;
        written.push(path);
    }
    Ok(written)
}
