//! Conversion of mode tables exported as CSV.
//!
//! Expected directory layout:
//!
//! ```text
//! parameters.csv       one parameter value per line
//! mode_1.csv           n rows x p columns: real parts of mode 1 at each sample
//! mode_1_imag.csv      optional imaginary parts, same shape
//! mode_2.csv ...       further modes, numbered consecutively from 1
//! eigenvalues.csv      optional, p rows x m columns (real parts)
//! mass.csv             optional diagonal of E, n lines (identity if absent)
//! ```
//!
//! Lines that do not parse as numbers (headers) are skipped. Each file
//! `mode_i.csv` is taken to describe one tracked chain, so the result is
//! marked paired; modes are rescaled to unit E-norm and aligned.

use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use edm::modal::{align, ModeDatabase, ModeSample, ModeSelection};
use edm::numerics::{CMat, MassMatrix, RVec, C64};

fn read_table(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: line {}", path.display(), k + 1))?;
        let parsed: std::result::Result<Vec<f64>, _> = rec
            .iter()
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect();
        match parsed {
            Ok(row) if !row.is_empty() => rows.push(row),
            Ok(_) => {}
            Err(_) if rows.is_empty() => {} // header
            Err(e) => bail!("{}: line {}: {e}", path.display(), k + 1),
        }
    }
    Ok(rows)
}

fn column(path: &Path) -> Result<Vec<f64>> {
    let rows = read_table(path)?;
    ensure!(
        rows.iter().all(|r| r.len() == 1),
        "{}: expected one value per line",
        path.display()
    );
    Ok(rows.into_iter().map(|r| r[0]).collect())
}

fn matrix(path: &Path, rows_expected: Option<usize>, cols: usize) -> Result<Vec<Vec<f64>>> {
    let rows = read_table(path)?;
    if let Some(n) = rows_expected {
        ensure!(
            rows.len() == n,
            "{}: expected {n} rows, found {}",
            path.display(),
            rows.len()
        );
    }
    ensure!(
        rows.iter().all(|r| r.len() == cols),
        "{}: every row needs {cols} columns",
        path.display()
    );
    Ok(rows)
}

pub fn ingest_directory(dir: &Path) -> Result<ModeDatabase> {
    let mus = column(&dir.join("parameters.csv"))?;
    let p = mus.len();
    ensure!(p >= 2, "parameters.csv needs at least 2 values");
    let mut modes = Vec::new();
    let mut n = None;
    for i in 1.. {
        let path = dir.join(format!("mode_{i}.csv"));
        if !path.exists() {
            break;
        }
        let re = matrix(&path, n, p)?;
        n = Some(re.len());
        let imag = dir.join(format!("mode_{i}_imag.csv"));
        let im = if imag.exists() {
            Some(matrix(&imag, n, p)?)
        } else {
            None
        };
        modes.push((re, im));
    }
    ensure!(!modes.is_empty(), "no mode_1.csv in {}", dir.display());
    let n = n.expect("at least one mode");
    let m = modes.len();
    let mass = if dir.join("mass.csv").exists() {
        let d = column(&dir.join("mass.csv"))?;
        ensure!(
            d.len() == n,
            "mass.csv: expected {n} values, found {}",
            d.len()
        );
        MassMatrix::Diagonal(RVec::from_vec(d))
    } else {
        MassMatrix::identity(n)
    };
    let eigs = if dir.join("eigenvalues.csv").exists() {
        matrix(&dir.join("eigenvalues.csv"), Some(p), m)?
    } else {
        vec![vec![0.0; m]; p]
    };
    let factor = mass.cholesky()?;
    let samples = (0..p)
        .map(|k| {
            let mut right = CMat::from_fn(n, m, |row, i| {
                let (re, im) = &modes[i];
                C64::new(re[row][k], im.as_ref().map_or(0.0, |t| t[row][k]))
            });
            for (i, mut col) in right.column_iter_mut().enumerate() {
                let nrm = factor.weighted_norm(&col.clone_owned());
                ensure!(nrm > 0.0, "mode {} is zero at sample {}", i + 1, k + 1);
                col /= C64::new(nrm, 0.0);
            }
            Ok(ModeSample {
                mu: mus[k],
                eigenvalues: eigs[k].iter().map(|&v| C64::new(v, 0.0)).collect(),
                right,
                left: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut db = ModeDatabase::new(samples, mass, ModeSelection::LeadingRealPart)?;
    db.paired = true;
    Ok(align(db)?)
}

/// Writes a database in the layout read by [`ingest_directory`]; used to
/// exchange data with other tools.
pub fn export_directory(db: &ModeDatabase, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut text = String::new();
    for mu in db.mus() {
        text.push_str(&format!("{mu:?}\n"));
    }
    fs::write(dir.join("parameters.csv"), text)?;
    for i in 0..db.m() {
        let modes = db.mode_matrix(i);
        let write = |f: fn(&C64) -> f64, name: String| -> Result<()> {
            let mut out = String::new();
            for row in modes.row_iter() {
                let cells: Vec<String> = row.iter().map(|z| format!("{:?}", f(z))).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            Ok(fs::write(dir.join(name), out)?)
        };
        write(|z| z.re, format!("mode_{}.csv", i + 1))?;
        if db.is_complex() {
            write(|z| z.im, format!("mode_{}_imag.csv", i + 1))?;
        }
    }
    Ok(())
}
