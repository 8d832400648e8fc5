//! Eigen-deformation modes.
//!
//! For a tracked eigenmode `i` the aligned samples `φᵢ⁽¹⁾ … φᵢ⁽ᵖ⁾` are
//! centred on their mean `φ̄ᵢ`, giving the deformation matrix `Dᵢ`. Its
//! mass-weighted SVD `F Dᵢ = Ũ Σ Vᴴ` yields EDMs `Uᵢ = F⁻¹ Ũ`, which are
//! E-orthonormal and optimal in the weighted Frobenius sense. Each sample is
//! then `φᵢ⁽ᵏ⁾ ≈ φ̄ᵢ + Uᵢ φ̂ᵢ⁽ᵏ⁾` with coefficients `φ̂ᵢ⁽ᵏ⁾ = (Σ Vᴴ)ₖ`, and a
//! mode at an unsampled parameter is obtained by interpolating only those
//! `r` coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::{interpolate_columns, Knots, Scheme};
use crate::modal::ModeDatabase;
use crate::numerics::{svd_keep, CMat, CVec, CholeskyFactor, C64};

/// Energy threshold used when no rank is requested.
pub const DEFAULT_ENERGY_THRESHOLD: f64 = 0.999;

/// How many EDMs to keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankSpec {
    Fixed(usize),
    /// Smallest rank whose energy fraction reaches the threshold.
    Energy(f64),
    /// `min(n, p)`.
    Full,
}

impl Default for RankSpec {
    fn default() -> Self {
        RankSpec::Energy(DEFAULT_ENERGY_THRESHOLD)
    }
}

/// Which eigenvectors a basis describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeSide {
    #[default]
    Right,
    Left,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdmBasis {
    pub mode_index: usize,
    pub side: ModeSide,
    pub mean_mode: CVec,
    /// `n x r`, E-orthonormal columns.
    pub edms: CMat,
    /// All `min(n, p)` singular values of `F D`, non-increasing.
    pub singular_values: Vec<f64>,
    /// `r x p`; column `k` holds the coefficients of sample `k`.
    pub coefficients: CMat,
    pub sample_mus: Vec<f64>,
}

impl EdmBasis {
    pub fn rank(&self) -> usize {
        self.edms.ncols()
    }

    pub fn n(&self) -> usize {
        self.mean_mode.len()
    }

    pub fn p(&self) -> usize {
        self.sample_mus.len()
    }

    /// Keeps the leading `r` EDMs. SVD truncations are nested, so this
    /// equals recomputing at rank `r`.
    pub fn truncated(&self, r: usize) -> Result<EdmBasis> {
        if r > self.rank() {
            return Err(Error::RankOutOfRange {
                rank: r,
                min: 0,
                max: self.rank(),
            });
        }
        Ok(EdmBasis {
            edms: self.edms.columns(0, r).into_owned(),
            coefficients: self.coefficients.rows(0, r).into_owned(),
            ..self.clone()
        })
    }

    /// `φ̄ + U φ̂⁽ᵏ⁾` for every sample, as an `n x p` matrix.
    pub fn reconstruct_samples(&self) -> CMat {
        let mut out = &self.edms * &self.coefficients;
        for mut col in out.column_iter_mut() {
            col += &self.mean_mode;
        }
        out
    }

    pub fn energy_fraction(&self) -> Result<f64> {
        energy_fraction(&self.singular_values, self.rank())
    }
}

/// Mean mode and centred deformation matrix of right modes for chain `i`.
pub fn build_data_matrix(db: &ModeDatabase, i: usize) -> Result<(CVec, CMat)> {
    build_data_matrix_side(db, i, ModeSide::Right)
}

pub fn build_data_matrix_side(db: &ModeDatabase, i: usize, side: ModeSide) -> Result<(CVec, CMat)> {
    if !db.paired {
        return Err(Error::DatabaseState("paired"));
    }
    if !db.aligned {
        return Err(Error::DatabaseState("aligned"));
    }
    if i >= db.m() {
        return Err(Error::InvalidParameter(format!(
            "mode index {i} out of range (database holds {} modes)",
            db.m()
        )));
    }
    let raw = db.side_matrix(i, side == ModeSide::Left);
    Ok(center(&raw))
}

fn center(raw: &CMat) -> (CVec, CMat) {
    let p = raw.ncols();
    let mean = raw.column_sum() / C64::new(p as f64, 0.0);
    let mut d = raw.clone();
    for mut col in d.column_iter_mut() {
        col -= &mean;
    }
    (mean, d)
}

/// EDMs of a deformation matrix `D` (`n x p`) weighted by the mass
/// Cholesky factor `F`.
pub fn compute_edms(
    mean: CVec,
    d: &CMat,
    factor: &CholeskyFactor,
    rank: RankSpec,
    sample_mus: &[f64],
) -> Result<EdmBasis> {
    let (n, p) = d.shape();
    if factor.dim() != n || mean.len() != n {
        return Err(Error::DimensionMismatch {
            context: "deformation matrix vs mass factor",
            expected: factor.dim(),
            found: n,
        });
    }
    if sample_mus.len() != p {
        return Err(Error::DimensionMismatch {
            context: "sample parameters vs deformation columns",
            expected: p,
            found: sample_mus.len(),
        });
    }
    let max = n.min(p);
    if let RankSpec::Fixed(r) = rank {
        if r > max {
            return Err(Error::RankOutOfRange {
                rank: r,
                min: 0,
                max,
            });
        }
    }
    if let RankSpec::Energy(t) = rank {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "energy threshold {t} outside (0, 1]"
            )));
        }
    }
    let weighted = factor.apply_mat(d);
    let svd = svd_keep(&weighted, max)?;
    let r = match rank {
        RankSpec::Fixed(r) => r,
        RankSpec::Full => max,
        RankSpec::Energy(t) => {
            energy_fraction(&svd.singular_values, 0)?;
            select_rank(&svd.singular_values, t)
        }
    };
    let left = svd.left.columns(0, r).into_owned();
    let edms = factor.solve_mat(&left);
    let coefficients = CMat::from_fn(r, p, |j, k| {
        svd.right[(k, j)].conj() * svd.singular_values[j]
    });
    Ok(EdmBasis {
        mode_index: 0,
        side: ModeSide::Right,
        mean_mode: mean,
        edms,
        singular_values: svd.singular_values,
        coefficients,
        sample_mus: sample_mus.to_vec(),
    })
}

/// Builds the EDM basis of chain `i` straight from an aligned database.
pub fn edm_basis(db: &ModeDatabase, i: usize, side: ModeSide, rank: RankSpec) -> Result<EdmBasis> {
    let (mean, d) = build_data_matrix_side(db, i, side)?;
    let mut basis = compute_edms(mean, &d, db.mass_factor(), rank, &db.mus())?;
    basis.mode_index = i;
    basis.side = side;
    Ok(basis)
}

/// `Σ_{k≤r} σ_k / Σ_k σ_k`: sums of singular values, not of their squares.
pub fn energy_fraction(singular_values: &[f64], r: usize) -> Result<f64> {
    if r > singular_values.len() {
        return Err(Error::RankOutOfRange {
            rank: r,
            min: 0,
            max: singular_values.len(),
        });
    }
    let total: f64 = singular_values.iter().sum();
    if !(total > 0.0) {
        return Err(Error::UndefinedEnergy);
    }
    if r == singular_values.len() {
        return Ok(1.0);
    }
    Ok(singular_values[..r].iter().sum::<f64>() / total)
}

/// Smallest `r` whose energy fraction reaches `threshold`. All-zero input
/// gives 0.
pub fn select_rank(singular_values: &[f64], threshold: f64) -> usize {
    let total: f64 = singular_values.iter().sum();
    if !(total > 0.0) {
        return 0;
    }
    let mut acc = 0.0;
    for (k, s) in singular_values.iter().enumerate() {
        if acc / total >= threshold {
            return k;
        }
        acc += s;
    }
    singular_values.len()
}

/// `φ̄ + U φ̂(μ)` with the coefficients interpolated over the sample
/// parameters.
pub fn interpolate_mode(basis: &EdmBasis, mu: f64, scheme: Scheme) -> Result<CVec> {
    let knots = Knots::new(&basis.sample_mus)?;
    let mut out = basis.mean_mode.clone();
    if basis.rank() > 0 {
        let coeffs = interpolate_columns(&knots, &basis.coefficients, mu, scheme)?;
        out.gemv(C64::new(1.0, 0.0), &basis.edms, &coeffs, C64::new(1.0, 0.0));
    } else {
        knots.weights(mu, scheme)?;
    }
    Ok(out)
}

/// Componentwise interpolation of the stored chain-`i` modes.
pub fn direct_interpolate(db: &ModeDatabase, i: usize, mu: f64, scheme: Scheme) -> Result<CVec> {
    direct_interpolate_side(db, i, ModeSide::Right, mu, scheme)
}

pub fn direct_interpolate_side(
    db: &ModeDatabase,
    i: usize,
    side: ModeSide,
    mu: f64,
    scheme: Scheme,
) -> Result<CVec> {
    if i >= db.m() {
        return Err(Error::InvalidParameter(format!(
            "mode index {i} out of range"
        )));
    }
    let knots = Knots::new(&db.mus())?;
    let w = knots.weights(mu, scheme)?;
    let mut out = CVec::zeros(db.n());
    for (s, &wk) in db.samples.iter().zip(&w) {
        if wk != 0.0 {
            let col = match side {
                ModeSide::Right => s.right.column(i),
                ModeSide::Left => s.adjoint().column(i),
            };
            out.axpy(C64::new(wk, 0.0), &col, C64::new(1.0, 0.0));
        }
    }
    Ok(out)
}

/// `‖F(truth − predicted)‖₂ / ‖F truth‖₂`.
pub fn interpolation_error(truth: &CVec, predicted: &CVec, factor: &CholeskyFactor) -> Result<f64> {
    if truth.len() != predicted.len() {
        return Err(Error::DimensionMismatch {
            context: "interpolation_error",
            expected: truth.len(),
            found: predicted.len(),
        });
    }
    let denom = factor.weighted_norm(truth);
    if denom == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(factor.weighted_norm(&(truth - predicted)) / denom)
}
