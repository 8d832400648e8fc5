//! Modal-truncation reduced-order models.
//!
//! A [`Rom`] keeps `m` right eigenvectors `Φ`, matching left vectors `Ψ`
//! and eigenvalues `Λ` at one parameter value, plus the equilibrium `x̄`
//! used as linearization point. With `ΨᴴEΦ = I` the reduced dynamics are
//! diagonal and a trajectory is
//!
//! ```text
//! x(t) = x̄ + Φ exp(Λ t) Ψᴴ E (x₀ − x̄)
//! ```
//!
//! At unsampled parameters the bases come from direct or EDM-based
//! interpolation and the eigenvalues from a cubic spline. Interpolated bases
//! are used as they are; their bi-orthogonality defect is measured and
//! stored for reporting.

use std::collections::HashMap;
use std::fmt;
use std::time::Instant;

use log::warn;
use nalgebra::linalg::LU;
use nalgebra::Dyn;
use serde::{Deserialize, Serialize};

use crate::edm::{
    direct_interpolate_side, edm_basis, interpolate_mode, EdmBasis, ModeSide, RankSpec,
};
use crate::error::{Error, Result};
use crate::interp::{interpolate_scalars, interpolate_vectors, Knots, Scheme};
use crate::modal::ModeDatabase;
use crate::numerics::{generalized_eig, CMat, CVec, CholeskyFactor, MassMatrix, RMat, RVec, C64};
use crate::systems::{equilibrium, FullOrderSystem};

/// Number of characteristic times in a benchmark horizon.
pub const HORIZON_CHARACTERISTIC_TIMES: f64 = 5.0;
/// Stored time instants per benchmark trajectory.
pub const DEFAULT_TIME_STEPS: usize = 1000;
/// Timing repetitions per parameter in [`benchmark_strategies`].
pub const DEFAULT_REPETITIONS: usize = 100;
/// Crank–Nicolson steps over the horizon used as cross-check.
pub const INTEGRATOR_STEPS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Rom {
    pub mu: f64,
    /// `n x m'` right basis (`m' ≥ m` after conjugate completion).
    pub basis: CMat,
    pub adjoint: CMat,
    pub eigenvalues: Vec<C64>,
    pub equilibrium: RVec,
    pub mass: MassMatrix,
    /// `‖ΨᴴEΦ − I‖_F`
    pub biorthogonality_defect: f64,
}

impl Rom {
    /// Assembles a ROM. Eigenvalues with positive imaginary part get their
    /// complex-conjugate partner appended so trajectories of real systems
    /// stay real.
    pub fn new(
        mu: f64,
        basis: CMat,
        adjoint: CMat,
        eigenvalues: Vec<C64>,
        equilibrium: RVec,
        mass: MassMatrix,
    ) -> Result<Self> {
        let n = mass.dim();
        if basis.nrows() != n || adjoint.shape() != basis.shape() || equilibrium.len() != n {
            return Err(Error::DimensionMismatch {
                context: "ROM bases",
                expected: n,
                found: basis.nrows(),
            });
        }
        if eigenvalues.len() != basis.ncols() {
            return Err(Error::DimensionMismatch {
                context: "ROM eigenvalues",
                expected: basis.ncols(),
                found: eigenvalues.len(),
            });
        }
        let (basis, adjoint, eigenvalues) = complete_conjugates(basis, adjoint, eigenvalues);
        let mut rom = Rom {
            mu,
            basis,
            adjoint,
            eigenvalues,
            equilibrium,
            mass,
            biorthogonality_defect: 0.0,
        };
        rom.biorthogonality_defect = rom.compute_defect();
        Ok(rom)
    }

    pub fn n(&self) -> usize {
        self.basis.nrows()
    }

    /// Reduced dimension, conjugate partners included.
    pub fn order(&self) -> usize {
        self.basis.ncols()
    }

    fn compute_defect(&self) -> f64 {
        let e_phi = CMat::from_columns(
            &self
                .basis
                .column_iter()
                .map(|c| self.mass.mul_vec(&c.into_owned()))
                .collect::<Vec<_>>(),
        );
        let g = self.adjoint.adjoint() * e_phi;
        (g - CMat::identity(self.order(), self.order())).norm()
    }

    /// `x̂₀ = Ψᴴ E (x₀ − x̄)`
    pub fn reduced_initial(&self, x0: &RVec) -> Result<CVec> {
        if x0.len() != self.n() {
            return Err(Error::DimensionMismatch {
                context: "initial condition",
                expected: self.n(),
                found: x0.len(),
            });
        }
        let dx = x0 - &self.equilibrium;
        let e_dx = self.mass.mul_real(&dx).map(|v| C64::new(v, 0.0));
        Ok(self.adjoint.ad_mul(&e_dx))
    }
}

fn complete_conjugates(
    basis: CMat,
    adjoint: CMat,
    eigenvalues: Vec<C64>,
) -> (CMat, CMat, Vec<C64>) {
    let scale = eigenvalues
        .iter()
        .fold(f64::MIN_POSITIVE, |a, l| a.max(l.norm()));
    let tol = 1e-9 * scale;
    let extra: Vec<usize> = (0..eigenvalues.len())
        .filter(|&j| {
            let partner = eigenvalues[j].conj();
            eigenvalues[j].im > tol && !eigenvalues.iter().any(|l| (l - partner).norm() <= tol)
        })
        .collect();
    if extra.is_empty() {
        return (basis, adjoint, eigenvalues);
    }
    let mut right: Vec<CVec> = basis.column_iter().map(|c| c.into_owned()).collect();
    let mut left: Vec<CVec> = adjoint.column_iter().map(|c| c.into_owned()).collect();
    let mut eigs = eigenvalues.clone();
    for &j in &extra {
        right.push(basis.column(j).map(|z| z.conj()));
        left.push(adjoint.column(j).map(|z| z.conj()));
        eigs.push(eigenvalues[j].conj());
    }
    (CMat::from_columns(&right), CMat::from_columns(&left), eigs)
}

/// Copies the first `m` stored pairs at a sampled parameter.
pub fn build_rom_at_sample(db: &ModeDatabase, mu: f64, m: usize, equilibrium: RVec) -> Result<Rom> {
    let k = db.sample_index(mu).ok_or(Error::NotSampled { mu })?;
    check_m(db, m)?;
    let s = &db.samples[k];
    Rom::new(
        s.mu,
        s.right.columns(0, m).into_owned(),
        s.adjoint().columns(0, m).into_owned(),
        s.eigenvalues[..m].to_vec(),
        equilibrium,
        db.mass.clone(),
    )
}

fn check_m(db: &ModeDatabase, m: usize) -> Result<()> {
    if m == 0 || m > db.m() {
        return Err(Error::InvalidParameter(format!(
            "ROM order {m} must lie in 1..={}",
            db.m()
        )));
    }
    Ok(())
}

/// How eigenmodes are obtained at an unsampled parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Simulate ROMs at every sample and interpolate their trajectories.
    SolutionInterpolation,
    /// Interpolate the eigenmodes componentwise.
    Direct,
    /// Interpolate EDM coefficients.
    Edm,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::SolutionInterpolation => "solution-interpolation",
            Strategy::Direct => "direct",
            Strategy::Edm => "edm",
        })
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "solution-interpolation" | "solution" => Ok(Strategy::SolutionInterpolation),
            "direct" => Ok(Strategy::Direct),
            "edm" => Ok(Strategy::Edm),
            other => Err(Error::InvalidParameter(format!(
                "unknown strategy '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schemes {
    pub modes: Scheme,
    pub eigenvalues: Scheme,
}

impl Default for Schemes {
    fn default() -> Self {
        Schemes {
            modes: Scheme::Linear,
            eigenvalues: Scheme::CubicSpline,
        }
    }
}

/// EDM bases for the first `m` chains of a database; left bases are present
/// when the database stores left vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EdmModel {
    pub right: Vec<EdmBasis>,
    pub left: Option<Vec<EdmBasis>>,
}

impl EdmModel {
    pub fn from_database(db: &ModeDatabase, m: usize, rank: RankSpec) -> Result<Self> {
        check_m(db, m)?;
        let right = (0..m)
            .map(|i| edm_basis(db, i, ModeSide::Right, rank))
            .collect::<Result<Vec<_>>>()?;
        let left = if db.has_left() {
            Some(
                (0..m)
                    .map(|i| edm_basis(db, i, ModeSide::Left, rank))
                    .collect::<Result<Vec<_>>>()?,
            )
        } else {
            None
        };
        Ok(EdmModel { right, left })
    }

    /// Same model cut down to `r` EDMs per mode (`r` clamped to each basis).
    pub fn truncated(&self, r: usize) -> Result<Self> {
        let cut = |v: &Vec<EdmBasis>| {
            v.iter()
                .map(|b| b.truncated(r.min(b.rank())))
                .collect::<Result<Vec<_>>>()
        };
        Ok(EdmModel {
            right: cut(&self.right)?,
            left: self.left.as_ref().map(cut).transpose()?,
        })
    }
}

/// ROM at an arbitrary `mu` inside the sampled interval.
pub fn build_rom_interpolated(
    db: &ModeDatabase,
    edm: Option<&EdmModel>,
    mu: f64,
    m: usize,
    strategy: Strategy,
    schemes: Schemes,
    equilibrium: RVec,
) -> Result<Rom> {
    check_m(db, m)?;
    let knots = Knots::new(&db.mus())?;
    let mut right = Vec::with_capacity(m);
    let mut left = Vec::with_capacity(m);
    match strategy {
        Strategy::Direct => {
            for i in 0..m {
                right.push(direct_interpolate_side(
                    db,
                    i,
                    ModeSide::Right,
                    mu,
                    schemes.modes,
                )?);
                if db.has_left() {
                    left.push(direct_interpolate_side(
                        db,
                        i,
                        ModeSide::Left,
                        mu,
                        schemes.modes,
                    )?);
                }
            }
        }
        Strategy::Edm => {
            let model = edm.ok_or(Error::MissingBasis { mode: 0 })?;
            for i in 0..m {
                let basis = model.right.get(i).ok_or(Error::MissingBasis { mode: i })?;
                right.push(interpolate_mode(basis, mu, schemes.modes)?);
                if db.has_left() {
                    let lb = model
                        .left
                        .as_ref()
                        .and_then(|l| l.get(i))
                        .ok_or(Error::MissingBasis { mode: i })?;
                    left.push(interpolate_mode(lb, mu, schemes.modes)?);
                }
            }
        }
        Strategy::SolutionInterpolation => {
            return Err(Error::InvalidParameter(
                "solution interpolation does not build a single ROM; use solution_interpolation"
                    .into(),
            ))
        }
    }
    let mut eigenvalues = Vec::with_capacity(m);
    for i in 0..m {
        let track: Vec<C64> = db.samples.iter().map(|s| s.eigenvalues[i]).collect();
        eigenvalues.push(interpolate_scalars(
            &knots,
            &track,
            mu,
            schemes.eigenvalues,
        )?);
    }
    let basis = CMat::from_columns(&right);
    let adjoint = if db.has_left() {
        CMat::from_columns(&left)
    } else {
        basis.clone()
    };
    Rom::new(
        mu,
        basis,
        adjoint,
        eigenvalues,
        equilibrium,
        db.mass.clone(),
    )
}

/// How a trajectory was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolutionMethod {
    Spectral,
    CrankNicolson,
    Interpolated,
}

/// States `x(t_j)` stored as the columns of an `n x T` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: RMat,
    /// Largest imaginary part discarded when forming real states.
    pub imag_residue: f64,
    pub method: SolutionMethod,
}

impl Trajectory {
    pub fn state(&self, j: usize) -> RVec {
        self.states.column(j).into_owned()
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() || times.windows(2).any(|w| !(w[1] > w[0])) || times[0] < 0.0 {
        return Err(Error::InvalidParameter(
            "time grid must be non-empty, non-negative and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Evaluates `x̄ + Φ exp(Λ t) c` on the time grid.
fn modal_superposition(
    equilibrium: &RVec,
    basis: &CMat,
    eigenvalues: &[C64],
    coeffs: &CVec,
    times: &[f64],
) -> (RMat, f64) {
    let q = basis.ncols();
    let amp = CMat::from_fn(q, times.len(), |j, t| {
        (eigenvalues[j] * times[t]).exp() * coeffs[j]
    });
    let b_re = basis.map(|z| z.re);
    let b_im = basis.map(|z| z.im);
    let a_re = amp.map(|z| z.re);
    let a_im = amp.map(|z| z.im);
    let mut states = &b_re * &a_re - &b_im * &a_im;
    let imag = &b_re * &a_im + &b_im * &a_re;
    let residue = imag.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    for mut col in states.column_iter_mut() {
        col += equilibrium;
    }
    (states, residue)
}

/// Exact evaluation of the diagonal reduced dynamics.
pub fn simulate_rom(rom: &Rom, x0: &RVec, times: &[f64]) -> Result<Trajectory> {
    check_times(times)?;
    let coeffs = rom.reduced_initial(x0)?;
    let (states, imag_residue) = modal_superposition(
        &rom.equilibrium,
        &rom.basis,
        &rom.eigenvalues,
        &coeffs,
        times,
    );
    Ok(Trajectory {
        times: times.to_vec(),
        states,
        imag_residue,
        method: SolutionMethod::Spectral,
    })
}

/// Full-order reference from the complete spectral solution, shifted by the
/// equilibrium. Falls back to Crank–Nicolson when the eigenbasis is
/// defective or the equilibrium is undefined.
pub fn simulate_full(
    sys: &FullOrderSystem,
    mu: f64,
    x0: &RVec,
    times: &[f64],
) -> Result<Trajectory> {
    check_times(times)?;
    if sys.dim() > 2000 {
        return Err(Error::InvalidParameter(format!(
            "dense spectral solution limited to n <= 2000 (n = {})",
            sys.dim()
        )));
    }
    if x0.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            context: "initial condition",
            expected: sys.dim(),
            found: x0.len(),
        });
    }
    let a = sys.operator_at(mu)?;
    let spectral = equilibrium(sys, mu).and_then(|xbar| {
        let pairs = generalized_eig(&a, &sys.mass, true)?;
        let basis = CMat::from_columns(&pairs.iter().map(|p| p.right.clone()).collect::<Vec<_>>());
        let adjoint = CMat::from_columns(
            &pairs
                .iter()
                .map(|p| p.left.clone().expect("left vectors requested"))
                .collect::<Vec<_>>(),
        );
        let eigs: Vec<C64> = pairs.iter().map(|p| p.eigenvalue).collect();
        let e_dx = sys.mass.mul_real(&(x0 - &xbar)).map(|v| C64::new(v, 0.0));
        let coeffs = adjoint.ad_mul(&e_dx);
        Ok(modal_superposition(&xbar, &basis, &eigs, &coeffs, times))
    });
    match spectral {
        Ok((states, imag_residue)) => Ok(Trajectory {
            times: times.to_vec(),
            states,
            imag_residue,
            method: SolutionMethod::Spectral,
        }),
        Err(Error::DefectiveEigenbasis) | Err(Error::EquilibriumUndefined { .. }) => {
            warn!("spectral solution unavailable at mu = {mu}; integrating with Crank-Nicolson");
            let horizon = times[times.len() - 1] - times[0];
            crank_nicolson(sys, mu, x0, times, horizon / INTEGRATOR_STEPS as f64)
        }
        Err(e) => Err(e),
    }
}

/// LU of `E − A Δt/2`, the matrix `E + A Δt/2`, and `Δt`.
type CnStep = (LU<f64, Dyn, Dyn>, RMat, f64);

/// Crank–Nicolson integration of `E ẋ = A x + b`, sub-stepping every output
/// interval with a step no longer than `max_dt`.
pub fn crank_nicolson(
    sys: &FullOrderSystem,
    mu: f64,
    x0: &RVec,
    times: &[f64],
    max_dt: f64,
) -> Result<Trajectory> {
    check_times(times)?;
    if !(max_dt > 0.0) {
        return Err(Error::InvalidParameter(
            "integrator step must be positive".into(),
        ));
    }
    let a = sys.operator_at(mu)?;
    let b = sys.source_at(mu);
    let e = sys.mass.to_dense();
    let n = sys.dim();
    // keyed by the bit pattern of dt
    let mut solvers: HashMap<u64, CnStep> = HashMap::new();
    let mut states = RMat::zeros(n, times.len());
    let mut x = x0.clone();
    let mut t = 0.0;
    // advance from t = 0 to the first output time as well
    for (j, &target) in times.iter().enumerate() {
        let span = target - t;
        if span > 0.0 {
            let steps = (span / max_dt).ceil().max(1.0) as usize;
            let dt = span / steps as f64;
            let key = dt.to_bits();
            let (lu, rhs, dt) = &*solvers.entry(key).or_insert_with(|| {
                let lhs = &e - &a * (0.5 * dt);
                (lhs.lu(), &e + &a * (0.5 * dt), dt)
            });
            let forcing = &b * *dt;
            for _ in 0..steps {
                let r = rhs * &x + &forcing;
                x = lu.solve(&r).ok_or(Error::Singular { rcond: 0.0 })?;
            }
        }
        t = target;
        states.set_column(j, &x);
    }
    Ok(Trajectory {
        times: times.to_vec(),
        states,
        imag_residue: 0.0,
        method: SolutionMethod::CrankNicolson,
    })
}

/// Simulates every sampled ROM from `x0` and interpolates the states
/// componentwise at `mu`, one time instant at a time.
pub fn solution_interpolation(
    roms: &[Rom],
    mu: f64,
    x0: &RVec,
    times: &[f64],
    scheme: Scheme,
) -> Result<Trajectory> {
    if roms.len() < 2 {
        return Err(Error::InvalidParameter(
            "solution interpolation needs at least 2 ROMs".into(),
        ));
    }
    let n = roms[0].n();
    if roms.iter().any(|r| r.n() != n) {
        return Err(Error::DimensionMismatch {
            context: "ROM state dimension",
            expected: n,
            found: roms.iter().map(|r| r.n()).find(|&k| k != n).unwrap_or(n),
        });
    }
    let knots = Knots::new(&roms.iter().map(|r| r.mu).collect::<Vec<_>>())?;
    let w = knots.weights(mu, scheme)?;
    let mut states = RMat::zeros(n, times.len());
    let mut imag_residue = 0.0_f64;
    for (rom, &wk) in roms.iter().zip(&w) {
        if wk == 0.0 {
            continue;
        }
        let traj = simulate_rom(rom, x0, times)?;
        imag_residue = imag_residue.max(traj.imag_residue);
        states += traj.states * wk;
    }
    Ok(Trajectory {
        times: times.to_vec(),
        states,
        imag_residue,
        method: SolutionMethod::Interpolated,
    })
}

/// Same as [`solution_interpolation`] but routed through
/// [`interpolate_vectors`] on complex snapshots; kept for reference tests.
#[doc(hidden)]
pub fn solution_interpolation_naive(
    roms: &[Rom],
    mu: f64,
    x0: &RVec,
    times: &[f64],
    scheme: Scheme,
) -> Result<Trajectory> {
    let knots = Knots::new(&roms.iter().map(|r| r.mu).collect::<Vec<_>>())?;
    let trajs = roms
        .iter()
        .map(|r| simulate_rom(r, x0, times))
        .collect::<Result<Vec<_>>>()?;
    let n = roms[0].n();
    let mut states = RMat::zeros(n, times.len());
    for j in 0..times.len() {
        let snaps: Vec<CVec> = trajs
            .iter()
            .map(|t| t.state(j).map(|v| C64::new(v, 0.0)))
            .collect();
        let refs: Vec<&CVec> = snaps.iter().collect();
        let v = interpolate_vectors(&knots, &refs, mu, scheme)?;
        states.set_column(j, &v.map(|z| z.re));
    }
    Ok(Trajectory {
        times: times.to_vec(),
        states,
        imag_residue: 0.0,
        method: SolutionMethod::Interpolated,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryError {
    /// `‖F(x_ref(t) − x(t))‖ / max_t ‖F x_ref(t)‖` per time instant.
    pub instantaneous: Vec<f64>,
    /// Trapezoidal time average of the instantaneous error.
    pub integrated: f64,
}

pub fn trajectory_error(
    reference: &Trajectory,
    test: &Trajectory,
    factor: &CholeskyFactor,
) -> Result<TrajectoryError> {
    if reference.times != test.times || reference.states.shape() != test.states.shape() {
        return Err(Error::GridMismatch);
    }
    let t = &reference.times;
    let scale = reference
        .states
        .column_iter()
        .map(|c| factor.weighted_norm_real(&c.into_owned()))
        .fold(0.0_f64, f64::max);
    if scale == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let instantaneous: Vec<f64> = (0..t.len())
        .map(|j| {
            let d = reference.states.column(j) - test.states.column(j);
            factor.weighted_norm_real(&d) / scale
        })
        .collect();
    let integrated = if t.len() == 1 {
        instantaneous[0]
    } else {
        let mut acc = 0.0;
        for j in 0..t.len() - 1 {
            acc += 0.5 * (instantaneous[j] + instantaneous[j + 1]) * (t[j + 1] - t[j]);
        }
        acc / (t[t.len() - 1] - t[0])
    };
    Ok(TrajectoryError {
        instantaneous,
        integrated,
    })
}

/// `5 / |Re λ|` of the slowest stored eigenvalue at the first sample.
pub fn characteristic_horizon(db: &ModeDatabase) -> Result<f64> {
    let slowest = db.samples[0]
        .eigenvalues
        .iter()
        .map(|l| l.re.abs())
        .fold(f64::INFINITY, f64::min);
    if !(slowest > 0.0) || !slowest.is_finite() {
        return Err(Error::InvalidParameter(
            "slowest eigenvalue has zero real part; horizon undefined".into(),
        ));
    }
    Ok(HORIZON_CHARACTERISTIC_TIMES / slowest)
}

/// `count` uniformly spaced instants on `[0, horizon]`.
pub fn time_grid(horizon: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![0.0];
    }
    (0..count)
        .map(|k| horizon * k as f64 / (count - 1) as f64)
        .collect()
}

/// One line of a strategy comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub mu: f64,
    pub strategy: Strategy,
    pub error: f64,
    /// Mean wall-clock seconds for build + simulate.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub m: usize,
    pub schemes: Schemes,
    pub repetitions: usize,
    pub times: Vec<f64>,
}

/// Compares solution interpolation, direct and EDM-based ROMs against the
/// full-order solution at each validation parameter.
///
/// Equilibria are computed once per parameter outside the timed region.
/// Sampled ROMs used for solution interpolation keep their own equilibria.
pub fn benchmark_strategies(
    sys: &FullOrderSystem,
    db: &ModeDatabase,
    edm: &EdmModel,
    validation_mus: &[f64],
    x0: &RVec,
    config: &BenchmarkConfig,
) -> Result<Vec<BenchmarkRow>> {
    let lo = db.samples[0].mu;
    let hi = db.samples[db.p() - 1].mu;
    if let Some(&mu) = validation_mus.iter().find(|&&mu| mu < lo || mu > hi) {
        return Err(Error::OutOfDomain { mu, lo, hi });
    }
    let reps = config.repetitions.max(1);
    let factor = db.mass_factor();
    let sample_equilibria = db
        .samples
        .iter()
        .map(|s| equilibrium(sys, s.mu))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(3 * validation_mus.len());
    for &mu in validation_mus {
        let xbar = equilibrium(sys, mu)?;
        let reference = simulate_full(sys, mu, x0, &config.times)?;
        for strategy in [
            Strategy::SolutionInterpolation,
            Strategy::Direct,
            Strategy::Edm,
        ] {
            let run = || -> Result<Trajectory> {
                match strategy {
                    Strategy::SolutionInterpolation => {
                        let roms = db
                            .samples
                            .iter()
                            .zip(&sample_equilibria)
                            .map(|(s, eq)| build_rom_at_sample(db, s.mu, config.m, eq.clone()))
                            .collect::<Result<Vec<_>>>()?;
                        solution_interpolation(&roms, mu, x0, &config.times, config.schemes.modes)
                    }
                    _ => {
                        let rom = build_rom_interpolated(
                            db,
                            Some(edm),
                            mu,
                            config.m,
                            strategy,
                            config.schemes,
                            xbar.clone(),
                        )?;
                        simulate_rom(&rom, x0, &config.times)
                    }
                }
            };
            let traj = run()?;
            let error = trajectory_error(&reference, &traj, factor)?.integrated;
            let start = Instant::now();
            for _ in 0..reps {
                std::hint::black_box(run()?);
            }
            let seconds = start.elapsed().as_secs_f64() / reps as f64;
            rows.push(BenchmarkRow {
                mu,
                strategy,
                error,
                seconds,
            });
        }
    }
    Ok(rows)
}
