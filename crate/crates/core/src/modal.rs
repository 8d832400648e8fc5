//! Mode databases: eigenpairs sampled over the parameter, paired into
//! chains that follow one physical mode, and normalized consistently.
//!
//! The usual pipeline is
//! [`sample_spectrum`] → [`pair_modes`] → [`align_signs`] or
//! [`align_phases`] (or [`align`], which picks the right one).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    e_inner, fix_phase, generalized_eig, is_symmetric, spectral_order, CMat, CVec, CholeskyFactor,
    MassMatrix, SpectralPair, C64,
};
use crate::systems::{traveling_bump_family, FullOrderSystem};

/// MAC gap under which two candidate matches count as ambiguous.
pub const AMBIGUITY_MARGIN: f64 = 0.01;

/// Which eigenpairs count as the leading `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeSelection {
    /// Descending real part, ties by descending imaginary part.
    #[default]
    LeadingRealPart,
    /// Ascending `|Im λ|`; suited to undamped oscillators whose spectrum
    /// sits on the imaginary axis.
    LowestFrequency,
}

impl std::str::FromStr for ModeSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "leading-real-part" | "real" => Ok(ModeSelection::LeadingRealPart),
            "lowest-frequency" | "frequency" => Ok(ModeSelection::LowestFrequency),
            other => Err(Error::InvalidParameter(format!(
                "unknown mode selection '{other}'"
            ))),
        }
    }
}

/// Eigenpairs retained at one parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSample {
    pub mu: f64,
    pub eigenvalues: Vec<C64>,
    /// `n x m`, E-normalized columns.
    pub right: CMat,
    /// `n x m` left vectors with `ψᴴ E φ = 1`; absent for self-adjoint systems.
    pub left: Option<CMat>,
}

impl ModeSample {
    pub fn n(&self) -> usize {
        self.right.nrows()
    }

    pub fn m(&self) -> usize {
        self.right.ncols()
    }

    /// Left vectors, falling back to the right ones for self-adjoint data.
    pub fn adjoint(&self) -> &CMat {
        self.left.as_ref().unwrap_or(&self.right)
    }

    fn permute(&mut self, perm: &[usize]) {
        self.eigenvalues = perm.iter().map(|&j| self.eigenvalues[j]).collect();
        self.right = self.right.select_columns(perm);
        if let Some(l) = &self.left {
            self.left = Some(l.select_columns(perm));
        }
    }

    fn scale_mode(&mut self, i: usize, s: C64) {
        self.right.column_mut(i).apply(|z| *z *= s);
        if let Some(l) = &mut self.left {
            l.column_mut(i).apply(|z| *z *= s);
        }
    }
}

/// Gap between two consecutive samples where tracked chains change their
/// relative eigenvalue order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    /// Index `k` of the gap between samples `k` and `k + 1`.
    pub gap: usize,
    pub mu_from: f64,
    pub mu_to: f64,
    /// Eigenvalue rank of each chain at `k` and at `k + 1`.
    pub rank_before: Vec<usize>,
    pub rank_after: Vec<usize>,
}

/// Eigenmodes of a parameterized system at `p` sampled parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeDatabase {
    pub samples: Vec<ModeSample>,
    pub mass: MassMatrix,
    factor: CholeskyFactor,
    pub selection: ModeSelection,
    pub paired: bool,
    pub aligned: bool,
    pub crossings: Vec<Crossing>,
    pub warnings: Vec<String>,
}

impl ModeDatabase {
    /// Checks shapes and ordering. Imaginary parts that are pure round-off
    /// (below `1e-13` of the largest entry) are cleared.
    pub fn new(
        mut samples: Vec<ModeSample>,
        mass: MassMatrix,
        selection: ModeSelection,
    ) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "a mode database needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if samples.windows(2).any(|w| !(w[1].mu > w[0].mu)) {
            return Err(Error::InvalidParameter(
                "sample parameters must be strictly increasing".into(),
            ));
        }
        let n = mass.dim();
        let m = samples[0].m();
        for s in &samples {
            if s.n() != n {
                return Err(Error::DimensionMismatch {
                    context: "mode length vs mass matrix",
                    expected: n,
                    found: s.n(),
                });
            }
            if s.m() != m || s.eigenvalues.len() != m {
                return Err(Error::DimensionMismatch {
                    context: "modes per sample",
                    expected: m,
                    found: s.m().min(s.eigenvalues.len()),
                });
            }
            if let Some(l) = &s.left {
                if l.shape() != s.right.shape() {
                    return Err(Error::DimensionMismatch {
                        context: "left modes",
                        expected: m,
                        found: l.ncols(),
                    });
                }
            }
        }
        if m == 0 {
            return Err(Error::InvalidParameter(
                "a mode database needs at least one mode".into(),
            ));
        }
        let factor = mass.cholesky()?;
        if is_roundoff_real(&samples) {
            for s in &mut samples {
                s.right.apply(|z| z.im = 0.0);
                if let Some(l) = &mut s.left {
                    l.apply(|z| z.im = 0.0);
                }
                for l in &mut s.eigenvalues {
                    l.im = 0.0;
                }
            }
        }
        Ok(ModeDatabase {
            samples,
            mass,
            factor,
            selection,
            paired: false,
            aligned: false,
            crossings: Vec::new(),
            warnings: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.mass.dim()
    }

    pub fn p(&self) -> usize {
        self.samples.len()
    }

    pub fn m(&self) -> usize {
        self.samples[0].m()
    }

    pub fn mus(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.mu).collect()
    }

    pub fn mass_factor(&self) -> &CholeskyFactor {
        &self.factor
    }

    /// True when any stored mode or eigenvalue has a nonzero imaginary part.
    pub fn is_complex(&self) -> bool {
        self.samples.iter().any(|s| {
            s.right.iter().any(|z| z.im != 0.0)
                || s.eigenvalues.iter().any(|z| z.im != 0.0)
                || s.left
                    .as_ref()
                    .is_some_and(|l| l.iter().any(|z| z.im != 0.0))
        })
    }

    pub fn has_left(&self) -> bool {
        self.samples[0].left.is_some()
    }

    /// Index of the sample whose parameter equals `mu` to a relative `1e-12`.
    pub fn sample_index(&self, mu: f64) -> Option<usize> {
        let scale = self.samples.iter().fold(1.0_f64, |a, s| a.max(s.mu.abs()));
        self.samples
            .iter()
            .position(|s| (s.mu - mu).abs() <= 1e-12 * scale)
    }

    /// Mode `i` of every sample, as an `n x p` matrix.
    pub fn mode_matrix(&self, i: usize) -> CMat {
        self.side_matrix(i, false)
    }

    pub(crate) fn side_matrix(&self, i: usize, left: bool) -> CMat {
        let cols: Vec<_> = self
            .samples
            .iter()
            .map(|s| {
                if left {
                    s.adjoint().column(i).into_owned()
                } else {
                    s.right.column(i).into_owned()
                }
            })
            .collect();
        CMat::from_columns(&cols)
    }

    fn check_mode(&self, i: usize) -> Result<()> {
        if i >= self.m() {
            return Err(Error::InvalidParameter(format!(
                "mode index {i} out of range (database holds {} modes)",
                self.m()
            )));
        }
        Ok(())
    }
}

fn is_roundoff_real(samples: &[ModeSample]) -> bool {
    let mut scale = 0.0_f64;
    let mut imag = 0.0_f64;
    let mut eig_scale = 0.0_f64;
    let mut eig_imag = 0.0_f64;
    for s in samples {
        let mats = std::iter::once(&s.right).chain(s.left.as_ref());
        for m in mats {
            for z in m.iter() {
                scale = scale.max(z.norm());
                imag = imag.max(z.im.abs());
            }
        }
        for z in &s.eigenvalues {
            eig_scale = eig_scale.max(z.norm());
            eig_imag = eig_imag.max(z.im.abs());
        }
    }
    imag <= 1e-13 * scale && eig_imag <= 1e-13 * eig_scale.max(f64::MIN_POSITIVE)
}

/// Modal assurance criterion `|aᴴ E b|² / ((aᴴ E a)(bᴴ E b))`.
pub fn mac(a: &CVec, b: &CVec, mass: &MassMatrix) -> f64 {
    let ab = e_inner(a, b, mass).norm_sqr();
    let aa = e_inner(a, a, mass).re;
    let bb = e_inner(b, b, mass).re;
    if aa <= 0.0 || bb <= 0.0 {
        return 0.0;
    }
    (ab / (aa * bb)).clamp(0.0, 1.0)
}

/// Indices of `eigs` in selection order.
pub fn selection_order(eigs: &[C64], selection: ModeSelection) -> Vec<usize> {
    let mut order = spectral_order(eigs);
    if selection == ModeSelection::LowestFrequency {
        order.sort_by(|&a, &b| eigs[a].im.abs().total_cmp(&eigs[b].im.abs()));
    }
    order
}

/// Full spectrum at `mu`, with conjugate members (negative imaginary part)
/// of real-operator pairs removed, in selection order.
pub fn spectrum_at(
    sys: &FullOrderSystem,
    mu: f64,
    selection: ModeSelection,
) -> Result<Vec<SpectralPair>> {
    let a = sys.operator_at(mu)?;
    let want_left = !is_symmetric(&a);
    let pairs = generalized_eig(&a, &sys.mass, want_left).map_err(|e| Error::SampleFailed {
        mu,
        message: e.to_string(),
    })?;
    let scale = pairs
        .iter()
        .fold(f64::MIN_POSITIVE, |acc, p| acc.max(p.eigenvalue.norm()));
    let tol = 1e-9 * scale;
    let mut kept: Vec<SpectralPair> = pairs
        .into_iter()
        .filter(|p| p.eigenvalue.im >= -tol)
        .collect();
    if selection == ModeSelection::LowestFrequency {
        kept.sort_by(|a, b| a.eigenvalue.im.abs().total_cmp(&b.eigenvalue.im.abs()));
    }
    Ok(kept)
}

/// Solves the eigenproblem at each parameter and keeps the leading `m`
/// pairs. Left vectors are stored when `A(μ)` is not symmetric.
pub fn sample_spectrum(
    sys: &FullOrderSystem,
    mus: &[f64],
    m: usize,
    selection: ModeSelection,
) -> Result<ModeDatabase> {
    if mus.len() < 2 {
        return Err(Error::InvalidParameter(
            "at least 2 parameter samples are required".into(),
        ));
    }
    if m == 0 || m > sys.dim() {
        return Err(Error::InvalidParameter(format!(
            "mode count {m} must lie in 1..={}",
            sys.dim()
        )));
    }
    let samples: Vec<ModeSample> = mus
        .par_iter()
        .map(|&mu| {
            let pairs = spectrum_at(sys, mu, selection)?;
            if pairs.len() < m {
                return Err(Error::SampleFailed {
                    mu,
                    message: format!(
                        "only {} trackable modes available, {m} requested",
                        pairs.len()
                    ),
                });
            }
            let kept = &pairs[..m];
            let right =
                CMat::from_columns(&kept.iter().map(|p| p.right.clone()).collect::<Vec<_>>());
            let left = if kept[0].left.is_some() && !is_symmetric(&sys.operator_at(mu)?) {
                Some(CMat::from_columns(
                    &kept
                        .iter()
                        .map(|p| p.left.clone().expect("left requested"))
                        .collect::<Vec<_>>(),
                ))
            } else {
                None
            };
            Ok(ModeSample {
                mu,
                eigenvalues: kept.iter().map(|p| p.eigenvalue).collect(),
                right,
                left,
            })
        })
        .collect::<Result<_>>()?;
    ModeDatabase::new(samples, sys.mass.clone(), selection)
}

/// Synthetic database of traveling Gaussian bumps: mode `i` is a bump of
/// width `widths[i]` centred at `μ`, with eigenvalue `-(i + 1)(1 + μ)`.
pub fn bump_database(n: usize, widths: &[f64], mus: &[f64]) -> Result<ModeDatabase> {
    let samples = mus
        .iter()
        .map(|&mu| {
            let cols = widths
                .iter()
                .map(|&w| traveling_bump_family(n, w, mu).map(|v| v.map(|x| C64::new(x, 0.0))))
                .collect::<Result<Vec<_>>>()?;
            Ok(ModeSample {
                mu,
                eigenvalues: (0..widths.len())
                    .map(|i| C64::new(-((i + 1) as f64) * (1.0 + mu), 0.0))
                    .collect(),
                right: CMat::from_columns(&cols),
                left: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut db = ModeDatabase::new(
        samples,
        MassMatrix::identity(n),
        ModeSelection::LeadingRealPart,
    )?;
    db.paired = true;
    Ok(db)
}

fn ranks(eigs: &[C64], selection: ModeSelection) -> Vec<usize> {
    let order = selection_order(eigs, selection);
    let mut rank = vec![0; eigs.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    rank
}

/// Matches modes between consecutive samples by greedy maximum MAC and
/// reorders every sample so that column `i` follows one chain.
///
/// When another candidate sharing a row or column comes within
/// [`AMBIGUITY_MARGIN`] of the best MAC, the pair with the closest
/// eigenvalues wins and a warning is recorded. Gaps where the chains change
/// their relative eigenvalue order are listed in `crossings`.
pub fn pair_modes(mut db: ModeDatabase) -> Result<ModeDatabase> {
    let m = db.m();
    let mut warnings = Vec::new();
    for k in 0..db.p() - 1 {
        let (head, tail) = db.samples.split_at_mut(k + 1);
        let cur = &head[k];
        let next = &mut tail[0];
        let mut macs = vec![vec![0.0; m]; m];
        for (i, row) in macs.iter_mut().enumerate() {
            let a = cur.right.column(i).into_owned();
            for (j, v) in row.iter_mut().enumerate() {
                *v = mac(&a, &next.right.column(j).into_owned(), &db.mass);
            }
        }
        let mut perm = vec![usize::MAX; m];
        let mut used = vec![false; m];
        for _ in 0..m {
            let mut best = (usize::MAX, usize::MAX, -1.0);
            for i in (0..m).filter(|&i| perm[i] == usize::MAX) {
                for j in (0..m).filter(|&j| !used[j]) {
                    if macs[i][j] > best.2 {
                        best = (i, j, macs[i][j]);
                    }
                }
            }
            let (bi, bj, bv) = best;
            let mut contenders = vec![(bi, bj)];
            for i in (0..m).filter(|&i| perm[i] == usize::MAX) {
                for j in (0..m).filter(|&j| !used[j]) {
                    if (i == bi) != (j == bj) && macs[i][j] >= bv - AMBIGUITY_MARGIN {
                        contenders.push((i, j));
                    }
                }
            }
            let (ci, cj) = if contenders.len() > 1 {
                warnings.push(format!(
                    "degenerate pairing between mu = {} and mu = {}: {} matches within {AMBIGUITY_MARGIN} of MAC {bv:.4}",
                    cur.mu,
                    next.mu,
                    contenders.len()
                ));
                *contenders
                    .iter()
                    .min_by(|x, y| {
                        let dx = (cur.eigenvalues[x.0] - next.eigenvalues[x.1]).norm();
                        let dy = (cur.eigenvalues[y.0] - next.eigenvalues[y.1]).norm();
                        dx.total_cmp(&dy)
                    })
                    .expect("non-empty")
            } else {
                (bi, bj)
            };
            perm[ci] = cj;
            used[cj] = true;
        }
        next.permute(&perm);
    }
    db.crossings = (0..db.p() - 1)
        .filter_map(|k| {
            let before = ranks(&db.samples[k].eigenvalues, db.selection);
            let after = ranks(&db.samples[k + 1].eigenvalues, db.selection);
            (before != after).then(|| Crossing {
                gap: k,
                mu_from: db.samples[k].mu,
                mu_to: db.samples[k + 1].mu,
                rank_before: before,
                rank_after: after,
            })
        })
        .collect();
    db.warnings.extend(warnings);
    db.paired = true;
    db.aligned = false;
    Ok(db)
}

/// Index of the largest-magnitude entry; ties resolve to the first.
fn dominant_index(v: &CVec) -> usize {
    let mut best = 0;
    let mut best_mag = -1.0;
    for (i, z) in v.iter().enumerate() {
        let mag = z.norm();
        if mag > best_mag * (1.0 + 1e-12) {
            best = i;
            best_mag = mag;
        }
    }
    best
}

/// Sign alignment of real modes along each chain.
///
/// The first sample of each chain is flipped so that its largest-magnitude
/// entry is positive; then each later sample is flipped whenever its
/// E-inner product with the already aligned previous sample is negative.
pub fn align_signs(mut db: ModeDatabase) -> Result<ModeDatabase> {
    if !db.paired {
        return Err(Error::DatabaseState("paired"));
    }
    if db.is_complex() {
        return Err(Error::InvalidParameter(
            "sign alignment applies to real modes only; use phase alignment".into(),
        ));
    }
    let minus = C64::new(-1.0, 0.0);
    for i in 0..db.m() {
        let first = db.samples[0].right.column(i).into_owned();
        if first[dominant_index(&first)].re < 0.0 {
            db.samples[0].scale_mode(i, minus);
        }
        for k in 0..db.p() - 1 {
            let prev = db.samples[k].right.column(i).into_owned();
            let next = db.samples[k + 1].right.column(i).into_owned();
            let a = e_inner(&prev, &next, &db.mass).re;
            if a < 0.0 {
                db.samples[k + 1].scale_mode(i, minus);
            } else if a == 0.0 {
                db.warnings.push(format!(
                    "mode {i}: samples at mu = {} and mu = {} are E-orthogonal; sign kept",
                    db.samples[k].mu,
                    db.samples[k + 1].mu
                ));
            }
        }
    }
    for s in &mut db.samples {
        s.right.apply(|z| z.im = 0.0);
        if let Some(l) = &mut s.left {
            l.apply(|z| z.im = 0.0);
        }
    }
    db.aligned = true;
    Ok(db)
}

/// Phase alignment of (possibly complex) modes against the first sample.
///
/// The first sample is rotated so that its largest entry is real and
/// positive. Every later sample is multiplied by `e^{iθ}` with
/// `θ = -arg(φ⁽¹⁾ᴴ E φ⁽ᵏ⁾)`, the minimizer of `‖F(φ⁽ᵏ⁾e^{iθ} − φ⁽¹⁾)‖`.
pub fn align_phases(mut db: ModeDatabase) -> Result<ModeDatabase> {
    if !db.paired {
        return Err(Error::DatabaseState("paired"));
    }
    for i in 0..db.m() {
        let mut first = db.samples[0].right.column(i).into_owned();
        let rot = fix_phase(&mut first);
        db.samples[0].scale_mode(i, rot);
        for k in 1..db.p() {
            let v = db.samples[k].right.column(i).into_owned();
            let c = e_inner(&first, &v, &db.mass);
            if c.norm() == 0.0 {
                db.warnings.push(format!(
                    "mode {i}: sample at mu = {} is E-orthogonal to the reference; phase kept",
                    db.samples[k].mu
                ));
                continue;
            }
            db.samples[k].scale_mode(i, optimal_rotation(c));
        }
    }
    db.aligned = true;
    Ok(db)
}

/// `e^{iθ}` with `θ = -arg(c)`.
pub fn optimal_rotation(c: C64) -> C64 {
    c.conj() / c.norm()
}

/// Sign alignment for real databases, phase alignment otherwise.
pub fn align(db: ModeDatabase) -> Result<ModeDatabase> {
    if db.is_complex() {
        align_phases(db)
    } else {
        align_signs(db)
    }
}

/// Sample, pair and align in one go.
pub fn build_database(
    sys: &FullOrderSystem,
    mus: &[f64],
    m: usize,
    selection: ModeSelection,
) -> Result<ModeDatabase> {
    align(pair_modes(sample_spectrum(sys, mus, m, selection)?)?)
}

/// Picks the member of `candidates` that continues chain `i` of an aligned
/// database at an unsampled `mu`, and normalizes it the same way the
/// database was: sign against the nearest sample for real data, phase
/// against the first sample for complex data.
pub fn track_mode(
    db: &ModeDatabase,
    i: usize,
    mu: f64,
    candidates: &[SpectralPair],
) -> Result<(C64, CVec)> {
    db.check_mode(i)?;
    if !db.aligned {
        return Err(Error::DatabaseState("aligned"));
    }
    let nearest = db
        .samples
        .iter()
        .min_by(|a, b| (a.mu - mu).abs().total_cmp(&(b.mu - mu).abs()))
        .expect("non-empty");
    let reference = nearest.right.column(i).into_owned();
    let best = candidates
        .iter()
        .max_by(|a, b| {
            mac(&reference, &a.right, &db.mass).total_cmp(&mac(&reference, &b.right, &db.mass))
        })
        .ok_or_else(|| Error::InvalidParameter("no candidate modes".into()))?;
    let mut v = best.right.clone();
    if db.is_complex() {
        let first = db.samples[0].right.column(i).into_owned();
        let c = e_inner(&first, &v, &db.mass);
        if c.norm() > 0.0 {
            let r = optimal_rotation(c);
            v.apply(|z| *z *= r);
        }
    } else {
        if e_inner(&reference, &v, &db.mass).re < 0.0 {
            v.apply(|z| *z = -*z);
        }
        v.apply(|z| z.im = 0.0);
    }
    Ok((best.eigenvalue, v))
}
