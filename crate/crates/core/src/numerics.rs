//! Dense linear-algebra kernels: Cholesky factors of the mass matrix,
//! the generalized eigenproblem `A φ = λ E φ` with left vectors, truncated
//! SVD and plain linear solves.
//!
//! Everything here is a pure function of its inputs. Matrices are nalgebra
//! column-major `DMatrix` values; modes and other complex data use
//! [`C64`] entries even when they happen to be real.

use nalgebra::linalg::{Schur, SymmetricEigen, SVD};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use nalgebra::Complex;

pub type C64 = Complex<f64>;
pub type RMat = DMatrix<f64>;
pub type CMat = DMatrix<C64>;
pub type RVec = DVector<f64>;
pub type CVec = DVector<C64>;

/// Relative tolerance used when deciding whether a matrix is symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

const SCHUR_MAX_ITER_PER_DIM: usize = 200;

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|v| C64::new(v, 0.0))
}

pub fn to_complex_vec(v: &RVec) -> CVec {
    v.map(|x| C64::new(x, 0.0))
}

/// Largest absolute entry.
pub fn max_abs(m: &RMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Relative asymmetry `max |a_ij - a_ji| / max |a_ij|` of a square matrix.
pub fn asymmetry(a: &RMat) -> f64 {
    let scale = max_abs(a);
    if scale == 0.0 {
        return 0.0;
    }
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst / scale
}

pub fn is_symmetric(a: &RMat) -> bool {
    a.is_square() && asymmetry(a) <= SYMMETRY_TOL
}

/// Mass matrix `E`. Diagonal (lumped) masses are kept diagonal so that wide
/// synthetic problems never materialize an `n x n` array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MassMatrix {
    Diagonal(RVec),
    Dense(RMat),
}

impl MassMatrix {
    pub fn identity(n: usize) -> Self {
        MassMatrix::Diagonal(RVec::from_element(n, 1.0))
    }

    pub fn dim(&self) -> usize {
        match self {
            MassMatrix::Diagonal(d) => d.len(),
            MassMatrix::Dense(m) => m.nrows(),
        }
    }

    pub fn to_dense(&self) -> RMat {
        match self {
            MassMatrix::Diagonal(d) => RMat::from_diagonal(d),
            MassMatrix::Dense(m) => m.clone(),
        }
    }

    /// Nonzero entries as zero-based `(row, col, value)` triplets in
    /// column-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        match self {
            MassMatrix::Diagonal(d) => d
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i, i, *v))
                .collect(),
            MassMatrix::Dense(m) => {
                let mut out = Vec::new();
                for j in 0..m.ncols() {
                    for i in 0..m.nrows() {
                        if m[(i, j)] != 0.0 {
                            out.push((i, j, m[(i, j)]));
                        }
                    }
                }
                out
            }
        }
    }

    /// Rebuilds a mass matrix from triplets, staying diagonal when possible.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut diagonal = true;
        for &(i, j, _) in triplets {
            if i >= n || j >= n {
                return Err(Error::DimensionMismatch {
                    context: "mass triplet index",
                    expected: n,
                    found: i.max(j),
                });
            }
            if i != j {
                diagonal = false;
            }
        }
        if diagonal {
            let mut d = RVec::zeros(n);
            for &(i, _, v) in triplets {
                d[i] = v;
            }
            Ok(MassMatrix::Diagonal(d))
        } else {
            let mut m = RMat::zeros(n, n);
            for &(i, j, v) in triplets {
                m[(i, j)] = v;
            }
            Ok(MassMatrix::Dense(m))
        }
    }

    pub fn mul_vec(&self, x: &CVec) -> CVec {
        match self {
            MassMatrix::Diagonal(d) => CVec::from_fn(x.len(), |i, _| x[i] * d[i]),
            MassMatrix::Dense(m) => real_times_complex(m, x),
        }
    }

    pub fn mul_real(&self, x: &RVec) -> RVec {
        match self {
            MassMatrix::Diagonal(d) => x.component_mul(d),
            MassMatrix::Dense(m) => m * x,
        }
    }

    pub fn cholesky(&self) -> Result<CholeskyFactor> {
        match self {
            MassMatrix::Diagonal(d) => {
                let mut f = RVec::zeros(d.len());
                for (i, v) in d.iter().enumerate() {
                    if !(*v > 0.0) || !v.is_finite() {
                        return Err(Error::NotPositiveDefinite {
                            pivot: i,
                            value: *v,
                        });
                    }
                    f[i] = v.sqrt();
                }
                Ok(CholeskyFactor::Diagonal(f))
            }
            MassMatrix::Dense(m) => cholesky_factor(m),
        }
    }
}

/// `F` with `FᵀF = E`, upper triangular.
#[derive(Debug, Clone, PartialEq)]
pub enum CholeskyFactor {
    Diagonal(RVec),
    Dense { upper: RMat, upper_c: CMat },
}

/// Factors a symmetric positive-definite matrix as `E = FᵀF` with `F` upper
/// triangular. The pivot index in [`Error::NotPositiveDefinite`] is zero-based.
pub fn cholesky_factor(e: &RMat) -> Result<CholeskyFactor> {
    if !e.is_square() {
        return Err(Error::DimensionMismatch {
            context: "cholesky_factor (square)",
            expected: e.nrows(),
            found: e.ncols(),
        });
    }
    let asym = asymmetry(e);
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let n = e.nrows();
    let mut f = RMat::zeros(n, n);
    for j in 0..n {
        let mut s = e[(j, j)];
        for k in 0..j {
            s -= f[(k, j)] * f[(k, j)];
        }
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: s });
        }
        let d = s.sqrt();
        f[(j, j)] = d;
        for i in (j + 1)..n {
            let mut t = e[(j, i)];
            for k in 0..j {
                t -= f[(k, j)] * f[(k, i)];
            }
            f[(j, i)] = t / d;
        }
    }
    let upper_c = to_complex(&f);
    Ok(CholeskyFactor::Dense { upper: f, upper_c })
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        match self {
            CholeskyFactor::Diagonal(d) => d.len(),
            CholeskyFactor::Dense { upper, .. } => upper.nrows(),
        }
    }

    pub fn upper(&self) -> RMat {
        match self {
            CholeskyFactor::Diagonal(d) => RMat::from_diagonal(d),
            CholeskyFactor::Dense { upper, .. } => upper.clone(),
        }
    }

    /// `F x`
    pub fn apply(&self, x: &CVec) -> CVec {
        match self {
            CholeskyFactor::Diagonal(d) => CVec::from_fn(x.len(), |i, _| x[i] * d[i]),
            CholeskyFactor::Dense { upper_c, .. } => upper_c * x,
        }
    }

    /// `F X`
    pub fn apply_mat(&self, x: &CMat) -> CMat {
        match self {
            CholeskyFactor::Diagonal(d) => {
                CMat::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] * d[i])
            }
            CholeskyFactor::Dense { upper_c, .. } => upper_c * x,
        }
    }

    /// `F⁻¹ X` by back substitution.
    pub fn solve_mat(&self, x: &CMat) -> CMat {
        match self {
            CholeskyFactor::Diagonal(d) => {
                CMat::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] / d[i])
            }
            CholeskyFactor::Dense { upper_c, .. } => upper_c
                .solve_upper_triangular(x)
                .expect("Cholesky factor has a positive diagonal"),
        }
    }

    pub fn solve(&self, x: &CVec) -> CVec {
        let m = CMat::from_column_slice(x.len(), 1, x.as_slice());
        CVec::from_column_slice(self.solve_mat(&m).as_slice())
    }

    /// `F⁻ᵀ X` by forward substitution.
    pub fn solve_transpose_mat(&self, x: &CMat) -> CMat {
        match self {
            CholeskyFactor::Diagonal(d) => {
                CMat::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] / d[i])
            }
            CholeskyFactor::Dense { upper_c, .. } => upper_c
                .tr_solve_upper_triangular(x)
                .expect("Cholesky factor has a positive diagonal"),
        }
    }

    /// The F-weighted norm `‖F x‖₂`, which equals `sqrt(xᴴ E x)`.
    pub fn weighted_norm(&self, x: &CVec) -> f64 {
        self.apply(x).norm()
    }

    pub fn weighted_norm_real(&self, x: &RVec) -> f64 {
        match self {
            CholeskyFactor::Diagonal(d) => x.component_mul(d).norm(),
            CholeskyFactor::Dense { upper, .. } => (upper * x).norm(),
        }
    }
}

pub(crate) fn real_times_complex(m: &RMat, x: &CVec) -> CVec {
    let re = m * x.map(|z| z.re);
    let im = m * x.map(|z| z.im);
    CVec::from_fn(m.nrows(), |i, _| C64::new(re[i], im[i]))
}

/// Mass-weighted inner product `aᴴ E b`.
pub fn e_inner(a: &CVec, b: &CVec, mass: &MassMatrix) -> C64 {
    a.dotc(&mass.mul_vec(b))
}

/// One eigenvalue with its right vector and, optionally, its left vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPair {
    pub eigenvalue: C64,
    /// Right eigenvector, normalized so that `φᴴ E φ = 1`.
    pub right: CVec,
    /// Left eigenvector scaled so that `ψᴴ E φ = 1`.
    pub left: Option<CVec>,
}

/// Indices of `eigs` ordered by descending real part; eigenvalues whose real
/// parts agree to a relative `1e-9` form one group and are ordered by
/// descending imaginary part inside it.
pub fn spectral_order(eigs: &[C64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..eigs.len()).collect();
    idx.sort_by(|&a, &b| eigs[b].re.total_cmp(&eigs[a].re));
    let scale = eigs
        .iter()
        .map(|l| l.norm())
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let tol = 1e-9 * scale;
    let mut start = 0;
    while start < idx.len() {
        let anchor = eigs[idx[start]].re;
        let mut end = start + 1;
        while end < idx.len() && (anchor - eigs[idx[end]].re).abs() <= tol {
            end += 1;
        }
        idx[start..end].sort_by(|&a, &b| eigs[b].im.total_cmp(&eigs[a].im));
        start = end;
    }
    idx
}

/// Reorders pairs by [`spectral_order`].
pub fn sort_spectrum(pairs: &mut Vec<SpectralPair>) {
    let eigs: Vec<C64> = pairs.iter().map(|p| p.eigenvalue).collect();
    let order = spectral_order(&eigs);
    let mut taken: Vec<Option<SpectralPair>> = pairs.drain(..).map(Some).collect();
    pairs.extend(
        order
            .into_iter()
            .map(|i| taken[i].take().expect("permutation")),
    );
}

/// Rotates `v` so that its largest-magnitude component is real and positive.
pub(crate) fn fix_phase(v: &mut CVec) -> C64 {
    let mut best = 0;
    let mut best_mag = -1.0;
    for (i, z) in v.iter().enumerate() {
        let mag = z.norm();
        if mag > best_mag * (1.0 + 1e-12) {
            best = i;
            best_mag = mag;
        }
    }
    if best_mag <= 0.0 {
        return C64::new(1.0, 0.0);
    }
    let rot = v[best].conj() / best_mag;
    v.apply(|z| *z *= rot);
    rot
}

/// Solves `A φ = λ E φ` for the full spectrum.
///
/// The pencil is reduced with the mass Cholesky factor to the standard
/// matrix `C = F⁻ᵀ A F⁻¹`. Symmetric `A` goes through a symmetric
/// eigensolver and returns real E-orthonormal modes, with left vectors
/// aliased to right ones. Otherwise `C` is brought to complex Schur form,
/// eigenvectors of the triangular factor are found by back substitution,
/// and the left vectors are read off the rows of the inverse eigenvector
/// matrix so that `ψᴴ E φ = 1` holds by construction.
///
/// Pairs come back sorted by [`sort_spectrum`]. Each right vector is
/// rotated so that its largest component is real and positive.
pub fn generalized_eig(a: &RMat, e: &MassMatrix, want_left: bool) -> Result<Vec<SpectralPair>> {
    let n = e.dim();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "generalized_eig operator",
            expected: n,
            found: if a.nrows() != n { a.nrows() } else { a.ncols() },
        });
    }
    let factor = e.cholesky()?;
    let c = reduce_pencil(a, &factor);

    let mut pairs = if is_symmetric(a) {
        symmetric_pairs(c, &factor, n, want_left)?
    } else {
        general_pairs(c, &factor, n, want_left)?
    };
    sort_spectrum(&mut pairs);
    Ok(pairs)
}

/// `F⁻ᵀ A F⁻¹` as a real matrix.
fn reduce_pencil(a: &RMat, factor: &CholeskyFactor) -> RMat {
    match factor {
        CholeskyFactor::Diagonal(d) => {
            RMat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] / (d[i] * d[j]))
        }
        CholeskyFactor::Dense { upper, .. } => {
            let left = upper
                .tr_solve_upper_triangular(a)
                .expect("positive diagonal");
            let right_t = upper
                .tr_solve_upper_triangular(&left.transpose())
                .expect("positive diagonal");
            right_t.transpose()
        }
    }
}

fn symmetric_pairs(
    c: RMat,
    factor: &CholeskyFactor,
    n: usize,
    want_left: bool,
) -> Result<Vec<SpectralPair>> {
    let sym = (&c + c.transpose()) * 0.5;
    let max_iter = SCHUR_MAX_ITER_PER_DIM * n.max(1);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, max_iter).ok_or(Error::NoConvergence {
        iterations: max_iter,
    })?;
    let y = to_complex(&eig.eigenvectors);
    let phi = factor.solve_mat(&y);
    let mut pairs = Vec::with_capacity(n);
    for k in 0..n {
        let mut right = phi.column(k).into_owned();
        fix_phase(&mut right);
        // symmetric reduction yields real vectors; clear signed zeros
        right.apply(|z| z.im = 0.0);
        let left = want_left.then(|| right.clone());
        pairs.push(SpectralPair {
            eigenvalue: C64::new(eig.eigenvalues[k], 0.0),
            right,
            left,
        });
    }
    Ok(pairs)
}

fn general_pairs(
    c: RMat,
    factor: &CholeskyFactor,
    n: usize,
    want_left: bool,
) -> Result<Vec<SpectralPair>> {
    let max_iter = SCHUR_MAX_ITER_PER_DIM * n.max(1);
    let schur =
        Schur::try_new(to_complex(&c), f64::EPSILON, max_iter).ok_or(Error::NoConvergence {
            iterations: max_iter,
        })?;
    let (q, t) = schur.unpack();
    let x = triangular_eigenvectors(&t);
    let mut y = q * x;
    for k in 0..n {
        let nrm = y.column(k).norm();
        if nrm > 0.0 {
            y.column_mut(k).apply(|z| *z /= nrm);
        }
    }
    // phase convention is applied in φ-space; F is real so rotating y is equivalent
    let mut phi = factor.solve_mat(&y);
    for k in 0..n {
        let mut col = phi.column(k).into_owned();
        let rot = fix_phase(&mut col);
        phi.set_column(k, &col);
        y.column_mut(k).apply(|z| *z *= rot);
    }

    let left = if want_left {
        let inv = y
            .clone()
            .lu()
            .try_inverse()
            .ok_or(Error::DefectiveEigenbasis)?;
        let cond = y.norm() * inv.norm();
        if !cond.is_finite() || cond > 1e12 {
            return Err(Error::DefectiveEigenbasis);
        }
        // rows of Y⁻¹ are zᴴ; ψ = F⁻¹ z
        Some(factor.solve_mat(&inv.adjoint()))
    } else {
        None
    };

    Ok((0..n)
        .map(|k| SpectralPair {
            eigenvalue: t[(k, k)],
            right: phi.column(k).into_owned(),
            left: left.as_ref().map(|l| l.column(k).into_owned()),
        })
        .collect())
}

/// Eigenvectors of an upper-triangular matrix, one per column, by back
/// substitution. Tiny denominators are clamped to `eps * ‖T‖`.
fn triangular_eigenvectors(t: &CMat) -> CMat {
    let n = t.nrows();
    let norm = t.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
    let smin = (f64::EPSILON * norm).max(f64::MIN_POSITIVE);
    let mut x = CMat::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        x[(k, k)] = C64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut s = C64::new(0.0, 0.0);
            for l in (j + 1)..=k {
                s += t[(j, l)] * x[(l, k)];
            }
            let mut d = t[(j, j)] - lambda;
            if d.norm() < smin {
                d = C64::new(smin, 0.0);
            }
            x[(j, k)] = -s / d;
            let big = x[(j, k)].norm();
            if big > 1e100 {
                let scale = 1.0 / big;
                for l in j..=k {
                    x[(l, k)] *= scale;
                }
            }
        }
    }
    x
}

/// Leading singular triplets of a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSvd {
    /// `n x r` orthonormal columns.
    pub left: CMat,
    /// All `min(n, p)` singular values, non-increasing.
    pub singular_values: Vec<f64>,
    /// `p x r` orthonormal columns (`V`, not `Vᴴ`).
    pub right: CMat,
}

impl TruncatedSvd {
    pub fn rank(&self) -> usize {
        self.left.ncols()
    }
}

/// Thin SVD keeping `r` triplets, `1 ≤ r ≤ min(n, p)`.
pub fn truncated_svd(m: &CMat, r: usize) -> Result<TruncatedSvd> {
    let max = m.nrows().min(m.ncols());
    if r < 1 || r > max {
        return Err(Error::RankOutOfRange {
            rank: r,
            min: 1,
            max,
        });
    }
    svd_keep(m, r)
}

/// Same as [`truncated_svd`] but also accepts `r = 0`.
pub(crate) fn svd_keep(m: &CMat, r: usize) -> Result<TruncatedSvd> {
    let max = m.nrows().min(m.ncols());
    if r > max {
        return Err(Error::RankOutOfRange {
            rank: r,
            min: 0,
            max,
        });
    }
    let max_iter = SCHUR_MAX_ITER_PER_DIM * max.max(1);
    let svd = SVD::try_new(m.clone(), true, true, f64::EPSILON, max_iter).ok_or(
        Error::NoConvergence {
            iterations: max_iter,
        },
    )?;
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values = order.iter().map(|&k| svd.singular_values[k]).collect();
    let left = CMat::from_fn(m.nrows(), r, |i, j| u[(i, order[j])]);
    let right = CMat::from_fn(m.ncols(), r, |i, j| v_t[(order[j], i)].conj());
    Ok(TruncatedSvd {
        left,
        singular_values,
        right,
    })
}

/// Solves `A x = b` by LU with partial pivoting.
///
/// The reciprocal condition indicator in [`Error::Singular`] is the ratio
/// of the smallest to the largest pivot magnitude.
pub fn solve_linear(a: &RMat, b: &RVec) -> Result<RVec> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            context: "solve_linear (square)",
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            context: "solve_linear right-hand side",
            expected: a.nrows(),
            found: b.len(),
        });
    }
    let lu = a.clone().lu();
    let u = lu.u();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0_f64;
    for i in 0..u.nrows() {
        let p = u[(i, i)].abs();
        lo = lo.min(p);
        hi = hi.max(p);
    }
    let rcond = if hi > 0.0 { lo / hi } else { 0.0 };
    if !(rcond > 1e-14) {
        return Err(Error::Singular { rcond });
    }
    lu.solve(b).ok_or(Error::Singular { rcond })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn dense(m: RMat) -> MassMatrix {
        MassMatrix::Dense(m)
    }

    #[test]
    fn cholesky_diagonal_and_identity() {
        let f = cholesky_factor(&dmatrix![4.0, 0.0; 0.0, 9.0]).unwrap();
        assert_eq!(f.upper(), dmatrix![2.0, 0.0; 0.0, 3.0]);
        let f = cholesky_factor(&RMat::identity(5, 5)).unwrap();
        assert_eq!(f.upper(), RMat::identity(5, 5));
    }

    #[test]
    fn cholesky_recomposes() {
        let e = dmatrix![2.0, 1.0; 1.0, 2.0];
        let f = cholesky_factor(&e).unwrap().upper();
        assert_eq!(f[(1, 0)], 0.0);
        assert!((f.transpose() * &f - &e).norm() <= 1e-12);
    }

    #[test]
    fn cholesky_errors() {
        let err = cholesky_factor(&dmatrix![1.0, 2.0; 0.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::NotSymmetric { .. }));
        let err = cholesky_factor(&dmatrix![1.0, 2.0; 2.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { pivot: 1, .. }));
        let err = MassMatrix::Diagonal(RVec::from_vec(vec![1.0, 0.0]))
            .cholesky()
            .unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { pivot: 1, .. }));
    }

    #[test]
    fn eig_diagonal() {
        let pairs = generalized_eig(
            &dmatrix![-1.0, 0.0; 0.0, -2.0],
            &MassMatrix::identity(2),
            true,
        )
        .unwrap();
        assert!((pairs[0].eigenvalue - C64::new(-1.0, 0.0)).norm() < 1e-14);
        assert!((pairs[1].eigenvalue - C64::new(-2.0, 0.0)).norm() < 1e-14);
        assert!((pairs[0].right[0].re - 1.0).abs() < 1e-14);
        assert!((pairs[1].right[1].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eig_companion_matrix() {
        // λ² + 3λ + 2 = 0
        let a = dmatrix![0.0, 1.0; -2.0, -3.0];
        let pairs = generalized_eig(&a, &MassMatrix::identity(2), true).unwrap();
        assert!((pairs[0].eigenvalue - C64::new(-1.0, 0.0)).norm() < 1e-12);
        assert!((pairs[1].eigenvalue - C64::new(-2.0, 0.0)).norm() < 1e-12);
        let v = &pairs[0].right;
        assert!((v[0] + v[1]).norm() < 1e-12);
        for p in &pairs {
            let psi = p.left.as_ref().unwrap();
            assert!((psi.dotc(&p.right) - C64::new(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn eig_symmetric_is_real_and_orthonormal() {
        let a = dmatrix![-2.0, 1.0, 0.0; 1.0, -3.0, 0.5; 0.0, 0.5, -1.0];
        let e = dmatrix![2.0, 0.5, 0.0; 0.5, 1.0, 0.1; 0.0, 0.1, 1.5];
        let mass = dense(e.clone());
        let pairs = generalized_eig(&a, &mass, true).unwrap();
        for (i, p) in pairs.iter().enumerate() {
            assert_eq!(p.eigenvalue.im, 0.0);
            for (j, q) in pairs.iter().enumerate() {
                let g = e_inner(&p.right, &q.right, &mass);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g - C64::new(want, 0.0)).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn eig_dimension_mismatch() {
        let err = generalized_eig(&RMat::zeros(3, 3), &MassMatrix::identity(2), false).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn sort_breaks_ties_on_imaginary_part() {
        let mk = |re, im| SpectralPair {
            eigenvalue: C64::new(re, im),
            right: CVec::zeros(1),
            left: None,
        };
        let mut v = vec![mk(-1.0, -2.0), mk(0.0, 1.0), mk(-1.0, 2.0), mk(1e-17, 3.0)];
        sort_spectrum(&mut v);
        let got: Vec<_> = v
            .iter()
            .map(|p| (p.eigenvalue.re, p.eigenvalue.im))
            .collect();
        assert_eq!(
            got,
            vec![(1e-17, 3.0), (0.0, 1.0), (-1.0, 2.0), (-1.0, -2.0)]
        );
    }

    #[test]
    fn svd_small_cases() {
        let u = CVec::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(2.0, 0.0),
            C64::new(2.0, 0.0),
        ]);
        let v = CVec::from_vec(vec![C64::new(3.0, 0.0), C64::new(4.0, 0.0)]);
        let m = &u * v.transpose();
        let svd = truncated_svd(&m, 1).unwrap();
        assert!((svd.singular_values[0] - 15.0).abs() < 1e-12);
        let rec = &svd.left
            * CMat::from_diagonal_element(1, 1, C64::new(svd.singular_values[0], 0.0))
            * svd.right.adjoint();
        assert!((rec - m).norm() < 1e-12);

        let d = to_complex(&dmatrix![1.0, 0.0; 0.0, 3.0]);
        let svd = truncated_svd(&d, 2).unwrap();
        assert!((svd.singular_values[0] - 3.0).abs() < 1e-14);
        assert!((svd.singular_values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn svd_rank_out_of_range() {
        let m = CMat::zeros(4, 3);
        assert!(matches!(
            truncated_svd(&m, 0),
            Err(Error::RankOutOfRange { .. })
        ));
        assert!(matches!(
            truncated_svd(&m, 4),
            Err(Error::RankOutOfRange { .. })
        ));
    }

    #[test]
    fn solve_linear_cases() {
        let b = RVec::from_vec(vec![1.0, -2.0, 3.0]);
        assert_eq!(solve_linear(&RMat::identity(3, 3), &b).unwrap(), b);
        let x = solve_linear(
            &dmatrix![2.0, 0.0; 0.0, 4.0],
            &RVec::from_vec(vec![2.0, 8.0]),
        )
        .unwrap();
        assert_eq!(x, RVec::from_vec(vec![1.0, 2.0]));
        let err = solve_linear(&dmatrix![1.0, 1.0; 1.0, 1.0], &RVec::zeros(2)).unwrap_err();
        assert!(matches!(err, Error::Singular { .. }));
    }

    #[test]
    fn mass_triplets_round_trip() {
        let m = MassMatrix::Dense(dmatrix![2.0, 0.5; 0.5, 1.0]);
        let back = MassMatrix::from_triplets(2, &m.triplets()).unwrap();
        assert_eq!(back, m);
        let d = MassMatrix::Diagonal(RVec::from_vec(vec![0.25, 0.5]));
        assert_eq!(MassMatrix::from_triplets(2, &d.triplets()).unwrap(), d);
    }
}
