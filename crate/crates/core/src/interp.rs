//! One-dimensional interpolation in the parameter.
//!
//! Both schemes are linear in the data, so an interpolant at a fixed `mu` is
//! a weight vector over the knots. Vector-valued data (modes, EDM
//! coefficients, trajectories) is interpolated by contracting those weights
//! with the stored columns.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{CMat, CVec, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Piecewise linear between neighbouring knots.
    #[default]
    Linear,
    /// Natural cubic spline (zero second derivative at both ends).
    CubicSpline,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Scheme::Linear),
            "cubic-spline" | "spline" | "cubic" => Ok(Scheme::CubicSpline),
            other => Err(Error::InvalidParameter(format!(
                "unknown interpolation scheme '{other}'"
            ))),
        }
    }
}

/// Knot positions for interpolation; strictly increasing, at least two.
#[derive(Debug, Clone, PartialEq)]
pub struct Knots {
    xs: Vec<f64>,
}

impl Knots {
    pub fn new(xs: &[f64]) -> Result<Self> {
        if xs.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "interpolation needs at least 2 knots, got {}",
                xs.len()
            )));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "knots must be strictly increasing".into(),
            ));
        }
        Ok(Knots { xs: xs.to_vec() })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.xs
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn lo(&self) -> f64 {
        self.xs[0]
    }

    pub fn hi(&self) -> f64 {
        self.xs[self.xs.len() - 1]
    }

    /// Clamps `mu` into the knot span, allowing a `1e-12` relative slack.
    fn check(&self, mu: f64) -> Result<f64> {
        let slack = 1e-12 * (self.hi() - self.lo()).abs().max(self.hi().abs()).max(1.0);
        if !(mu >= self.lo() - slack && mu <= self.hi() + slack) {
            return Err(Error::OutOfDomain {
                mu,
                lo: self.lo(),
                hi: self.hi(),
            });
        }
        Ok(mu.clamp(self.lo(), self.hi()))
    }

    /// Index `j` of the interval `[x_j, x_{j+1}]` holding `mu`.
    fn interval(&self, mu: f64) -> usize {
        let j = self.xs.partition_point(|&x| x <= mu);
        j.saturating_sub(1).min(self.xs.len() - 2)
    }

    /// Weights `w` such that the interpolant at `mu` is `Σ w_k y_k`.
    pub fn weights(&self, mu: f64, scheme: Scheme) -> Result<Vec<f64>> {
        let mu = self.check(mu)?;
        let p = self.xs.len();
        let j = self.interval(mu);
        let h = self.xs[j + 1] - self.xs[j];
        let b = (mu - self.xs[j]) / h;
        let a = 1.0 - b;
        let mut w = vec![0.0; p];
        w[j] = a;
        w[j + 1] = b;
        if scheme == Scheme::CubicSpline && p > 2 {
            let g = self.second_derivative_operator();
            let ca = (a * a * a - a) * h * h / 6.0;
            let cb = (b * b * b - b) * h * h / 6.0;
            for k in 0..p {
                w[k] += ca * g[j][k] + cb * g[j + 1][k];
            }
        }
        Ok(w)
    }

    /// Matrix `G` (row-major, `p x p`) mapping knot values to the spline's
    /// second derivatives at the knots.
    fn second_derivative_operator(&self) -> Vec<Vec<f64>> {
        let x = &self.xs;
        let p = x.len();
        let mut g = vec![vec![0.0; p]; p];
        if p <= 2 {
            return g;
        }
        let m = p - 2;
        // tridiagonal system on interior second derivatives
        let mut lower = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut upper = vec![0.0; m];
        for i in 0..m {
            let h0 = x[i + 1] - x[i];
            let h1 = x[i + 2] - x[i + 1];
            lower[i] = h0 / 6.0;
            diag[i] = (h0 + h1) / 3.0;
            upper[i] = h1 / 6.0;
        }
        for k in 0..p {
            // right-hand side for a unit value at knot k
            let mut rhs = vec![0.0; m];
            for (i, r) in rhs.iter_mut().enumerate() {
                let h0 = x[i + 1] - x[i];
                let h1 = x[i + 2] - x[i + 1];
                if k == i {
                    *r += 1.0 / h0;
                }
                if k == i + 1 {
                    *r -= 1.0 / h0 + 1.0 / h1;
                }
                if k == i + 2 {
                    *r += 1.0 / h1;
                }
            }
            let sol = thomas(&lower, &diag, &upper, &rhs);
            for (row, v) in g[1..=m].iter_mut().zip(sol) {
                row[k] = v;
            }
        }
        g
    }
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / denom;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Interpolates the columns of `values` (one column per knot).
pub fn interpolate_columns(knots: &Knots, values: &CMat, mu: f64, scheme: Scheme) -> Result<CVec> {
    if values.ncols() != knots.len() {
        return Err(Error::DimensionMismatch {
            context: "interpolated columns",
            expected: knots.len(),
            found: values.ncols(),
        });
    }
    let w = knots.weights(mu, scheme)?;
    Ok(combine(
        values.nrows(),
        w.iter().enumerate().map(|(k, &wk)| (wk, values.column(k))),
    ))
}

/// Interpolates a list of equally sized vectors (one per knot).
pub fn interpolate_vectors(
    knots: &Knots,
    values: &[&CVec],
    mu: f64,
    scheme: Scheme,
) -> Result<CVec> {
    if values.len() != knots.len() {
        return Err(Error::DimensionMismatch {
            context: "interpolated vectors",
            expected: knots.len(),
            found: values.len(),
        });
    }
    let n = values[0].len();
    let w = knots.weights(mu, scheme)?;
    Ok(combine(
        n,
        w.iter().zip(values).map(|(&wk, v)| (wk, v.column(0))),
    ))
}

fn combine<'a, I>(n: usize, terms: I) -> CVec
where
    I: Iterator<Item = (f64, nalgebra::DVectorView<'a, C64>)>,
{
    let mut out = CVec::zeros(n);
    for (w, col) in terms {
        if w != 0.0 {
            out.axpy(C64::new(w, 0.0), &col, C64::new(1.0, 0.0));
        }
    }
    out
}

pub fn interpolate_scalars(knots: &Knots, values: &[C64], mu: f64, scheme: Scheme) -> Result<C64> {
    if values.len() != knots.len() {
        return Err(Error::DimensionMismatch {
            context: "interpolated scalars",
            expected: knots.len(),
            found: values.len(),
        });
    }
    let w = knots.weights(mu, scheme)?;
    Ok(w.iter().zip(values).map(|(&wk, &v)| v * wk).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_hits_knots_and_midpoints() {
        let k = Knots::new(&[0.0, 1.0, 3.0]).unwrap();
        assert_eq!(k.weights(1.0, Scheme::Linear).unwrap(), vec![0.0, 1.0, 0.0]);
        assert_eq!(k.weights(2.0, Scheme::Linear).unwrap(), vec![0.0, 0.5, 0.5]);
        assert_eq!(k.weights(3.0, Scheme::Linear).unwrap(), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn spline_reproduces_knots_and_cubics_between() {
        let xs = [0.0, 0.7, 1.5, 2.0, 3.2];
        let k = Knots::new(&xs).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            let w = k.weights(x, Scheme::CubicSpline).unwrap();
            for (j, wj) in w.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((wj - want).abs() < 1e-14);
            }
        }
        // a natural spline reproduces straight lines exactly
        let ys: Vec<C64> = xs
            .iter()
            .map(|x| C64::new(2.0 * x - 1.0, 0.5 * x))
            .collect();
        for mu in [0.1, 0.9, 1.77, 3.1] {
            let v = interpolate_scalars(&k, &ys, mu, Scheme::CubicSpline).unwrap();
            assert!((v - C64::new(2.0 * mu - 1.0, 0.5 * mu)).norm() < 1e-13);
        }
    }

    #[test]
    fn spline_matches_hand_solved_three_knot_case() {
        // knots 0,1,2 with values 0,1,0: M1 = -3, s(0.5) = 0.5 + (0.125-0.5)(-3)/6
        let k = Knots::new(&[0.0, 1.0, 2.0]).unwrap();
        let ys = [0.0, 1.0, 0.0].map(|v| C64::new(v, 0.0));
        let v = interpolate_scalars(&k, &ys, 0.5, Scheme::CubicSpline).unwrap();
        assert!((v.re - 0.6875).abs() < 1e-14);
    }

    #[test]
    fn extrapolation_is_rejected() {
        let k = Knots::new(&[0.0, 1.0]).unwrap();
        assert!(matches!(
            k.weights(1.5, Scheme::Linear),
            Err(Error::OutOfDomain { .. })
        ));
        assert!(matches!(
            k.weights(-0.1, Scheme::CubicSpline),
            Err(Error::OutOfDomain { .. })
        ));
    }

    #[test]
    fn bad_knots_rejected() {
        assert!(Knots::new(&[1.0]).is_err());
        assert!(Knots::new(&[0.0, 0.0]).is_err());
    }
}
