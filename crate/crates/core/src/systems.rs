//! Parameterized full-order systems `E ẋ = A(μ) x + b(μ)`.
//!
//! Two desk-scale generators are provided: a 1-D conducting rod whose right
//! end loses heat through a film coefficient `μ` (Robin boundary), and an
//! anchored spring-mass chain with one softened spring located at `μ`.
//! Second-order models are turned into first-order pencils with
//! [`first_order_form`]. Steady states of forced systems come from
//! [`equilibrium`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{solve_linear, MassMatrix, RMat, RVec};

/// Finite-volume model of a rod with internal generation and convective ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatRod {
    pub nodes: usize,
    pub length: f64,
    pub conductivity: f64,
    /// Volumetric heat capacity `ρ c`.
    pub heat_capacity: f64,
    /// Film coefficient of the left end (fixed).
    pub h_left: f64,
    pub ambient: f64,
    /// Volumetric generation rate.
    pub generation: f64,
}

impl Default for HeatRod {
    fn default() -> Self {
        HeatRod {
            nodes: 50,
            length: 1.0,
            conductivity: 1.0,
            heat_capacity: 1.0,
            h_left: 1.0,
            ambient: 0.0,
            generation: 1.0,
        }
    }
}

impl HeatRod {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 3 {
            return Err(Error::InvalidParameter(format!(
                "heat rod needs at least 3 nodes, got {}",
                self.nodes
            )));
        }
        if !(self.length > 0.0 && self.conductivity > 0.0 && self.heat_capacity > 0.0) {
            return Err(Error::InvalidParameter(
                "length, conductivity and heat capacity must be positive".into(),
            ));
        }
        if !(self.h_left >= 0.0) {
            return Err(Error::InvalidParameter(
                "h_left must be non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        self.length / (self.nodes - 1) as f64
    }

    /// Half cells at both ends, full cells inside.
    pub fn mass(&self) -> MassMatrix {
        let dx = self.dx();
        let n = self.nodes;
        MassMatrix::Diagonal(RVec::from_fn(n, |i, _| {
            let w = if i == 0 || i == n - 1 { 0.5 * dx } else { dx };
            self.heat_capacity * w
        }))
    }

    pub fn operator_at(&self, mu: f64) -> RMat {
        let n = self.nodes;
        let g = self.conductivity / self.dx();
        let mut a = RMat::zeros(n, n);
        for i in 0..n - 1 {
            a[(i, i)] -= g;
            a[(i + 1, i + 1)] -= g;
            a[(i, i + 1)] += g;
            a[(i + 1, i)] += g;
        }
        a[(0, 0)] -= self.h_left;
        a[(n - 1, n - 1)] -= mu;
        a
    }

    pub fn source_at(&self, mu: f64) -> RVec {
        let n = self.nodes;
        let dx = self.dx();
        let mut b = RVec::from_element(n, self.generation * dx);
        b[0] = self.h_left * self.ambient + 0.5 * self.generation * dx;
        b[n - 1] = mu * self.ambient + 0.5 * self.generation * dx;
        b
    }

    pub fn coordinates(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.nodes).map(|i| i as f64 * dx).collect()
    }
}

/// Builds the heat-rod family with `μ` the right-end film coefficient.
pub fn heat_rod(rod: HeatRod, domain: (f64, f64)) -> Result<FullOrderSystem> {
    rod.validate()?;
    FullOrderSystem::new(
        format!("heat rod (n = {})", rod.nodes),
        rod.mass(),
        domain,
        Model::HeatRod(rod),
    )
}

/// Anchored chain of equal masses joined by springs; the spring whose
/// midpoint is nearest the defect position `μ` is softened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpringChain {
    pub masses: usize,
    pub mass: f64,
    pub k_nominal: f64,
    pub k_defect: f64,
    /// Total span; springs have rest length `length / masses`.
    pub length: f64,
}

impl Default for SpringChain {
    fn default() -> Self {
        SpringChain {
            masses: 40,
            mass: 1.0,
            k_nominal: 1.0,
            k_defect: 0.3,
            length: 1.0,
        }
    }
}

impl SpringChain {
    pub fn validate(&self) -> Result<()> {
        if self.masses < 2 {
            return Err(Error::InvalidParameter(
                "spring chain needs at least 2 masses".into(),
            ));
        }
        if !(self.mass > 0.0 && self.length > 0.0) {
            return Err(Error::InvalidParameter(
                "mass and length must be positive".into(),
            ));
        }
        if !(self.k_defect > 0.0 && self.k_defect <= self.k_nominal) {
            return Err(Error::InvalidParameter(
                "spring stiffnesses must satisfy 0 < k_defect <= k_nominal".into(),
            ));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.masses as f64
    }

    /// Midpoint of spring `j` (spring 0 ties mass 0 to the anchor).
    pub fn spring_midpoint(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.spacing()
    }

    /// Index of the softened spring; ties go to the lower index.
    pub fn defect_spring(&self, mu: f64) -> Result<usize> {
        if !(mu >= 0.0 && mu <= self.length) {
            return Err(Error::OutOfDomain {
                mu,
                lo: 0.0,
                hi: self.length,
            });
        }
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for j in 0..self.masses {
            let d = (self.spring_midpoint(j) - mu).abs();
            if d < best_d {
                best = j;
                best_d = d;
            }
        }
        Ok(best)
    }

    pub fn mass_matrix(&self) -> RMat {
        RMat::from_diagonal_element(self.masses, self.masses, self.mass)
    }

    /// Stiffness in the `M ÿ = K y` convention (negative semidefinite).
    pub fn stiffness_at(&self, mu: f64) -> Result<RMat> {
        let defect = self.defect_spring(mu)?;
        let n = self.masses;
        let mut k = RMat::zeros(n, n);
        for j in 0..n {
            let s = if j == defect {
                self.k_defect
            } else {
                self.k_nominal
            };
            k[(j, j)] -= s;
            if j > 0 {
                k[(j - 1, j - 1)] -= s;
                k[(j, j - 1)] += s;
                k[(j - 1, j)] += s;
            }
        }
        Ok(k)
    }

    pub fn second_order(&self) -> Result<SecondOrderSystem> {
        self.validate()?;
        Ok(SecondOrderSystem {
            mass: self.mass_matrix(),
            stiffness: Stiffness::Chain(self.clone()),
        })
    }
}

/// Parameter dependence of a second-order stiffness matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Stiffness {
    Chain(SpringChain),
    /// `K(μ) = K₀ + μ K₁`.
    Affine {
        k0: RMat,
        k1: RMat,
    },
}

/// `M ÿ = K(μ) y`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderSystem {
    pub mass: RMat,
    pub stiffness: Stiffness,
}

impl SecondOrderSystem {
    pub fn dim(&self) -> usize {
        self.mass.nrows()
    }

    pub fn stiffness_at(&self, mu: f64) -> Result<RMat> {
        match &self.stiffness {
            Stiffness::Chain(c) => c.stiffness_at(mu),
            Stiffness::Affine { k0, k1 } => Ok(k0 + k1 * mu),
        }
    }

    /// `E = diag(I, M)`, kept diagonal when `M` is.
    pub fn first_order_mass(&self) -> MassMatrix {
        let n = self.dim();
        let diagonal = (0..n).all(|j| (0..n).all(|i| i == j || self.mass[(i, j)] == 0.0));
        if diagonal {
            MassMatrix::Diagonal(RVec::from_fn(2 * n, |i, _| {
                if i < n {
                    1.0
                } else {
                    self.mass[(i - n, i - n)]
                }
            }))
        } else {
            let mut e = RMat::identity(2 * n, 2 * n);
            e.view_mut((n, n), (n, n)).copy_from(&self.mass);
            MassMatrix::Dense(e)
        }
    }
}

/// Augmented-state pencil: `E = [[I, 0], [0, M]]`, `A = [[0, I], [K(μ), 0]]`.
pub fn first_order_form(sys: &SecondOrderSystem, mu: f64) -> Result<(MassMatrix, RMat)> {
    let n = sys.dim();
    let k = sys.stiffness_at(mu)?;
    let mut a = RMat::zeros(2 * n, 2 * n);
    a.view_mut((0, n), (n, n)).copy_from(&RMat::identity(n, n));
    a.view_mut((n, 0), (n, n)).copy_from(&k);
    Ok((sys.first_order_mass(), a))
}

/// How `A(μ)` and `b(μ)` are produced.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    HeatRod(HeatRod),
    FirstOrder(SecondOrderSystem),
    /// `A(μ) = A₀ + μ A₁`, `b(μ) = b₀ + μ b₁`.
    Affine {
        a0: RMat,
        a1: RMat,
        b0: RVec,
        b1: RVec,
    },
}

/// `E ẋ = A(μ) x + b(μ)` on a parameter interval.
#[derive(Debug, Clone, PartialEq)]
pub struct FullOrderSystem {
    pub label: String,
    pub mass: MassMatrix,
    pub domain: (f64, f64),
    pub model: Model,
}

impl FullOrderSystem {
    pub fn new(label: String, mass: MassMatrix, domain: (f64, f64), model: Model) -> Result<Self> {
        if !(domain.1 >= domain.0) {
            return Err(Error::InvalidParameter("empty parameter domain".into()));
        }
        mass.cholesky()?;
        let sys = FullOrderSystem {
            label,
            mass,
            domain,
            model,
        };
        let n = sys.mass.dim();
        let a = sys.operator_at(domain.0)?;
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "operator vs mass",
                expected: n,
                found: a.nrows(),
            });
        }
        Ok(sys)
    }

    pub fn from_second_order(
        label: String,
        sys: SecondOrderSystem,
        domain: (f64, f64),
    ) -> Result<Self> {
        let mass = sys.first_order_mass();
        Self::new(label, mass, domain, Model::FirstOrder(sys))
    }

    pub fn dim(&self) -> usize {
        self.mass.dim()
    }

    pub fn operator_at(&self, mu: f64) -> Result<RMat> {
        match &self.model {
            Model::HeatRod(rod) => Ok(rod.operator_at(mu)),
            Model::FirstOrder(sys) => first_order_form(sys, mu).map(|(_, a)| a),
            Model::Affine { a0, a1, .. } => Ok(a0 + a1 * mu),
        }
    }

    pub fn source_at(&self, mu: f64) -> RVec {
        match &self.model {
            Model::HeatRod(rod) => rod.source_at(mu),
            Model::FirstOrder(_) => RVec::zeros(self.dim()),
            Model::Affine { b0, b1, .. } => b0 + b1 * mu,
        }
    }

    /// Mesh coordinates for plotting, when the model has them.
    pub fn coordinates(&self) -> Option<Vec<f64>> {
        match &self.model {
            Model::HeatRod(rod) => Some(rod.coordinates()),
            _ => None,
        }
    }
}

/// Steady state `x̄` with `A(μ) x̄ = -b(μ)`. A zero source gives `x̄ = 0`
/// without a solve.
pub fn equilibrium(sys: &FullOrderSystem, mu: f64) -> Result<RVec> {
    let b = sys.source_at(mu);
    if b.iter().all(|v| *v == 0.0) {
        return Ok(RVec::zeros(b.len()));
    }
    let a = sys.operator_at(mu)?;
    solve_linear(&a, &(-b)).map_err(|e| match e {
        Error::Singular { .. } => Error::EquilibriumUndefined { mu },
        other => other,
    })
}

/// Unit-norm Gaussian bump on `n` grid points over `[0, 1]`, centred at `μ`
/// with standard deviation `width` (in the same unit interval).
pub fn traveling_bump_family(n: usize, width: f64, mu: f64) -> Result<RVec> {
    if n < 2 || !(width > 0.0) {
        return Err(Error::InvalidParameter(
            "bump needs n >= 2 and width > 0".into(),
        ));
    }
    let h = 1.0 / (n - 1) as f64;
    let mut v = RVec::from_fn(n, |i, _| {
        let x = i as f64 * h - mu;
        (-0.5 * x * x / (width * width)).exp()
    });
    let nrm = v.norm();
    v /= nrm;
    Ok(v)
}

/// Serializable description of a built-in generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SystemSpec {
    HeatRod {
        #[serde(flatten)]
        rod: HeatRod,
        domain: (f64, f64),
    },
    SpringChain {
        #[serde(flatten)]
        chain: SpringChain,
    },
}

impl SystemSpec {
    pub fn build(&self) -> Result<FullOrderSystem> {
        match self {
            SystemSpec::HeatRod { rod, domain } => heat_rod(rod.clone(), *domain),
            SystemSpec::SpringChain { chain } => FullOrderSystem::from_second_order(
                format!("spring chain (n = {})", chain.masses),
                chain.second_order()?,
                (0.0, chain.length),
            ),
        }
    }
}
