//! Initial states, density-matrix diagnostics and the reduced field state.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QuantumError, Result};
use crate::space::{CMatrix, HilbertSpec};

pub type CVector = DVector<Complex64>;

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// SU(2) coherent state `|θ, φ⟩` of spin `j = two_j / 2` with
/// `⟨S⟩ = j (sinθ cosφ, sinθ sinφ, cosθ)`. Components are ordered
/// `m = j, j−1, …, −j`.
pub fn coherent_spin_state(two_j: usize, theta: f64, phi: f64) -> CVector {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let mut v = CVector::from_fn(two_j + 1, |k, _| {
        // k = j − m spin flips from the top
        let up = two_j - k;
        let amp = binomial(two_j, k).sqrt() * c.powi(up as i32) * s.powi(k as i32);
        Complex64::from_polar(amp, k as f64 * phi)
    });
    let norm = v.norm();
    v /= Complex64::new(norm, 0.0);
    v
}

/// Glauber coherent state truncated at `n_max`, not renormalized.
pub fn coherent_field(n_max: usize, alpha: Complex64) -> CVector {
    let mut v = CVector::zeros(n_max + 1);
    let mut term = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    v[0] = term;
    for n in 1..=n_max {
        term *= alpha / (n as f64).sqrt();
        v[n] = term;
    }
    v
}

pub fn fock(n_max: usize, n: usize) -> Result<CVector> {
    if n > n_max {
        return Err(QuantumError::InvalidParameter { name: "fock", reason: format!("level {n} above cutoff {n_max}") });
    }
    let mut v = CVector::zeros(n_max + 1);
    v[n] = Complex64::new(1.0, 0.0);
    Ok(v)
}

/// Spin direction in polar angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinAngles {
    pub theta: f64,
    pub phi: f64,
}

impl SpinAngles {
    pub const DOWN: Self = Self { theta: std::f64::consts::PI, phi: 0.0 };
    pub const UP: Self = Self { theta: 0.0, phi: 0.0 };

    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    /// Angles of a (not necessarily unit) direction vector.
    pub fn from_direction(d: [f64; 3]) -> Self {
        let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        Self { theta: (d[2] / r).clamp(-1.0, 1.0).acos(), phi: d[1].atan2(d[0]) }
    }

    pub fn flipped(self) -> Self {
        // π rotation about z
        Self { theta: self.theta, phi: self.phi + std::f64::consts::PI }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldState {
    Coherent { re: f64, im: f64 },
    Fock { n: usize },
}

impl FieldState {
    pub fn vacuum() -> Self {
        FieldState::Fock { n: 0 }
    }

    pub fn vector(&self, n_max: usize) -> Result<CVector> {
        match *self {
            FieldState::Coherent { re, im } => Ok(coherent_field(n_max, Complex64::new(re, im))),
            FieldState::Fock { n } => fock(n_max, n),
        }
    }
}

/// Pure product state `|field⟩ ⊗ |θ₁, φ₁⟩ ⊗ |θ₂, φ₂⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductState {
    pub field: FieldState,
    pub spin1: SpinAngles,
    pub spin2: SpinAngles,
}

impl ProductState {
    pub fn vector(&self, spec: &HilbertSpec) -> Result<CVector> {
        let f = self.field.vector(spec.n_max)?;
        let s1 = coherent_spin_state(spec.n1, self.spin1.theta, self.spin1.phi);
        let s2 = coherent_spin_state(spec.n2, self.spin2.theta, self.spin2.phi);
        Ok(f.kronecker(&s1).kronecker(&s2))
    }

    /// Image under parity: field amplitude and both transverse spin
    /// components reversed.
    pub fn parity_image(&self) -> Self {
        let field = match self.field {
            FieldState::Coherent { re, im } => FieldState::Coherent { re: -re, im: -im },
            f => f,
        };
        Self { field, spin1: self.spin1.flipped(), spin2: self.spin2.flipped() }
    }
}

/// Statistical mixture of product states with non-negative weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub components: Vec<(f64, ProductState)>,
}

impl InitialState {
    pub fn pure(p: ProductState) -> Self {
        Self { components: vec![(1.0, p)] }
    }

    /// Equal mixture of a state and its parity image.
    pub fn parity_symmetric(p: ProductState) -> Self {
        Self { components: vec![(0.5, p), (0.5, p.parity_image())] }
    }

    pub fn density_matrix(&self, spec: &HilbertSpec) -> Result<CMatrix> {
        let total: f64 = self.components.iter().map(|c| c.0).sum();
        if self.components.is_empty() || self.components.iter().any(|c| !(c.0 >= 0.0)) || !(total > 0.0) {
            return Err(QuantumError::InvalidParameter { name: "init", reason: "mixture weights must be non-negative with positive sum".into() });
        }
        let d = spec.dim();
        let mut rho = CMatrix::zeros(d, d);
        for (w, p) in &self.components {
            let v = p.vector(spec)?;
            let n2 = v.norm_squared();
            rho += (&v * v.adjoint()) * Complex64::new(w / (total * n2), 0.0);
        }
        Ok(rho)
    }
}

/// Evolution time used with [`tilted_initial_state`] for the Q-function
/// snapshot.
pub const TILTED_SNAPSHOT_TIME: f64 = 20.0;

/// Vacuum field with spin 1 along `(1, 1, 0)/√2` and spin 2 along
/// `(1, 0, −1)/√2`, the spin-coherent counterpart of the tilted mean-field
/// start that ends on a limit cycle.
pub fn tilted_initial_state() -> InitialState {
    InitialState::pure(ProductState {
        field: FieldState::vacuum(),
        spin1: SpinAngles::from_direction([1.0, 1.0, 0.0]),
        spin2: SpinAngles::from_direction([1.0, 0.0, -1.0]),
    })
}

pub fn pure_density(v: &CVector) -> CMatrix {
    let n = v.norm_squared();
    (v * v.adjoint()) / Complex64::new(n, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityDiagnostics {
    pub trace_error: f64,
    pub hermiticity_error: f64,
    /// Smallest eigenvalue; only computed on request.
    pub min_eigenvalue: Option<f64>,
}

pub fn hermiticity_error(rho: &CMatrix) -> f64 {
    let n = rho.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((rho[(i, j)] - rho[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn diagnose(rho: &CMatrix, with_spectrum: bool) -> DensityDiagnostics {
    let min_eigenvalue = with_spectrum.then(|| {
        let h = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    });
    DensityDiagnostics { trace_error: (rho.trace() - 1.0).norm(), hermiticity_error: hermiticity_error(rho), min_eigenvalue }
}

/// Trace over both spin factors.
pub fn partial_trace_field(rho: &CMatrix, spec: &HilbertSpec) -> CMatrix {
    let nf = spec.field_dim();
    let ns = spec.spin_dim();
    CMatrix::from_fn(nf, nf, |n, k| (0..ns).map(|s| rho[(n * ns + s, k * ns + s)]).sum())
}

/// Population of the top Fock level.
pub fn cutoff_population(rho: &CMatrix, spec: &HilbertSpec) -> f64 {
    let ns = spec.spin_dim();
    let top = spec.n_max * ns;
    (0..ns).map(|s| rho[(top + s, top + s)].re).sum()
}
