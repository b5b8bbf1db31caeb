//! Model parameters, the eight-variable mean-field state and the semiclassical
//! equations of motion of the two-ensemble Dicke Hamiltonian
//!
//! ```text
//! H = ω_c a†a + ω_a (S₁z + S₂z) + λ (a† + a)(S₁x − S₂x)
//! ```
//!
//! All rates are measured in units of the cavity decay rate κ.

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical parameters of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega_c: f64,
    pub omega_a: f64,
    pub kappa: f64,
    pub lambda: f64,
    /// Size of ensemble 1; its collective spin has length `n1 / 2`.
    pub n1: f64,
    /// Size of ensemble 2, `0 <= n2 <= n1`.
    pub n2: f64,
}

impl ModelParams {
    /// Validated constructor.
    ///
    /// `omega_a = 0` passes validation here (the equations of motion are
    /// well defined there); the closed-form fixed-point enumeration refuses it.
    pub fn new(omega_c: f64, omega_a: f64, kappa: f64, lambda: f64, n1: f64, n2: f64) -> Result<Self> {
        let p = Self { omega_c, omega_a, kappa, lambda, n1, n2 };
        p.validate()?;
        Ok(p)
    }

    /// `ω_c = ω_a = κ = 1`, `N₁ = 1` and `N₂ = ratio`.
    pub fn unit(lambda: f64, n2_ratio: f64) -> Result<Self> {
        Self::new(1.0, 1.0, 1.0, lambda, 1.0, n2_ratio)
    }

    pub fn validate(&self) -> Result<()> {
        fn bad(name: &'static str, reason: impl Into<String>) -> Error {
            Error::InvalidParameter { name, reason: reason.into() }
        }
        let fields = [
            ("omega_c", self.omega_c),
            ("omega_a", self.omega_a),
            ("kappa", self.kappa),
            ("lambda", self.lambda),
            ("n1", self.n1),
            ("n2", self.n2),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(bad(name, format!("must be finite, got {v}")));
            }
        }
        if self.omega_c <= 0.0 {
            return Err(bad("omega_c", format!("must be > 0, got {}", self.omega_c)));
        }
        if self.omega_a < 0.0 {
            return Err(bad("omega_a", format!("must be >= 0, got {}", self.omega_a)));
        }
        if self.kappa < 0.0 {
            return Err(bad("kappa", format!("must be >= 0, got {}", self.kappa)));
        }
        if self.lambda < 0.0 {
            return Err(bad("lambda", format!("must be >= 0, got {}", self.lambda)));
        }
        if self.n1 <= 0.0 {
            return Err(bad("n1", format!("must be > 0, got {}", self.n1)));
        }
        if self.n2 < 0.0 || self.n2 > self.n1 {
            return Err(bad("n2", format!("must satisfy 0 <= n2 <= n1 = {}, got {}", self.n1, self.n2)));
        }
        Ok(())
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn n2_ratio(&self) -> f64 {
        self.n2 / self.n1
    }

    /// Collective spin lengths `(N₁/2, N₂/2)`.
    pub fn spin_lengths(&self) -> (f64, f64) {
        (0.5 * self.n1, 0.5 * self.n2)
    }
}

/// Mean-field state: cavity amplitude and the two collective spin vectors.
///
/// The same type doubles as the time derivative of a state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldState {
    pub a: Complex64,
    pub s1: Vector3<f64>,
    pub s2: Vector3<f64>,
}

/// Order of the real coordinates used by [`MeanFieldState::to_array`] and the
/// Jacobian.
pub const COORDINATE_NAMES: [&str; 8] = ["re_a", "im_a", "s1x", "s1y", "s1z", "s2x", "s2y", "s2z"];

impl MeanFieldState {
    pub fn new(a: Complex64, s1: [f64; 3], s2: [f64; 3]) -> Self {
        Self { a, s1: Vector3::from(s1), s2: Vector3::from(s2) }
    }

    pub fn zero() -> Self {
        Self::new(Complex64::new(0.0, 0.0), [0.0; 3], [0.0; 3])
    }

    /// Spins along the given unit directions, scaled to `N_l / 2`.
    pub fn from_directions(a: Complex64, d1: [f64; 3], d2: [f64; 3], params: &ModelParams) -> Self {
        let (j1, j2) = params.spin_lengths();
        let d1 = Vector3::from(d1);
        let d2 = Vector3::from(d2);
        let u1 = d1 / d1.norm();
        let u2 = d2 / d2.norm();
        Self { a, s1: u1 * j1, s2: u2 * j2 }
    }

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.a.re, self.a.im, self.s1.x, self.s1.y, self.s1.z, self.s2.x, self.s2.y, self.s2.z,
        ]
    }

    pub fn from_array(x: &[f64; 8]) -> Self {
        Self {
            a: Complex64::new(x[0], x[1]),
            s1: Vector3::new(x[2], x[3], x[4]),
            s2: Vector3::new(x[5], x[6], x[7]),
        }
    }

    /// Euclidean distance in the eight real coordinates.
    pub fn distance(&self, other: &Self) -> f64 {
        let x = self.to_array();
        let y = other.to_array();
        x.iter().zip(&y).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
    }

    pub fn norm(&self) -> f64 {
        self.to_array().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Largest relative deviation of `|S_l|` from `N_l / 2`.
    ///
    /// An empty ensemble (`N_l = 0`) contributes its absolute norm instead.
    pub fn norm_drift(&self, params: &ModelParams) -> f64 {
        let (j1, j2) = params.spin_lengths();
        let rel = |s: &Vector3<f64>, j: f64| {
            if j > 0.0 {
                (s.norm() - j).abs() / j
            } else {
                s.norm()
            }
        };
        rel(&self.s1, j1).max(rel(&self.s2, j2))
    }

    pub fn observables(&self, params: &ModelParams) -> DerivedObservables {
        DerivedObservables {
            total_spin: self.s1 + self.s2,
            staggered_spin: self.s1 - self.s2,
            energy: energy(self, params),
            photon_number: self.a.norm_sqr(),
        }
    }
}

impl std::ops::Add for MeanFieldState {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self { a: self.a + rhs.a, s1: self.s1 + rhs.s1, s2: self.s2 + rhs.s2 }
    }
}

impl std::ops::Sub for MeanFieldState {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self { a: self.a - rhs.a, s1: self.s1 - rhs.s1, s2: self.s2 - rhs.s2 }
    }
}

impl std::ops::Mul<f64> for MeanFieldState {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        Self { a: self.a * c, s1: self.s1 * c, s2: self.s2 * c }
    }
}

/// Quantities derived from a single state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedObservables {
    /// `S₁ + S₂`
    pub total_spin: Vector3<f64>,
    /// `S₁ − S₂`
    pub staggered_spin: Vector3<f64>,
    pub energy: f64,
    pub photon_number: f64,
}

/// Semiclassical equations of motion.
///
/// ```text
/// ȧ     = −(iω_c + κ) a − iλ (S₁x − S₂x)
/// Ṡ_l,x = −ω_a S_l,y
/// Ṡ_l,y =  ω_a S_l,x + (−1)^l λ (a* + a) S_l,z
/// Ṡ_l,z = (−1)^(l+1) λ (a* + a) S_l,y
/// ```
///
/// Ensemble 1 (`l = 1`) couples with `−λ` in `Ṡ₁y`, ensemble 2 with `+λ`.
pub fn eom_rhs(state: &MeanFieldState, params: &ModelParams) -> MeanFieldState {
    let ModelParams { omega_c, omega_a, kappa, lambda, .. } = *params;
    let a = state.a;
    let dsx = state.s1.x - state.s2.x;
    let da = -Complex64::new(kappa, omega_c) * a - Complex64::new(0.0, lambda * dsx);
    let x = 2.0 * a.re;
    let spin = |s: &Vector3<f64>, sign: f64| {
        Vector3::new(
            -omega_a * s.y,
            omega_a * s.x + sign * lambda * x * s.z,
            -sign * lambda * x * s.y,
        )
    };
    MeanFieldState { a: da, s1: spin(&state.s1, -1.0), s2: spin(&state.s2, 1.0) }
}

/// Mean-field energy `E₀ = ω_c|a|² + ω_a S_z + λ(a + a*) ΔS_x`.
pub fn energy(state: &MeanFieldState, params: &ModelParams) -> f64 {
    params.omega_c * state.a.norm_sqr()
        + params.omega_a * (state.s1.z + state.s2.z)
        + params.lambda * 2.0 * state.a.re * (state.s1.x - state.s2.x)
}

/// ℤ₂ parity: `a → −a`, `S_l,x → −S_l,x`, and `S_l,y → −S_l,y`.
///
/// This is the mean-field image of `exp(iπ(a†a + S₁z + S₂z))`, a rotation by π
/// about z. The `S_y` flip is what makes the equations of motion equivariant;
/// on fixed points `S_y = 0` and it is invisible.
pub fn parity_transform(state: &MeanFieldState) -> MeanFieldState {
    MeanFieldState {
        a: -state.a,
        s1: Vector3::new(-state.s1.x, -state.s1.y, state.s1.z),
        s2: Vector3::new(-state.s2.x, -state.s2.y, state.s2.z),
    }
}

/// Thermodynamic-limit rescaling `N_l → cN_l`, `S_l → cS_l`, `a → √c a`,
/// `λ → λ/√c`. The equations of motion are covariant under this map.
pub fn scale_transform(state: &MeanFieldState, params: &ModelParams, c: f64) -> Result<(MeanFieldState, ModelParams)> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Domain(format!("scale factor must be positive and finite, got {c}")));
    }
    let rc = c.sqrt();
    let s = MeanFieldState { a: state.a * rc, s1: state.s1 * c, s2: state.s2 * c };
    let p = ModelParams { lambda: params.lambda / rc, n1: params.n1 * c, n2: params.n2 * c, ..*params };
    Ok((s, p))
}
