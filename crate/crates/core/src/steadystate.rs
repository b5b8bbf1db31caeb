//! Closed-form enumeration of the eight mean-field fixed points.
//!
//! Four normal states (`a = 0`, spins along ±z) always exist. The x-ferromagnetic
//! (`xFo`) and x-ferrimagnetic (`xFi`) superradiant pairs appear above
//!
//! ```text
//! λ_c(xFo / xFi) = sqrt( ω_a (ω_c² + κ²) / ((N₁ ∓ N₂) ω_c) )
//! ```
//!
//! with `S₁x = ±(N₁/2) sqrt(1 − (λ_c/λ)⁴)`, `S₂x = ±(N₂/N₁) S₁x` and
//! `a = λ ΔS_x / (−ω_c + iκ)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{energy, MeanFieldState, ModelParams};

/// Names of the eight fixed points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PhaseLabel {
    #[serde(rename = "+zFo-N")]
    PlusZFoN,
    #[serde(rename = "-zFo-N")]
    MinusZFoN,
    #[serde(rename = "+zFi-N")]
    PlusZFiN,
    #[serde(rename = "-zFi-N")]
    MinusZFiN,
    #[serde(rename = "+xFo-SR")]
    PlusXFoSR,
    #[serde(rename = "-xFo-SR")]
    MinusXFoSR,
    #[serde(rename = "+xFi-SR")]
    PlusXFiSR,
    #[serde(rename = "-xFi-SR")]
    MinusXFiSR,
}

impl PhaseLabel {
    pub const ALL: [PhaseLabel; 8] = [
        PhaseLabel::PlusZFoN,
        PhaseLabel::MinusZFoN,
        PhaseLabel::PlusZFiN,
        PhaseLabel::MinusZFiN,
        PhaseLabel::PlusXFoSR,
        PhaseLabel::MinusXFoSR,
        PhaseLabel::PlusXFiSR,
        PhaseLabel::MinusXFiSR,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PhaseLabel::PlusZFoN => "+zFo-N",
            PhaseLabel::MinusZFoN => "-zFo-N",
            PhaseLabel::PlusZFiN => "+zFi-N",
            PhaseLabel::MinusZFiN => "-zFi-N",
            PhaseLabel::PlusXFoSR => "+xFo-SR",
            PhaseLabel::MinusXFoSR => "-xFo-SR",
            PhaseLabel::PlusXFiSR => "+xFi-SR",
            PhaseLabel::MinusXFiSR => "-xFi-SR",
        }
    }

    /// Name used in reports: with equal ensembles the ferrimagnetic states are
    /// antiferromagnetic (`zaF`, `xaF`).
    pub fn display_name(self, params: &ModelParams) -> &'static str {
        if params.n2 != params.n1 {
            return self.as_str();
        }
        match self {
            PhaseLabel::PlusZFiN => "+zaF-N",
            PhaseLabel::MinusZFiN => "-zaF-N",
            PhaseLabel::PlusXFiSR => "+xaF-SR",
            PhaseLabel::MinusXFiSR => "-xaF-SR",
            other => other.as_str(),
        }
    }

    pub fn is_superradiant(self) -> bool {
        matches!(
            self,
            PhaseLabel::PlusXFoSR | PhaseLabel::MinusXFoSR | PhaseLabel::PlusXFiSR | PhaseLabel::MinusXFiSR
        )
    }

    /// Label of the parity image.
    pub fn parity_partner(self) -> PhaseLabel {
        match self {
            PhaseLabel::PlusXFoSR => PhaseLabel::MinusXFoSR,
            PhaseLabel::MinusXFoSR => PhaseLabel::PlusXFoSR,
            PhaseLabel::PlusXFiSR => PhaseLabel::MinusXFiSR,
            PhaseLabel::MinusXFiSR => PhaseLabel::PlusXFiSR,
            normal => normal,
        }
    }
}

impl fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PhaseLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let canon = s
            .replace("zaF", "zFi")
            .replace("xaF", "xFi")
            .replace('−', "-")
            .replace("minus", "-")
            .replace("plus", "+");
        PhaseLabel::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(&canon))
            .ok_or_else(|| Error::Domain(format!("unknown phase label `{s}`")))
    }
}

/// One fixed point of the mean-field equations.
///
/// Superradiant records below their threshold carry `exists = false`; their
/// state is then the parent normal state (`S_l,x = 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointRecord {
    pub label: PhaseLabel,
    pub state: MeanFieldState,
    pub exists: bool,
    pub energy: f64,
}

/// Flat JSON form with stable field names.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixedPointJson {
    pub label: String,
    pub exists: bool,
    pub a_re: f64,
    pub a_im: f64,
    pub s1x: f64,
    pub s1y: f64,
    pub s1z: f64,
    pub s2x: f64,
    pub s2y: f64,
    pub s2z: f64,
    pub energy: f64,
}

impl FixedPointRecord {
    pub fn to_json(&self, params: &ModelParams) -> FixedPointJson {
        let s = &self.state;
        FixedPointJson {
            label: self.label.display_name(params).to_string(),
            exists: self.exists,
            a_re: s.a.re,
            a_im: s.a.im,
            s1x: s.s1.x,
            s1y: s.s1.y,
            s1z: s.s1.z,
            s2x: s.s2.x,
            s2y: s.s2.y,
            s2z: s.s2.z,
            energy: self.energy,
        }
    }
}

/// Superradiant thresholds. `xfo` is `+∞` when `N₂ = N₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalCouplings {
    pub xfo: f64,
    pub xfi: f64,
}

pub fn critical_couplings(params: &ModelParams) -> CriticalCouplings {
    let ModelParams { omega_c, omega_a, kappa, n1, n2, .. } = *params;
    let numerator = omega_a * (omega_c * omega_c + kappa * kappa);
    let xfo = if n1 - n2 > 0.0 { (numerator / ((n1 - n2) * omega_c)).sqrt() } else { f64::INFINITY };
    let xfi = (numerator / ((n1 + n2) * omega_c)).sqrt();
    CriticalCouplings { xfo, xfi }
}

fn require_supported(params: &ModelParams) -> Result<()> {
    params.validate()?;
    if params.omega_a == 0.0 {
        return Err(Error::Unsupported(
            "omega_a = 0: the fixed-point classification requires S_l,y = 0, which only follows for omega_a != 0"
                .into(),
        ));
    }
    Ok(())
}

fn record(label: PhaseLabel, state: MeanFieldState, exists: bool, params: &ModelParams) -> FixedPointRecord {
    FixedPointRecord { label, state, exists, energy: energy(&state, params) }
}

/// The four normal states, in the order `+zFo, −zFo, +zFi, −zFi`.
pub fn normal_fixed_points(params: &ModelParams) -> Result<Vec<FixedPointRecord>> {
    require_supported(params)?;
    let (j1, j2) = params.spin_lengths();
    let zero = Complex64::new(0.0, 0.0);
    let mk = |label, z1: f64, z2: f64| {
        record(label, MeanFieldState::new(zero, [0.0, 0.0, z1], [0.0, 0.0, z2]), true, params)
    };
    Ok(vec![
        mk(PhaseLabel::PlusZFoN, j1, j2),
        mk(PhaseLabel::MinusZFoN, -j1, -j2),
        mk(PhaseLabel::PlusZFiN, j1, -j2),
        mk(PhaseLabel::MinusZFiN, -j1, j2),
    ])
}

/// The four superradiant states, in the order `+xFo, −xFo, +xFi, −xFi`.
///
/// A branch exists for `λ > λ_c` strictly; otherwise it is returned with
/// `exists = false` and collapsed onto its parent normal state.
pub fn superradiant_fixed_points(params: &ModelParams) -> Result<Vec<FixedPointRecord>> {
    require_supported(params)?;
    let thresholds = critical_couplings(params);
    let (j1, j2) = params.spin_lengths();
    let ratio = params.n2_ratio();
    let lambda = params.lambda;
    let denom = Complex64::new(-params.omega_c, params.kappa);

    let mut out = Vec::with_capacity(4);
    // (ferro?, threshold, S₂x/S₁x, sign of S₁z, sign of S₂z)
    let classes = [
        (true, thresholds.xfo, ratio, -1.0, 1.0),
        (false, thresholds.xfi, -ratio, -1.0, -1.0),
    ];
    for (ferro, lc, x_ratio, z1_sign, z2_sign) in classes {
        let exists = lambda > lc;
        // q = (λ_c/λ)² = |S_l,z| / (N_l/2)
        let q = if exists { (lc / lambda).powi(2) } else { 1.0 };
        let sx_frac = (1.0 - q * q).max(0.0).sqrt();
        for parity in [1.0, -1.0] {
            let s1x = parity * j1 * sx_frac;
            let s2x = x_ratio * s1x;
            let s1 = Vector3::new(s1x, 0.0, z1_sign * j1 * q);
            let s2 = Vector3::new(s2x, 0.0, z2_sign * j2 * q);
            let a = Complex64::new(lambda * (s1x - s2x), 0.0) / denom;
            let label = match (ferro, parity > 0.0) {
                (true, true) => PhaseLabel::PlusXFoSR,
                (true, false) => PhaseLabel::MinusXFoSR,
                (false, true) => PhaseLabel::PlusXFiSR,
                (false, false) => PhaseLabel::MinusXFiSR,
            };
            out.push(record(label, MeanFieldState { a, s1, s2 }, exists, params));
        }
    }
    Ok(out)
}

/// All eight records in [`PhaseLabel::ALL`] order, including absent branches.
pub fn fixed_point_table(params: &ModelParams) -> Result<Vec<FixedPointRecord>> {
    let mut all = normal_fixed_points(params)?;
    all.extend(superradiant_fixed_points(params)?);
    Ok(all)
}

/// Every fixed point that exists at these parameters (4, 6 or 8 of them).
pub fn all_fixed_points(params: &ModelParams) -> Result<Vec<FixedPointRecord>> {
    Ok(fixed_point_table(params)?.into_iter().filter(|r| r.exists).collect())
}

pub fn fixed_point(params: &ModelParams, label: PhaseLabel) -> Result<FixedPointRecord> {
    Ok(fixed_point_table(params)?.into_iter().find(|r| r.label == label).expect("table covers every label"))
}
