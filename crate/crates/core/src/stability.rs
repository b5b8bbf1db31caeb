//! Linear stability of mean-field fixed points.
//!
//! The Jacobian is taken in the real coordinates
//! `(Re a, Im a, S₁x, S₁y, S₁z, S₂x, S₂y, S₂z)`. Two kinds of structural modes
//! sit on the imaginary axis at every fixed point and are excluded before the
//! sign test:
//!
//! * two zero modes from the conservation of `|S₁|` and `|S₂|`;
//! * one undamped pair `±i·sqrt(ω_a² + (2λ Re a)²)`. Both spins precess about
//!   their effective fields at this common Larmor frequency, and the
//!   combination that keeps `ΔS_x` fixed never reaches the cavity, so cavity
//!   loss cannot damp it.

use std::fmt;

use nalgebra::{DMatrix, SMatrix};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen;
use crate::error::{Error, Result};
use crate::model::{MeanFieldState, ModelParams};
use crate::steadystate::{fixed_point, fixed_point_table, FixedPointRecord, PhaseLabel};

pub type Jacobian = SMatrix<f64, 8, 8>;

/// Parity in real coordinates: flips `Re a, Im a, S_l,x, S_l,y`.
pub fn parity_matrix() -> Jacobian {
    Jacobian::from_diagonal(&nalgebra::SVector::<f64, 8>::from([-1.0, -1.0, -1.0, -1.0, 1.0, -1.0, -1.0, 1.0]))
}

pub fn jacobian(state: &MeanFieldState, params: &ModelParams) -> Jacobian {
    let ModelParams { omega_c, omega_a, kappa, lambda, .. } = *params;
    let mut j = Jacobian::zeros();
    // field
    j[(0, 0)] = -kappa;
    j[(0, 1)] = omega_c;
    j[(1, 0)] = -omega_c;
    j[(1, 1)] = -kappa;
    j[(1, 2)] = -lambda;
    j[(1, 5)] = lambda;
    let x = 2.0 * state.a.re;
    for (offset, s, sign) in [(2usize, &state.s1, -1.0), (5usize, &state.s2, 1.0)] {
        let (ix, iy, iz) = (offset, offset + 1, offset + 2);
        j[(ix, iy)] = -omega_a;
        j[(iy, 0)] = 2.0 * sign * lambda * s.z;
        j[(iy, ix)] = omega_a;
        j[(iy, iz)] = sign * lambda * x;
        j[(iz, 0)] = -2.0 * sign * lambda * s.y;
        j[(iz, iy)] = -sign * lambda * x;
    }
    j
}

pub fn jacobian_eigenvalues(j: &Jacobian) -> Result<Vec<Complex64>> {
    eigen::eigenvalues(&DMatrix::from_column_slice(8, 8, j.as_slice()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Unstable,
    Marginal,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Marginal => "marginal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityOptions {
    /// Remaining eigenvalues must have `Re < −eps_stab` for a stable verdict.
    pub eps_stab: f64,
    /// Conservation zero modes satisfy `|Re|, |Im| < eps_zero`; the neutral
    /// precession pair satisfies `|Re| < eps_zero`.
    pub eps_zero: f64,
    /// Relative tolerance on the imaginary part of the precession pair.
    pub precession_rel_tol: f64,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self { eps_stab: 1e-9, eps_zero: 1e-8, precession_rel_tol: 1e-7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Full spectrum, sorted by descending real part.
    pub eigenvalues: Vec<Complex64>,
    pub verdict: Verdict,
    pub zero_modes_excluded: usize,
    /// 2 when the undamped precession pair was found and excluded, else 0.
    pub neutral_modes_excluded: usize,
    /// Eigenvalue with the largest real part after the exclusion.
    pub leading: Complex64,
}

/// Common precession frequency of both spins about their effective fields.
pub fn precession_frequency(state: &MeanFieldState, params: &ModelParams) -> f64 {
    params.omega_a.hypot(2.0 * params.lambda * state.a.re)
}

/// Indices of up to two eigenvalues inside the `eps_zero` box, smallest
/// modulus first.
fn zero_mode_indices(spectrum: &[Complex64], eps_zero: f64) -> Vec<usize> {
    let mut candidates: Vec<usize> = (0..spectrum.len())
        .filter(|&i| spectrum[i].re.abs() < eps_zero && spectrum[i].im.abs() < eps_zero)
        .collect();
    candidates.sort_by(|&i, &k| spectrum[i].norm().total_cmp(&spectrum[k].norm()));
    candidates.truncate(2);
    candidates
}

/// Indices of the conjugate pair closest to `±i·omega`, if both members lie
/// within tolerance.
fn precession_pair_indices(spectrum: &[Complex64], omega: f64, skip: &[usize], opts: &StabilityOptions) -> Vec<usize> {
    if !(omega > 0.0) {
        return Vec::new();
    }
    let tol = opts.precession_rel_tol * omega.max(1.0);
    let find = |target: f64| {
        (0..spectrum.len())
            .filter(|i| !skip.contains(i))
            .filter(|&i| spectrum[i].re.abs() < opts.eps_zero && (spectrum[i].im - target).abs() < tol)
            .min_by(|&i, &k| (spectrum[i].im - target).abs().total_cmp(&(spectrum[k].im - target).abs()))
    };
    match (find(omega), find(-omega)) {
        (Some(i), Some(k)) => vec![i, k],
        _ => Vec::new(),
    }
}

/// Classifies a spectrum after removing the structural modes. `precession`
/// is the frequency of the neutral pair (see [`precession_frequency`]); pass
/// `None` to exclude zero modes only.
pub fn report_from_spectrum(
    eigenvalues: Vec<Complex64>,
    precession: Option<f64>,
    opts: &StabilityOptions,
) -> StabilityReport {
    let zeros = zero_mode_indices(&eigenvalues, opts.eps_zero);
    let neutral = precession.map(|w| precession_pair_indices(&eigenvalues, w, &zeros, opts)).unwrap_or_default();
    let rest: Vec<Complex64> = (0..eigenvalues.len())
        .filter(|i| !zeros.contains(i) && !neutral.contains(i))
        .map(|i| eigenvalues[i])
        .collect();
    let leading = rest
        .iter()
        .copied()
        .max_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)))
        .unwrap_or(Complex64::new(f64::NEG_INFINITY, 0.0));
    let verdict = if rest.iter().all(|e| e.re < -opts.eps_stab) {
        Verdict::Stable
    } else if rest.iter().any(|e| e.re > opts.eps_stab) {
        Verdict::Unstable
    } else {
        Verdict::Marginal
    };
    StabilityReport {
        eigenvalues,
        verdict,
        zero_modes_excluded: zeros.len(),
        neutral_modes_excluded: neutral.len(),
        leading,
    }
}

pub fn classify_stability(
    fp: &FixedPointRecord,
    params: &ModelParams,
    opts: &StabilityOptions,
) -> Result<StabilityReport> {
    if !fp.exists {
        return Err(Error::Domain(format!("{} does not exist at lambda = {}", fp.label, params.lambda)));
    }
    let spectrum = jacobian_eigenvalues(&jacobian(&fp.state, params))?;
    Ok(report_from_spectrum(spectrum, Some(precession_frequency(&fp.state, params)), opts))
}

/// One row of a bifurcation scan. Absent branches carry `verdict = None` and
/// NaN eigenvalue columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub lambda: f64,
    pub label: PhaseLabel,
    pub exists: bool,
    pub verdict: Option<Verdict>,
    pub re_lead: f64,
    pub im_lead: f64,
    pub n_zero_modes: usize,
    pub n_neutral_modes: usize,
}

impl ScanRow {
    pub fn verdict_str(&self) -> &'static str {
        match self.verdict {
            Some(Verdict::Stable) => "stable",
            Some(Verdict::Unstable) => "unstable",
            Some(Verdict::Marginal) => "marginal",
            None => "absent",
        }
    }
}

/// Classifies all eight fixed points at each coupling of an ascending grid.
/// Rows are ordered by grid index, then by [`PhaseLabel::ALL`].
pub fn bifurcation_scan(params: &ModelParams, lambda_grid: &[f64], opts: &StabilityOptions) -> Result<Vec<ScanRow>> {
    if lambda_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Domain("lambda grid must be strictly ascending".into()));
    }
    let per_lambda: Vec<Result<Vec<ScanRow>>> = lambda_grid
        .par_iter()
        .map(|&lambda| {
            let p = params.with_lambda(lambda);
            p.validate()?;
            fixed_point_table(&p)?
                .iter()
                .map(|fp| {
                    if !fp.exists {
                        return Ok(ScanRow {
                            lambda,
                            label: fp.label,
                            exists: false,
                            verdict: None,
                            re_lead: f64::NAN,
                            im_lead: f64::NAN,
                            n_zero_modes: 0,
                            n_neutral_modes: 0,
                        });
                    }
                    let r = classify_stability(fp, &p, opts)?;
                    Ok(ScanRow {
                        lambda,
                        label: fp.label,
                        exists: true,
                        verdict: Some(r.verdict),
                        re_lead: r.leading.re,
                        im_lead: r.leading.im,
                        n_zero_modes: r.zero_modes_excluded,
                        n_neutral_modes: r.neutral_modes_excluded,
                    })
                })
                .collect()
        })
        .collect();
    let mut rows = Vec::with_capacity(lambda_grid.len() * 8);
    for chunk in per_lambda {
        rows.extend(chunk?);
    }
    Ok(rows)
}

/// Real part of the leading non-conservation eigenvalue of `label` at `lambda`.
pub fn leading_growth_rate(params: &ModelParams, label: PhaseLabel, lambda: f64, opts: &StabilityOptions) -> Result<f64> {
    let p = params.with_lambda(lambda);
    let fp = fixed_point(&p, label)?;
    Ok(classify_stability(&fp, &p, opts)?.leading.re)
}

/// Bisects for the coupling in `[lo, hi]` where the leading growth rate of
/// `label` changes sign.
pub fn locate_stability_change(
    params: &ModelParams,
    label: PhaseLabel,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
    opts: &StabilityOptions,
) -> Result<f64> {
    let f_lo = leading_growth_rate(params, label, lo, opts)?;
    let f_hi = leading_growth_rate(params, label, hi, opts)?;
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Domain(format!(
            "no sign change of the leading growth rate of {label} in [{lo}, {hi}] ({f_lo:e}, {f_hi:e})"
        )));
    }
    let lo_negative = f_lo < 0.0;
    for _ in 0..200 {
        if hi - lo <= rel_tol * hi.abs() {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f = leading_growth_rate(params, label, mid, opts)?;
        if (f < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
