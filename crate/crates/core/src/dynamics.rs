//! Semiclassical time evolution, attractor classification and limit-cycle
//! detection.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{eom_rhs, DerivedObservables, MeanFieldState, ModelParams};
use crate::ode::{dopri5, OdeOptions, OdeStats};
use crate::stability::{classify_stability, StabilityOptions, Verdict};
use crate::steadystate::{FixedPointRecord, PhaseLabel};

/// Default size of the field seed added to a fixed point.
pub const DEFAULT_SEED: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DynamicsControls {
    pub rtol: f64,
    pub atol: f64,
    /// Spacing of recorded samples.
    pub sample_dt: f64,
    /// Relative spin-norm drift budget. Integration fails above ten times this.
    pub norm_tol: f64,
    pub max_steps: usize,
    /// Trailing fraction of the trajectory used by the classifiers.
    pub window_fraction: f64,
    /// Fixed-point tolerance in units of `N₁`.
    pub fp_tol_rel: f64,
    /// Minimum cycle amplitude in units of `N₁`.
    pub amp_tol_rel: f64,
    /// Sub-windows used by the decay screen.
    pub decay_windows: usize,
    /// Relative amplitude loss over the window above which a monotone decrease
    /// counts as a spiral.
    pub decay_tol: f64,
    /// Minimum normalized autocorrelation at the period peak.
    pub min_periodicity: f64,
    pub stability: StabilityOptions,
}

impl Default for DynamicsControls {
    fn default() -> Self {
        Self {
            rtol: 1e-11,
            atol: 1e-13,
            sample_dt: 0.05,
            norm_tol: 1e-8,
            max_steps: 50_000_000,
            window_fraction: 0.2,
            fp_tol_rel: 1e-4,
            amp_tol_rel: 1e-3,
            decay_windows: 4,
            decay_tol: 1e-3,
            min_periodicity: 0.5,
            stability: StabilityOptions::default(),
        }
    }
}

impl DynamicsControls {
    fn ode_options(&self) -> OdeOptions {
        OdeOptions { rtol: self.rtol, atol: self.atol, max_steps: self.max_steps, ..OdeOptions::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub params: ModelParams,
    pub times: Vec<f64>,
    pub states: Vec<MeanFieldState>,
    pub observables: Vec<DerivedObservables>,
    /// Largest relative spin-norm drift over all accepted steps.
    pub max_norm_drift: f64,
    #[serde(skip)]
    pub stats: OdeStats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> Option<&MeanFieldState> {
        self.states.last()
    }

    /// Index of the first sample of the trailing window.
    pub fn window_start(&self, fraction: f64) -> usize {
        let n = self.len();
        if n == 0 {
            return 0;
        }
        let t0 = self.times[0];
        let t1 = self.times[n - 1];
        let cut = t1 - fraction.clamp(0.0, 1.0) * (t1 - t0);
        self.times.partition_point(|&t| t < cut).min(n - 1)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,re_a,im_a,s1x,s1y,s1z,s2x,s2y,s2z,energy,norm1,norm2")?;
        for ((t, s), o) in self.times.iter().zip(&self.states).zip(&self.observables) {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                t,
                s.a.re,
                s.a.im,
                s.s1.x,
                s.s1.y,
                s.s1.z,
                s.s2.x,
                s.s2.y,
                s.s2.z,
                o.energy,
                s.s1.norm(),
                s.s2.norm()
            )?;
        }
        Ok(())
    }
}

fn sample_grid(t_final: f64, dt: f64) -> Vec<f64> {
    let n = (t_final / dt).round().max(1.0) as usize;
    let mut ts: Vec<f64> = (0..=n).map(|i| t_final * i as f64 / n as f64).collect();
    ts[n] = t_final;
    ts
}

pub fn integrate(
    initial: &MeanFieldState,
    params: &ModelParams,
    t_final: f64,
    controls: &DynamicsControls,
) -> Result<Trajectory> {
    params.validate()?;
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidParameter { name: "t_final", reason: format!("must be positive and finite, got {t_final}") });
    }
    if !(controls.sample_dt > 0.0) {
        return Err(Error::InvalidParameter { name: "sample_dt", reason: "must be positive".into() });
    }
    if !initial.is_finite() {
        return Err(Error::NonFinite(0.0));
    }
    let p = *params;
    let limit = 10.0 * controls.norm_tol;
    let mut max_drift = initial.norm_drift(&p);
    let times = sample_grid(t_final, controls.sample_dt);
    let sol = dopri5(
        |_, y: &[f64; 8]| eom_rhs(&MeanFieldState::from_array(y), &p).to_array(),
        0.0,
        initial.to_array(),
        &times,
        &controls.ode_options(),
        |t, y| {
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(t));
            }
            let d = MeanFieldState::from_array(y).norm_drift(&p);
            max_drift = max_drift.max(d);
            if d > limit {
                return Err(Error::NormDrift { drift: d, limit });
            }
            Ok(())
        },
    )?;
    if max_drift > controls.norm_tol {
        log::warn!("spin-norm drift {max_drift:e} exceeds norm_tol {:e}", controls.norm_tol);
    }
    let states: Vec<MeanFieldState> = sol.states.iter().map(MeanFieldState::from_array).collect();
    let observables = states.iter().map(|s| s.observables(&p)).collect();
    Ok(Trajectory { params: p, times: sol.times, states, observables, max_norm_drift: max_drift, stats: sol.stats })
}

/// Integrates several initial conditions in parallel. Results keep the
/// input order.
pub fn integrate_batch(
    initials: &[MeanFieldState],
    params: &ModelParams,
    t_final: f64,
    controls: &DynamicsControls,
) -> Vec<Result<Trajectory>> {
    initials.par_iter().map(|x| integrate(x, params, t_final, controls)).collect()
}

pub fn perturbed_fixed_point(fp: &FixedPointRecord, delta_a: Complex64) -> Result<MeanFieldState> {
    if !fp.exists {
        return Err(Error::Domain(format!("{} does not exist", fp.label)));
    }
    let mut s = fp.state;
    s.a += delta_a;
    Ok(s)
}

/// Field seed of modulus `magnitude` and complex phase `phase`.
pub fn seed(magnitude: f64, phase: f64) -> Complex64 {
    Complex64::from_polar(magnitude, phase)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitCycle {
    pub period: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttractorKind {
    FixedPoint(PhaseLabel),
    LimitCycle(LimitCycle),
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttractorVerdict {
    pub kind: AttractorKind,
    pub transient_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictJson {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    pub transient_end: f64,
}

impl AttractorVerdict {
    pub fn to_json(&self) -> VerdictJson {
        let (kind, label, period, amplitude) = match self.kind {
            AttractorKind::FixedPoint(l) => ("fixed_point", Some(l.as_str().to_string()), None, None),
            AttractorKind::LimitCycle(c) => ("limit_cycle", None, Some(c.period), Some(c.amplitude)),
            AttractorKind::Undecided => ("undecided", None, None, None),
        };
        VerdictJson { kind: kind.into(), label, period, amplitude, transient_end: self.transient_end }
    }
}

pub fn classify_attractor(
    traj: &Trajectory,
    fps: &[FixedPointRecord],
    controls: &DynamicsControls,
) -> Result<AttractorVerdict> {
    if traj.len() < 2 {
        return Ok(AttractorVerdict { kind: AttractorKind::Undecided, transient_end: traj.times.last().copied().unwrap_or(0.0) });
    }
    let p = &traj.params;
    let start = traj.window_start(controls.window_fraction);
    let window = &traj.states[start..];
    let fp_tol = controls.fp_tol_rel * p.n1;

    for fp in fps.iter().filter(|fp| fp.exists) {
        let max_dist = window.iter().map(|s| s.distance(&fp.state)).fold(0.0, f64::max);
        if max_dist >= fp_tol {
            continue;
        }
        let report = classify_stability(fp, p, &controls.stability)?;
        if report.verdict != Verdict::Stable {
            log::info!("trajectory rests at {} but it is {}", fp.label, report.verdict);
            continue;
        }
        let last_out = traj.states.iter().rposition(|s| s.distance(&fp.state) >= fp_tol);
        let transient_end = match last_out {
            Some(i) if i + 1 < traj.len() => traj.times[i + 1],
            Some(_) => traj.times[traj.len() - 1],
            None => traj.times[0],
        };
        return Ok(AttractorVerdict { kind: AttractorKind::FixedPoint(fp.label), transient_end });
    }

    let t = &traj.times[start..];
    let x: Vec<f64> = window.iter().map(|s| s.s1.x).collect();
    if let Some(c) = detect_limit_cycle(t, &x, controls.amp_tol_rel * p.n1, controls) {
        return Ok(AttractorVerdict { kind: AttractorKind::LimitCycle(c), transient_end: traj.times[start] });
    }
    Ok(AttractorVerdict { kind: AttractorKind::Undecided, transient_end: traj.times[traj.len() - 1] })
}

/// Linear resampling of `(t, x)` onto a uniform grid with the same number of
/// points.
fn resample_uniform(t: &[f64], x: &[f64]) -> (f64, Vec<f64>) {
    let n = t.len();
    let dt = (t[n - 1] - t[0]) / (n - 1) as f64;
    let mut out = Vec::with_capacity(n);
    let mut k = 0;
    for i in 0..n {
        let ti = t[0] + i as f64 * dt;
        while k + 2 < n && t[k + 1] < ti {
            k += 1;
        }
        let w = if t[k + 1] > t[k] { ((ti - t[k]) / (t[k + 1] - t[k])).clamp(0.0, 1.0) } else { 0.0 };
        out.push(x[k] * (1.0 - w) + x[k + 1] * w);
    }
    (dt, out)
}

fn half_peak_to_peak(x: &[f64]) -> f64 {
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    0.5 * (hi - lo)
}

/// Period and amplitude of a sustained oscillation of `x(t)`, or `None` for
/// a signal that is too small, decaying, or not periodic.
pub fn detect_limit_cycle(t: &[f64], x: &[f64], amp_tol: f64, controls: &DynamicsControls) -> Option<LimitCycle> {
    let n = t.len().min(x.len());
    if n < 8 {
        return None;
    }
    let (dt, y) = resample_uniform(&t[..n], &x[..n]);
    let amplitude = half_peak_to_peak(&y);
    if !(amplitude >= amp_tol) || !amplitude.is_finite() {
        return None;
    }

    let m = controls.decay_windows.max(2);
    let len = n / m;
    if len >= 2 {
        let amps: Vec<f64> = (0..m).map(|k| half_peak_to_peak(&y[k * len..(k + 1) * len])).collect();
        let monotone = amps.windows(2).all(|w| w[1] < w[0]);
        if monotone && amps[m - 1] < (1.0 - controls.decay_tol) * amps[0] {
            return None;
        }
    }

    let mean = y.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let var: f64 = d.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if var <= 0.0 {
        return None;
    }
    let max_lag = n / 2;
    let acf: Vec<f64> = (0..=max_lag)
        .map(|lag| d[..n - lag].iter().zip(&d[lag..]).map(|(u, v)| u * v).sum::<f64>() / ((n - lag) as f64 * var))
        .collect();
    // first peak after the first sign change
    let first_neg = acf.iter().position(|&c| c < 0.0)?;
    let mut best: Option<usize> = None;
    for k in first_neg + 1..max_lag {
        if acf[k] >= acf[k - 1] && acf[k] >= acf[k + 1] && acf[k] > 0.0 {
            best = match best {
                Some(b) if acf[b] >= acf[k] => Some(b),
                _ => Some(k),
            };
            // the first clear maximum wins
            if acf[k] > controls.min_periodicity {
                break;
            }
        }
    }
    let k = best?;
    if acf[k] < controls.min_periodicity {
        return None;
    }
    let (ym, y0, yp) = (acf[k - 1], acf[k], acf[k + 1]);
    let denom = ym - 2.0 * y0 + yp;
    let shift = if denom.abs() > 0.0 { (0.5 * (ym - yp) / denom).clamp(-0.5, 0.5) } else { 0.0 };
    Some(LimitCycle { period: (k as f64 + shift) * dt, amplitude })
}

/// Variance of the complex field amplitude over samples `range`.
pub fn field_variance(traj: &Trajectory, range: std::ops::Range<usize>) -> f64 {
    let s = &traj.states[range];
    if s.is_empty() {
        return 0.0;
    }
    let n = s.len() as f64;
    let mean = s.iter().map(|x| x.a).sum::<Complex64>() / n;
    s.iter().map(|x| (x.a - mean).norm_sqr()).sum::<f64>() / n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parity_transform;
    use crate::steadystate::{all_fixed_points, fixed_point};
    use std::f64::consts::PI;

    fn sr_params() -> ModelParams {
        ModelParams::unit(2.0, 0.3).unwrap()
    }

    #[test]
    fn stable_fixed_point_stays_put() {
        let p = sr_params();
        for label in [PhaseLabel::PlusXFoSR, PhaseLabel::MinusXFiSR] {
            let fp = fixed_point(&p, label).unwrap();
            let tr = integrate(&fp.state, &p, 100.0, &DynamicsControls::default()).unwrap();
            let worst = tr.states.iter().map(|s| s.distance(&fp.state)).fold(0.0, f64::max);
            assert!(worst < 1e-8, "{label}: {worst:e}");
        }
    }

    #[test]
    fn norm_is_conserved_over_long_runs() {
        let p = sr_params();
        let x0 = MeanFieldState::from_directions(Complex64::new(0.3, -0.1), [1.0, 2.0, -0.5], [-1.0, 0.3, 0.2], &p);
        let c = DynamicsControls { sample_dt: 1.0, ..DynamicsControls::default() };
        let tr = integrate(&x0, &p, 1000.0, &c).unwrap();
        assert!(tr.max_norm_drift <= 1e-8, "{:e}", tr.max_norm_drift);
    }

    #[test]
    fn energy_is_conserved_without_loss() {
        let p = ModelParams::new(1.0, 1.0, 0.0, 1.5, 1.0, 0.4).unwrap();
        let x0 = MeanFieldState::from_directions(Complex64::new(0.2, 0.1), [1.0, 0.0, -1.0], [0.0, 1.0, 1.0], &p);
        let tr = integrate(&x0, &p, 50.0, &DynamicsControls::default()).unwrap();
        let e0 = tr.observables[0].energy;
        for o in &tr.observables {
            assert!((o.energy - e0).abs() <= 1e-8 * e0.abs().max(1.0), "{} vs {e0}", o.energy);
        }
    }

    #[test]
    fn parity_image_trajectory() {
        let p = sr_params();
        let x0 = MeanFieldState::from_directions(Complex64::new(0.01, 0.02), [1.0, 1.0, 0.0], [1.0, 0.0, -1.0], &p);
        let c = DynamicsControls::default();
        let a = integrate(&x0, &p, 20.0, &c).unwrap();
        let b = integrate(&parity_transform(&x0), &p, 20.0, &c).unwrap();
        for (u, v) in a.states.iter().zip(&b.states) {
            assert!(parity_transform(u).distance(v) < 1e-8);
        }
    }

    #[test]
    fn tolerance_refinement_converges_at_high_order() {
        let p = sr_params();
        let x0 = MeanFieldState::from_directions(Complex64::new(0.05, 0.0), [1.0, 1.0, 0.0], [1.0, 0.0, -1.0], &p);
        let run = |rtol: f64| {
            let c = DynamicsControls { rtol, atol: rtol * 1e-2, sample_dt: 10.0, norm_tol: 1.0, ..DynamicsControls::default() };
            *integrate(&x0, &p, 10.0, &c).unwrap().last_state().unwrap()
        };
        let reference = run(1e-13);
        let e1 = run(1e-6).distance(&reference);
        let e2 = run(1e-6 / 32.0).distance(&reference);
        // an order-p method gains roughly 32^(p/(p+1)) per 32x tolerance cut
        assert!(e1 / e2 > 8.0, "e1={e1:e} e2={e2:e}");
    }

    #[test]
    fn rejects_bad_t_final() {
        let p = sr_params();
        assert!(integrate(&MeanFieldState::zero(), &p, 0.0, &DynamicsControls::default()).is_err());
        assert!(integrate(&MeanFieldState::zero(), &p, f64::NAN, &DynamicsControls::default()).is_err());
    }

    #[test]
    fn loose_tolerance_trips_norm_check() {
        let p = sr_params();
        let x0 = MeanFieldState::from_directions(Complex64::new(0.3, 0.0), [1.0, 1.0, 0.0], [1.0, 0.0, -1.0], &p);
        let c = DynamicsControls { rtol: 1e-3, atol: 1e-3, ..DynamicsControls::default() };
        assert!(matches!(integrate(&x0, &p, 200.0, &c), Err(Error::NormDrift { .. })));
    }

    #[test]
    fn perturbation_only_touches_the_field() {
        let p = sr_params();
        let fp = fixed_point(&p, PhaseLabel::MinusZFoN).unwrap();
        assert_eq!(perturbed_fixed_point(&fp, Complex64::new(0.0, 0.0)).unwrap(), fp.state);
        let s = perturbed_fixed_point(&fp, Complex64::new(1e-3, 0.0)).unwrap();
        assert_eq!(s.s1, fp.state.s1);
        assert_eq!(s.a, fp.state.a + 1e-3);
        let absent = fixed_point(&ModelParams::unit(0.5, 0.3).unwrap(), PhaseLabel::PlusXFoSR).unwrap();
        assert!(perturbed_fixed_point(&absent, Complex64::new(1e-3, 0.0)).is_err());
    }

    #[test]
    fn unstable_rest_point_is_undecided() {
        let p = sr_params();
        let fp = fixed_point(&p, PhaseLabel::PlusZFoN).unwrap();
        let tr = integrate(&fp.state, &p, 50.0, &DynamicsControls::default()).unwrap();
        let v = classify_attractor(&tr, &all_fixed_points(&p).unwrap(), &DynamicsControls::default()).unwrap();
        assert_eq!(v.kind, AttractorKind::Undecided);
    }

    #[test]
    fn synthetic_sinusoid() {
        let period = 7.3;
        let t: Vec<f64> = (0..4000).map(|i| i as f64 * 0.05).collect();
        let x: Vec<f64> = t.iter().map(|t| 0.3 * (2.0 * PI * t / period).sin()).collect();
        let c = detect_limit_cycle(&t, &x, 1e-3, &DynamicsControls::default()).unwrap();
        assert!((c.period - period).abs() < 0.01 * period, "{}", c.period);
        assert!((c.amplitude - 0.3).abs() < 0.003, "{}", c.amplitude);
    }

    #[test]
    fn decaying_spiral_is_rejected() {
        let t: Vec<f64> = (0..4000).map(|i| i as f64 * 0.05).collect();
        let x: Vec<f64> = t.iter().map(|t| 0.3 * (2.0 * PI * t / 7.3).sin() * (-t / 80.0).exp()).collect();
        assert!(detect_limit_cycle(&t, &x, 1e-3, &DynamicsControls::default()).is_none());
    }

    #[test]
    fn flat_and_noisy_signals_are_rejected() {
        let t: Vec<f64> = (0..1000).map(|i| i as f64 * 0.1).collect();
        let flat = vec![0.25; 1000];
        assert!(detect_limit_cycle(&t, &flat, 1e-3, &DynamicsControls::default()).is_none());
        let tiny: Vec<f64> = t.iter().map(|t| 1e-5 * t.sin()).collect();
        assert!(detect_limit_cycle(&t, &tiny, 1e-3, &DynamicsControls::default()).is_none());
    }

    #[test]
    fn nonuniform_samples_are_resampled() {
        let period = 5.0;
        let t: Vec<f64> = (0..3000).map(|i| { let s = i as f64 * 0.05; s + 0.01 * (s * 3.1).sin() }).collect();
        let x: Vec<f64> = t.iter().map(|t| 0.2 * (2.0 * PI * t / period).cos()).collect();
        let c = detect_limit_cycle(&t, &x, 1e-3, &DynamicsControls::default()).unwrap();
        assert!((c.period - period).abs() < 0.01 * period);
    }

    #[test]
    fn verdict_json_fields() {
        let v = AttractorVerdict { kind: AttractorKind::FixedPoint(PhaseLabel::MinusXFiSR), transient_end: 12.0 };
        let j = serde_json::to_value(v.to_json()).unwrap();
        assert_eq!(j["kind"], "fixed_point");
        assert_eq!(j["label"], "-xFi-SR");
        assert!(j.get("period").is_none());
        let v = AttractorVerdict { kind: AttractorKind::LimitCycle(LimitCycle { period: 3.0, amplitude: 0.1 }), transient_end: 1.0 };
        let j = serde_json::to_value(v.to_json()).unwrap();
        assert_eq!(j["period"], 3.0);
        assert!(j.get("label").is_none());
    }

    #[test]
    fn csv_header_and_rows() {
        let p = sr_params();
        let fp = fixed_point(&p, PhaseLabel::MinusZFoN).unwrap();
        let c = DynamicsControls { sample_dt: 0.5, ..DynamicsControls::default() };
        let tr = integrate(&fp.state, &p, 1.0, &c).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,re_a,im_a,s1x,s1y,s1z,s2x,s2y,s2z,energy,norm1,norm2");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1].split(',').count(), 12);
    }

    #[test]
    fn batch_keeps_order() {
        let p = sr_params();
        let fps = all_fixed_points(&p).unwrap();
        let inits: Vec<MeanFieldState> = fps.iter().map(|f| f.state).collect();
        let out = integrate_batch(&inits, &p, 1.0, &DynamicsControls::default());
        for (r, x) in out.iter().zip(&inits) {
            assert_eq!(r.as_ref().unwrap().states[0], *x);
        }
    }
}
