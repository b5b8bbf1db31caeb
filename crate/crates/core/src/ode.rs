//! Dormand–Prince 5(4) integrator with step-size control and the standard
//! fourth-order dense output.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step; chosen automatically when `None`.
    pub h_init: Option<f64>,
    pub h_max: f64,
    /// Steps shorter than `h_min_rel * max(1, |t|)` abort the integration.
    pub h_min_rel: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, h_init: None, h_max: f64::INFINITY, h_min_rel: 1e-14, max_steps: 50_000_000 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
pub struct OdeSolution<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
    pub stats: OdeStats,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn combine<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

fn error_norm<const N: usize>(err: &[f64; N], y0: &[f64; N], y1: &[f64; N], opts: &OdeOptions) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let sc = opts.atol + opts.rtol * y0[i].abs().max(y1[i].abs());
        acc += (err[i] / sc).powi(2);
    }
    (acc / N as f64).sqrt()
}

fn initial_step<const N: usize, F>(f: &mut F, t0: f64, y0: &[f64; N], f0: &[f64; N], dir: f64, opts: &OdeOptions) -> f64
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let sc = |i: usize| opts.atol + opts.rtol * y0[i].abs();
    let d0 = (0..N).map(|i| (y0[i] / sc(i)).powi(2)).sum::<f64>().sqrt() / (N as f64).sqrt();
    let d1 = (0..N).map(|i| (f0[i] / sc(i)).powi(2)).sum::<f64>().sqrt() / (N as f64).sqrt();
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(opts.h_max);
    let y1 = combine(y0, dir * h, &[(1.0, f0)]);
    let f1 = f(t0 + dir * h, &y1);
    let d2 = (0..N).map(|i| ((f1[i] - f0[i]) / sc(i)).powi(2)).sum::<f64>().sqrt() / (N as f64).sqrt() / h;
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 { (1e-6f64).max(h * 1e-3) } else { (0.01 / dm).powf(0.2) };
    (100.0 * h).min(h1).min(opts.h_max)
}

/// Integrates `y' = f(t, y)` from `t0` and reports the state at each of
/// `sample_times`, which must be monotone in the direction of integration.
/// `observer` sees every accepted step.
pub fn dopri5<const N: usize, F, O>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    sample_times: &[f64],
    opts: &OdeOptions,
    mut observer: O,
) -> Result<OdeSolution<N>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    O: FnMut(f64, &[f64; N]) -> Result<()>,
{
    if !(opts.rtol > 0.0 && opts.atol >= 0.0) {
        return Err(Error::InvalidParameter { name: "rtol", reason: "tolerances must be positive".into() });
    }
    let mut stats = OdeStats::default();
    let mut out = OdeSolution { times: Vec::with_capacity(sample_times.len()), states: Vec::with_capacity(sample_times.len()), stats };
    let Some(&t_end) = sample_times.last() else {
        return Ok(out);
    };
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    if sample_times.windows(2).any(|w| dir * (w[1] - w[0]) < 0.0) || dir * (sample_times[0] - t0) < 0.0 {
        return Err(Error::Domain("sample times must be monotone and start at or after t0".into()));
    }
    let mut next = 0;
    while next < sample_times.len() && sample_times[next] == t0 {
        out.times.push(t0);
        out.states.push(y0);
        next += 1;
    }
    if next == sample_times.len() {
        return Ok(out);
    }

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    stats.evaluations += 1;
    let mut h = match opts.h_init {
        Some(h) => h.abs(),
        None => {
            stats.evaluations += 1;
            initial_step(&mut f, t0, &y0, &k1, dir, opts)
        }
    };
    let mut rejected_last = false;

    loop {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::StepBudget { t, max_steps: opts.max_steps });
        }
        let h_min = opts.h_min_rel * t.abs().max(1.0);
        if h < h_min {
            return Err(Error::StepUnderflow { t, h });
        }
        let last = dir * (t + dir * h - t_end) >= 0.0;
        if last {
            h = dir * (t_end - t);
        }
        let hs = dir * h;
        let k2 = f(t + C2 * hs, &combine(&y, hs, &[(A21, &k1)]));
        let k3 = f(t + C3 * hs, &combine(&y, hs, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * hs, &combine(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(t + C5 * hs, &combine(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(t + hs, &combine(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y1 = combine(&y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(t + hs, &y1);
        stats.evaluations += 6;

        let mut err = [0.0; N];
        for i in 0..N {
            err[i] = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let en = error_norm(&err, &y, &y1, opts);
        if !en.is_finite() {
            if y1.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite(t));
            }
            stats.rejected += 1;
            h *= 0.1;
            rejected_last = true;
            continue;
        }

        if en <= 1.0 {
            stats.accepted += 1;
            let t_new = if last { t_end } else { t + hs };
            // dense output between t and t_new
            if next < sample_times.len() && dir * (sample_times[next] - t_new) <= 0.0 {
                let mut r2 = [0.0; N];
                let mut r3 = [0.0; N];
                let mut r4 = [0.0; N];
                let mut r5 = [0.0; N];
                for i in 0..N {
                    let dy = y1[i] - y[i];
                    let b = hs * k1[i] - dy;
                    r2[i] = dy;
                    r3[i] = b;
                    r4[i] = dy - hs * k7[i] - b;
                    r5[i] = hs * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                }
                while next < sample_times.len() && dir * (sample_times[next] - t_new) <= 0.0 {
                    let ts = sample_times[next];
                    let th = if hs != 0.0 { (ts - t) / hs } else { 1.0 };
                    let th1 = 1.0 - th;
                    let mut ys = [0.0; N];
                    for i in 0..N {
                        ys[i] = y[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
                    }
                    if ts == t_new {
                        ys = y1;
                    }
                    out.times.push(ts);
                    out.states.push(ys);
                    next += 1;
                }
            }
            t = t_new;
            y = y1;
            k1 = k7;
            observer(t, &y)?;
            if last || next == sample_times.len() {
                out.stats = stats;
                return Ok(out);
            }
            let mut fac = 0.9 * en.max(1e-10).powf(-0.2);
            fac = fac.clamp(0.2, 10.0);
            if rejected_last {
                fac = fac.min(1.0);
            }
            h = (h * fac).min(opts.h_max);
            rejected_last = false;
        } else {
            stats.rejected += 1;
            h *= (0.9 * en.powf(-0.2)).max(0.2);
            rejected_last = true;
        }
    }
}
