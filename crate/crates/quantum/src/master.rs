//! Hamiltonian, Lindblad generator and fixed-step RK4 evolution.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use nsdicke::ModelParams;

use crate::error::{QuantumError, Result};
use crate::space::{CMatrix, OperatorSet, SparseOp};
use crate::state::{cutoff_population, diagnose, DensityDiagnostics};

/// `ω_c a†a + ω_a(S₁z + S₂z) + λ(a† + a)(S₁x − S₂x)`. Ensemble sizes come
/// from the operator set; `params.n1`/`n2` are not used.
pub fn hamiltonian(params: &ModelParams, ops: &OperatorSet) -> SparseOp {
    let field = ops.num.scale(params.omega_c);
    let atoms = ops.s1z.add(&ops.s2z).scale(params.omega_a);
    let x = ops.a.add(&ops.a_dag);
    let coupling = x.matmul(&ops.s1x.sub(&ops.s2x)).scale(params.lambda);
    field.add(&atoms).add(&coupling)
}

/// Reusable buffers for the Lindblad generator.
#[derive(Debug, Clone)]
pub struct Lindbladian {
    pub h: SparseOp,
    num_diag: Vec<f64>,
    /// `√(n + 1)` for basis states below the cutoff, 0 on the top level.
    lift: Vec<f64>,
    /// Index offset between photon levels `n` and `n + 1`.
    shift: usize,
    kappa: f64,
    work: CMatrix,
}

impl Lindbladian {
    pub fn new(h: SparseOp, ops: &OperatorSet, kappa: f64) -> Self {
        let d = ops.dim();
        let shift = ops.spec.spin_dim();
        let num_diag = ops.num.diag();
        let lift = (0..d).map(|i| if i + shift < d { (num_diag[i] + 1.0).sqrt() } else { 0.0 }).collect();
        Self { h, num_diag, lift, shift, kappa, work: CMatrix::zeros(d, d) }
    }

    pub fn dim(&self) -> usize {
        self.h.dim
    }

    /// `out = −i[H, ρ] + κ(2aρa† − a†aρ − ρa†a)` for Hermitian `ρ`.
    pub fn apply(&mut self, rho: &CMatrix, out: &mut CMatrix) {
        let n = self.dim();
        // Y = −i(H − iκ a†a)ρ ; ρ̇ = Y + Y† + 2κ aρa†
        self.h.mul_dense_into(rho, &mut self.work);
        let r = rho.as_slice();
        {
            let w = self.work.as_mut_slice();
            for j in 0..n {
                for i in 0..n {
                    let k = j * n + i;
                    let hr = w[k];
                    w[k] = Complex64::new(hr.im, -hr.re) - r[k] * (self.kappa * self.num_diag[i]);
                }
            }
        }
        let w = self.work.as_slice();
        let o = out.as_mut_slice();
        let two_k = 2.0 * self.kappa;
        let sh = self.shift;
        // (aρa†)[i, j] = √(n_i + 1)√(n_j + 1) ρ[i + shift, j + shift]
        const B: usize = 32;
        for jb in (0..n).step_by(B) {
            for ib in (0..n).step_by(B) {
                for j in jb..(jb + B).min(n) {
                    let lj = self.lift[j] * two_k;
                    for i in ib..(ib + B).min(n) {
                        let mut v = w[j * n + i] + w[i * n + j].conj();
                        let l = self.lift[i] * lj;
                        if l != 0.0 {
                            v += r[(j + sh) * n + i + sh] * l;
                        }
                        o[j * n + i] = v;
                    }
                }
            }
        }
    }
}

pub fn lindblad_rhs(rho: &CMatrix, h: &SparseOp, ops: &OperatorSet, kappa: f64) -> CMatrix {
    let mut l = Lindbladian::new(h.clone(), ops, kappa);
    let mut out = CMatrix::zeros(rho.nrows(), rho.ncols());
    l.apply(rho, &mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruncationPolicy {
    Ignore,
    Warn,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub dt: f64,
    /// Spacing of recorded observables; rounded to a whole number of steps.
    pub sample_interval: f64,
    /// Trace drift above this aborts the run.
    pub trace_tol: f64,
    pub truncation_limit: f64,
    pub truncation: TruncationPolicy,
}

impl EvolveOptions {
    /// Step guideline `0.01 / max(ω_c, ω_a, λ√(N₁ n_max))`.
    pub fn guideline_dt(params: &ModelParams, ops: &OperatorSet) -> f64 {
        let s = &ops.spec;
        let scale = params.omega_c.max(params.omega_a).max(params.lambda * ((s.n1 * s.n_max) as f64).sqrt());
        0.01 / scale.max(1e-300)
    }

    /// Default step, ten times the guideline. Step-halving at this size moves
    /// observables by far less than 1e−6 for the model's parameter range.
    pub fn default_dt(params: &ModelParams, ops: &OperatorSet) -> f64 {
        10.0 * Self::guideline_dt(params, ops)
    }

    pub fn with_dt(dt: f64) -> Self {
        Self { dt, sample_interval: 0.1, trace_tol: 1e-6, truncation_limit: 1e-6, truncation: TruncationPolicy::Warn }
    }
}

/// One row of the observable time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservableSample {
    pub t: f64,
    pub a: Complex64,
    pub n_phot: f64,
    pub s1: [f64; 3],
    pub s2: [f64; 3],
    pub s_z_total: f64,
    pub dsx: f64,
}

pub fn observables(t: f64, rho: &CMatrix, ops: &OperatorSet) -> ObservableSample {
    let a = ops.a.expectation(rho);
    let p1 = ops.s1p.expectation(rho);
    let p2 = ops.s2p.expectation(rho);
    let z1 = ops.s1z.expectation(rho).re;
    let z2 = ops.s2z.expectation(rho).re;
    let n = ops.num.diag().iter().enumerate().map(|(i, v)| v * rho[(i, i)].re).sum();
    ObservableSample { t, a, n_phot: n, s1: [p1.re, p1.im, z1], s2: [p2.re, p2.im, z2], s_z_total: z1 + z2, dsx: p1.re - p2.re }
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub rho: CMatrix,
    pub samples: Vec<ObservableSample>,
    pub steps: usize,
    pub dt: f64,
    pub max_trace_drift: f64,
    pub max_cutoff_population: f64,
    pub final_diagnostics: DensityDiagnostics,
}

pub fn write_observables_csv<W: Write>(mut w: W, samples: &[ObservableSample]) -> std::io::Result<()> {
    writeln!(w, "t,re_exp_a,im_exp_a,n_phot,s1x,s1y,s1z,s2x,s2y,s2z,s_z_total,dsx")?;
    for s in samples {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            s.t, s.a.re, s.a.im, s.n_phot, s.s1[0], s.s1[1], s.s1[2], s.s2[0], s.s2[1], s.s2[2], s.s_z_total, s.dsx
        )?;
    }
    Ok(())
}

/// Fixed-step RK4 integration of the master equation up to `t_final`.
pub fn evolve_master(
    rho0: &CMatrix,
    params: &ModelParams,
    ops: &OperatorSet,
    t_final: f64,
    opts: &EvolveOptions,
) -> Result<Evolution> {
    let d = ops.dim();
    if rho0.nrows() != d || rho0.ncols() != d {
        return Err(QuantumError::InvalidParameter { name: "rho0", reason: format!("expected {d}x{d}, got {}x{}", rho0.nrows(), rho0.ncols()) });
    }
    if !(opts.dt > 0.0) || !opts.dt.is_finite() {
        return Err(QuantumError::InvalidParameter { name: "dt", reason: "must be positive".into() });
    }
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(QuantumError::InvalidParameter { name: "t_final", reason: "must be non-negative".into() });
    }
    let guide = EvolveOptions::guideline_dt(params, ops);
    if opts.dt > guide {
        log::debug!("dt = {} above the RK4 guideline {guide:.3e}", opts.dt);
    }
    let steps = (t_final / opts.dt).round() as usize;
    let h = if steps > 0 { t_final / steps as f64 } else { 0.0 };
    let every = ((opts.sample_interval / h.max(1e-300)).round() as usize).max(1);

    let mut l = Lindbladian::new(hamiltonian(params, ops), ops, params.kappa);
    let mut rho = rho0.clone();
    let tr0 = rho.trace();
    let (mut k1, mut k2, mut k3, mut k4) = (CMatrix::zeros(d, d), CMatrix::zeros(d, d), CMatrix::zeros(d, d), CMatrix::zeros(d, d));
    let mut tmp = CMatrix::zeros(d, d);
    let mut samples = vec![observables(0.0, &rho, ops)];
    let mut max_drift: f64 = 0.0;
    let mut max_pop = cutoff_population(&rho, &ops.spec);
    let hc = Complex64::new(h, 0.0);

    for step in 1..=steps {
        l.apply(&rho, &mut k1);
        axpy(&rho, &k1, 0.5 * h, &mut tmp);
        l.apply(&tmp, &mut k2);
        axpy(&rho, &k2, 0.5 * h, &mut tmp);
        l.apply(&tmp, &mut k3);
        axpy(&rho, &k3, h, &mut tmp);
        l.apply(&tmp, &mut k4);
        let c6 = hc / 6.0;
        for ((((r, a), b), c), e) in rho
            .as_mut_slice()
            .iter_mut()
            .zip(k1.as_slice())
            .zip(k2.as_slice())
            .zip(k3.as_slice())
            .zip(k4.as_slice())
        {
            *r += c6 * (a + 2.0 * b + 2.0 * c + e);
        }
        let t = step as f64 * h;
        if step % every == 0 || step == steps {
            let tr = rho.trace();
            if !tr.re.is_finite() || !tr.im.is_finite() {
                return Err(QuantumError::NonFinite(t));
            }
            let drift = (tr - tr0).norm();
            max_drift = max_drift.max(drift);
            if drift > opts.trace_tol {
                return Err(QuantumError::Accuracy { drift, limit: opts.trace_tol, t, dt: h });
            }
            max_pop = max_pop.max(cutoff_population(&rho, &ops.spec));
            samples.push(observables(t, &rho, ops));
        }
    }

    if max_pop > opts.truncation_limit {
        match opts.truncation {
            TruncationPolicy::Error => return Err(QuantumError::Truncation { population: max_pop, limit: opts.truncation_limit }),
            TruncationPolicy::Warn => log::warn!(
                "photon cutoff n_max = {} reached population {max_pop:.2e} (limit {:.0e}); results may be cutoff-limited",
                ops.spec.n_max,
                opts.truncation_limit
            ),
            TruncationPolicy::Ignore => {}
        }
    }
    let final_diagnostics = diagnose(&rho, false);
    Ok(Evolution { rho, samples, steps, dt: h, max_trace_drift: max_drift, max_cutoff_population: max_pop, final_diagnostics })
}

fn axpy(x: &CMatrix, k: &CMatrix, s: f64, out: &mut CMatrix) {
    for ((o, a), b) in out.as_mut_slice().iter_mut().zip(x.as_slice()).zip(k.as_slice()) {
        *o = a + b * s;
    }
}
