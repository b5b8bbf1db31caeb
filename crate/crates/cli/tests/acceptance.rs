//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! exits non-zero if any of them fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};

use nsdicke::dynamics::{classify_attractor, field_variance, integrate, perturbed_fixed_point, seed, AttractorKind, DynamicsControls, DEFAULT_SEED};
use nsdicke::stability::{bifurcation_scan, jacobian, locate_stability_change, StabilityOptions, Verdict};
use nsdicke::sweep::{phase_diagram, region_boundaries, GridSpec};
use nsdicke::{all_fixed_points, critical_couplings, eom_rhs, fixed_point, MeanFieldState, ModelParams, PhaseLabel};
use nsdicke_cli::args::{EvolvePreset, QuantumPreset};
use nsdicke_cli::commands::{evolve_preset, initial_state, log_decay_rate, parse_initial_state, photon_cutoff, quantum_preset};
use nsdicke_cli::config::Settings;
use nsdicke_quantum::state::hermiticity_error;
use nsdicke_quantum::{
    build_operators, count_q_lobes, evolve_master, husimi_q, partial_trace_field, AlphaGrid, EvolveOptions, HilbertSpec,
    TruncationPolicy,
};

use PhaseLabel::*;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn unit(lambda: f64) -> ModelParams {
    ModelParams::unit(lambda, 0.3).unwrap()
}

// 1. thresholds
fn thresholds() -> Outcome {
    // 50-digit evaluations of sqrt(2/1.3) and sqrt(2/0.7)
    const XFI: f64 = 1.240_347_345_892_084_5;
    const XFO: f64 = 1.690_308_509_457_033_0;
    let c = critical_couplings(&unit(1.0));
    let (e_fi, e_fo) = ((c.xfi - XFI).abs() / XFI, (c.xfo - XFO).abs() / XFO);
    ensure!(e_fi < 1e-10 && e_fo < 1e-10, "relative errors {e_fi:e}, {e_fo:e}");
    let mut worst: f64 = 0.0;
    for i in 0..=100 {
        let r = i as f64 / 100.0;
        let c = critical_couplings(&ModelParams::unit(1.0, r).unwrap());
        let fi = (2.0 / (1.0 + r)).sqrt();
        worst = worst.max((c.xfi - fi).abs() / fi);
        if i == 100 {
            ensure!(c.xfo.is_infinite(), "xFo threshold finite at N2 = N1");
        } else {
            let fo = (2.0 / (1.0 - r)).sqrt();
            worst = worst.max((c.xfo - fo).abs() / fo);
        }
    }
    ensure!(worst < 1e-12, "boundary curve error {worst:e}");
    Ok(format!("lambda_c = {:.12}, {:.12}; curves over 101 ratios within {worst:.1e}", c.xfi, c.xfo))
}

// 2. fixed-point census on a 50x50 grid
fn census() -> Outcome {
    let grid = GridSpec::ratio_lambda(unit(1.0), 50, 50);
    let cells = phase_diagram(&grid, &StabilityOptions::default()).map_err(|e| e.to_string())?;
    let step = grid.axis2.step();
    let mut checked = 0;
    for c in &cells {
        let t = critical_couplings(&grid.params_at(c.x1, c.x2));
        let near = |lc: f64| (c.x2 - lc).abs() <= step;
        if c.x2 == 0.0 || near(t.xfi) || near(t.xfo) {
            continue;
        }
        let (n, set): (usize, Vec<PhaseLabel>) = if c.x2 < t.xfi {
            (4, vec![MinusZFoN, MinusZFiN])
        } else if c.x2 < t.xfo {
            (6, vec![MinusZFiN, PlusXFiSR, MinusXFiSR])
        } else {
            (8, vec![PlusXFoSR, MinusXFoSR, PlusXFiSR, MinusXFiSR])
        };
        ensure!(c.n_fixed_points == n, "({}, {}): {} fixed points, expected {n}", c.x1, c.x2, c.n_fixed_points);
        // with N2 = 0 or N2 = N1 the antialigned normal state keeps an
        // undamped spin mode at ±i·ω_a and is only marginal
        if c.x1 > 0.0 && c.x1 < 1.0 {
            let got: Vec<PhaseLabel> = c.stable_labels.iter().copied().collect();
            let mut want = set.clone();
            want.sort();
            ensure!(got == want, "({}, {}): stable {got:?}, expected {want:?}", c.x1, c.x2);
        }
        checked += 1;
    }
    let boundaries = region_boundaries(&grid, &cells);
    for b in &boundaries {
        let t = critical_couplings(&grid.params_at(b.x1, b.x2));
        let d = (b.x2 - t.xfi).abs().min((b.x2 - t.xfo).abs());
        ensure!(d <= step, "boundary at ({}, {}) is {d} from both thresholds", b.x1, b.x2);
    }
    Ok(format!("{checked} interior cells match, {} boundary crossings within one cell", boundaries.len()))
}

// 3. steady-state values at lambda = 2
fn steady_state_values() -> Outcome {
    let p = unit(2.0);
    let mut worst_res: f64 = 0.0;
    for (labels, want) in [([PlusXFoSR, MinusXFoSR], 0.349927), ([PlusXFiSR, MinusXFiSR], 0.461538)] {
        let plus = fixed_point(&p, labels[0]).unwrap().state.s1.x;
        let minus = fixed_point(&p, labels[1]).unwrap().state.s1.x;
        ensure!((plus - want).abs() < 1e-6 && (minus + want).abs() < 1e-6, "{:?}: S1x = {plus}, {minus}", labels);
    }
    for fp in all_fixed_points(&p).unwrap() {
        worst_res = worst_res.max(eom_rhs(&fp.state, &p).norm());
    }
    ensure!(worst_res <= 1e-10, "residual {worst_res:e}");
    Ok(format!("S1x(xFo) = ±0.349927, S1x(xFi) = ±0.461538; max residual {worst_res:.1e}"))
}

// 4. stability pattern along a 200-point scan
fn stability_pattern() -> Outcome {
    let p = unit(1.0);
    let grid: Vec<f64> = (1..=200).map(|i| 3.0 * i as f64 / 200.0).collect();
    let opts = StabilityOptions::default();
    let rows = bifurcation_scan(&p, &grid, &opts).map_err(|e| e.to_string())?;
    let t = critical_couplings(&p);
    for r in &rows {
        let got = r.verdict;
        let want = match r.label {
            PlusZFoN | PlusZFiN => Some(Verdict::Unstable),
            MinusZFoN => Some(if r.lambda < t.xfi { Verdict::Stable } else { Verdict::Unstable }),
            MinusZFiN => Some(if r.lambda < t.xfo { Verdict::Stable } else { Verdict::Unstable }),
            _ => r.exists.then_some(Verdict::Stable),
        };
        ensure!(got == want, "{} at lambda {}: {got:?}, expected {want:?}", r.label, r.lambda);
    }
    let z_fo = locate_stability_change(&p, MinusZFoN, 1.0, 1.5, 1e-13, &opts).map_err(|e| e.to_string())?;
    let z_fi = locate_stability_change(&p, MinusZFiN, 1.5, 2.0, 1e-13, &opts).map_err(|e| e.to_string())?;
    let (e1, e2) = ((z_fo - t.xfi).abs(), (z_fi - t.xfo).abs());
    ensure!(e1 < 1e-6 && e2 < 1e-6, "zero crossings off by {e1:e}, {e2:e}");
    Ok(format!("1600 verdicts match; crossings at {z_fo:.9} and {z_fi:.9} (errors {e1:.0e}, {e2:.0e})"))
}

fn controls() -> DynamicsControls {
    DynamicsControls { sample_dt: 0.1, ..DynamicsControls::default() }
}

// 5. basins of the normal states
fn basins() -> Outcome {
    let p = unit(2.0);
    let fps = all_fixed_points(&p).unwrap();
    let mut notes = Vec::new();
    for (from, to) in [(MinusZFoN, MinusXFiSR), (PlusZFiN, PlusXFoSR)] {
        let x0 = perturbed_fixed_point(&fixed_point(&p, from).unwrap(), seed(DEFAULT_SEED, 0.0)).unwrap();
        let tr = integrate(&x0, &p, 1000.0, &controls()).map_err(|e| e.to_string())?;
        let v = classify_attractor(&tr, &fps, &controls()).map_err(|e| e.to_string())?;
        ensure!(v.kind == AttractorKind::FixedPoint(to), "{from}: {:?}", v.kind);
        let d = tr.last_state().unwrap().distance(&fixed_point(&p, to).unwrap().state);
        ensure!(d < 1e-4 * p.n1, "{from}: terminal distance {d:e}");
        ensure!(tr.max_norm_drift <= 1e-8, "{from}: norm drift {:e}", tr.max_norm_drift);
        notes.push(format!("{from} -> {to} (distance {d:.1e}, drift {:.1e})", tr.max_norm_drift));
    }
    Ok(notes.join("; "))
}

// 6. limit cycle from the tilted initial state
fn limit_cycle() -> Outcome {
    let s = Settings::resolve(evolve_preset(EvolvePreset::Fig3), None, &Settings::default());
    let p = s.model_params().unwrap();
    let x0 = initial_state(&s, &p).map_err(|e| e.to_string())?;
    let c = controls();
    let tr = integrate(&x0, &p, s.t_final.unwrap(), &c).map_err(|e| e.to_string())?;
    let v = classify_attractor(&tr, &all_fixed_points(&p).unwrap(), &c).map_err(|e| e.to_string())?;
    let AttractorKind::LimitCycle(cycle) = v.kind else { return Err(format!("verdict {:?}", v.kind)) };
    let start = tr.window_start(c.window_fraction);
    let (lo, hi) = tr.states[start..].iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x.s1.x), hi.max(x.s1.x)));
    for label in [MinusXFoSR, MinusXFiSR] {
        let x = fixed_point(&p, label).unwrap().state.s1.x;
        ensure!(lo < x && x < hi, "{label} S1x = {x} outside the orbit range [{lo}, {hi}]");
    }
    // the oscillation keeps its size between the two halves of the window
    let mid = (start + tr.len()) / 2;
    let span = |r: std::ops::Range<usize>| {
        let xs = tr.states[r].iter().map(|x| x.s1.x);
        xs.clone().fold(f64::NEG_INFINITY, f64::max) - xs.fold(f64::INFINITY, f64::min)
    };
    let (first, second) = (span(start..mid), span(mid..tr.len()));
    ensure!(second >= 0.99 * first, "S1x swing decays from {first} to {second}");
    let early = field_variance(&tr, 0..tr.window_start(0.9));
    let late = field_variance(&tr, start..tr.len());
    ensure!(late < 0.1 * early, "field variance {late:e} not below 10% of {early:e}");
    Ok(format!(
        "period {:.4}, S1x in [{lo:.4}, {hi:.4}], field variance {late:.1e} vs initial {early:.1e}",
        cycle.period
    ))
}

// 7. quantum solver invariants at D = 220
fn quantum_suite() -> Outcome {
    let params = ModelParams::new(1.0, 1.0, 1.0, 1.01, 4.0, 3.0).unwrap();
    let spec = HilbertSpec::new(10, 4, 3).map_err(|e| e.to_string())?;
    ensure!(spec.dim() == 220, "dimension {}", spec.dim());
    let ops = build_operators(&spec).unwrap();
    let rho0 = parse_initial_state("down").unwrap().density_matrix(&spec).unwrap();
    // whole number of steps per sample so both step sizes sample the same times
    let dt = 0.5 / (0.5 / EvolveOptions::default_dt(&params, &ops)).ceil();
    let opts = EvolveOptions { sample_interval: 0.5, truncation: TruncationPolicy::Ignore, ..EvolveOptions::with_dt(dt) };
    let ev = evolve_master(&rho0, &params, &ops, 20.0, &opts).map_err(|e| e.to_string())?;
    let trace = (ev.rho.trace() - Complex64::new(1.0, 0.0)).norm();
    ensure!(trace <= 1e-8 && ev.max_trace_drift <= 1e-8, "trace drift {trace:e}");
    let herm = hermiticity_error(&ev.rho);
    ensure!(herm <= 1e-10, "hermiticity error {herm:e}");
    let mut casimir: f64 = 0.0;
    for l in [1, 2] {
        let s2 = ops.spin_squared(l);
        let (a, b) = (s2.expectation(&rho0).re, s2.expectation(&ev.rho).re);
        casimir = casimir.max((b - a).abs() / a);
    }
    ensure!(casimir <= 1e-8, "spin-length drift {casimir:e}");

    // step halving over a shorter window
    let half = EvolveOptions { dt: 0.5 * dt, ..opts };
    let a = evolve_master(&rho0, &params, &ops, 5.0, &opts).map_err(|e| e.to_string())?;
    let b = evolve_master(&rho0, &params, &ops, 5.0, &half).map_err(|e| e.to_string())?;
    let mut halving: f64 = 0.0;
    ensure!(a.samples.len() == b.samples.len(), "sample counts differ");
    for (x, y) in a.samples.iter().zip(&b.samples) {
        ensure!((x.t - y.t).abs() < 1e-9, "sample times {} and {} differ", x.t, y.t);
        let d = [x.n_phot - y.n_phot, x.s1[2] - y.s1[2], x.s2[2] - y.s2[2], x.dsx - y.dsx, (x.a - y.a).norm()];
        halving = halving.max(d.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    ensure!(halving < 1e-6, "step halving moves observables by {halving:e}");

    // empty cavity decay
    let free = ModelParams::new(1.0, 1.0, 1.0, 0.0, 4.0, 3.0).unwrap();
    let rho_f = parse_initial_state("fock1").unwrap().density_matrix(&spec).unwrap();
    let ev_f = evolve_master(&rho_f, &free, &ops, 3.0, &EvolveOptions { sample_interval: 0.1, ..opts }).map_err(|e| e.to_string())?;
    let t: Vec<f64> = ev_f.samples.iter().map(|s| s.t).collect();
    let n: Vec<f64> = ev_f.samples.iter().map(|s| s.n_phot).collect();
    let rate = log_decay_rate(&t, &n, 1e-12).ok_or("no decay fit")?;
    ensure!((rate - 2.0).abs() < 0.02, "decay rate {rate}");
    Ok(format!(
        "trace {trace:.1e}, hermiticity {herm:.1e}, S_l^2 {casimir:.1e}, halving {halving:.1e}, decay rate {rate:.6}"
    ))
}

// 8. Q-function lobes
fn q_function() -> Outcome {
    let s = Settings::resolve(quantum_preset(QuantumPreset::Fig4), None, &Settings::default());
    let params = s.model_params().unwrap();
    let spec = HilbertSpec::new(photon_cutoff(&s, &params).map_err(|e| e.to_string())?, 4, 3).map_err(|e| e.to_string())?;
    let ops = build_operators(&spec).unwrap();
    let rho0 = parse_initial_state(s.init.as_deref().unwrap()).unwrap().density_matrix(&spec).unwrap();
    let opts = EvolveOptions { sample_interval: 1.0, ..EvolveOptions::with_dt(EvolveOptions::default_dt(&params, &ops)) };
    let ev = evolve_master(&rho0, &params, &ops, s.t_final.unwrap(), &opts).map_err(|e| e.to_string())?;
    let rho_f = partial_trace_field(&ev.rho, &spec);
    let grid = AlphaGrid::default_for(ev.samples.last().unwrap().n_phot);
    let q = husimi_q(&rho_f, &grid);
    let integral = q.integral();
    let lobes = count_q_lobes(&q, 0.5);
    let centroids: Vec<String> = lobes.lobes.iter().map(|l| format!("{:.2}{:+.2}i", l.centroid.re, l.centroid.im)).collect();
    ensure!((integral - 1.0).abs() <= 1e-3, "Q integral {integral}");
    ensure!(lobes.count == 4, "{} lobes at {centroids:?}", lobes.count);
    ensure!(lobes.parity_paired(grid.dx()), "lobes not parity paired: {centroids:?}");
    Ok(format!("4 parity-paired lobes at {centroids:?}, Q integral {integral:.6}"))
}

// 9. oracle equivalence
fn residual(x: &SVector<f64, 6>, p: &ModelParams) -> SVector<f64, 8> {
    let (j1, j2) = p.spin_lengths();
    let dir = |t: f64, f: f64| [t.sin() * f.cos(), t.sin() * f.sin(), t.cos()];
    let s = MeanFieldState::new(Complex64::new(x[0], x[1]), dir(x[2], x[3]).map(|v| v * j1), dir(x[4], x[5]).map(|v| v * j2));
    SVector::from(eom_rhs(&s, p).to_array())
}

/// Levenberg-Marquardt on the residual over field and spin angles, with a
/// finite-difference Jacobian.
fn minimize(mut x: SVector<f64, 6>, p: &ModelParams) -> (SVector<f64, 6>, f64) {
    let mut mu = 1e-3;
    let mut r = residual(&x, p);
    for _ in 0..400 {
        let mut j = SMatrix::<f64, 8, 6>::zeros();
        for k in 0..6 {
            let h = 1e-7 * x[k].abs().max(1.0);
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            j.set_column(k, &((residual(&xp, p) - residual(&xm, p)) / (2.0 * h)));
        }
        let g = j.transpose() * r;
        let a = j.transpose() * j;
        loop {
            let m = a + SMatrix::<f64, 6, 6>::from_diagonal(&a.diagonal().map(|d| mu * d.max(1e-12)));
            let Some(step) = m.lu().solve(&(-g)) else { return (x, r.norm()) };
            let trial = x + step;
            let rt = residual(&trial, p);
            if rt.norm() < r.norm() {
                x = trial;
                r = rt;
                mu = (mu * 0.3).max(1e-15);
                break;
            }
            mu *= 10.0;
            if mu > 1e12 {
                return (x, r.norm());
            }
        }
        if r.norm() < 1e-13 {
            break;
        }
    }
    (x, r.norm())
}

fn oracles() -> Outcome {
    let mut rng = rand::rngs::StdRng::seed_from_u64(20_240_917);
    let mut worst_jac: f64 = 0.0;
    for _ in 0..100 {
        let p = ModelParams::new(
            rng.gen_range(0.2..2.0),
            rng.gen_range(0.2..2.0),
            rng.gen_range(0.0..2.0),
            rng.gen_range(0.0..3.0),
            1.0,
            rng.gen_range(0.0..1.0),
        )
        .unwrap();
        let x: [f64; 8] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let s = MeanFieldState::from_array(&x);
        let j = jacobian(&s, &p);
        let mut fd = SMatrix::<f64, 8, 8>::zeros();
        for k in 0..8 {
            let h = 1e-6;
            let (mut xp, mut xm) = (x, x);
            xp[k] += h;
            xm[k] -= h;
            let d = (SVector::from(eom_rhs(&MeanFieldState::from_array(&xp), &p).to_array())
                - SVector::from(eom_rhs(&MeanFieldState::from_array(&xm), &p).to_array()))
                / (2.0 * h);
            fd.set_column(k, &d);
        }
        worst_jac = worst_jac.max((j - fd).amax() / j.amax().max(1.0));
    }
    ensure!(worst_jac < 1e-6, "Jacobian mismatch {worst_jac:e}");

    let mut found_total = 0;
    for _ in 0..10 {
        let p = ModelParams::new(
            rng.gen_range(0.5..1.5),
            rng.gen_range(0.5..1.5),
            rng.gen_range(0.2..1.5),
            rng.gen_range(0.3..3.0),
            1.0,
            rng.gen_range(0.05..0.95),
        )
        .unwrap();
        let known = all_fixed_points(&p).unwrap();
        let thetas = [0.15, 0.8, 1.57, 2.35, 3.0];
        let phis = [0.0, 1.57, 3.14, 4.71];
        let mut found = vec![false; known.len()];
        for &t1 in &thetas {
            for &f1 in &phis {
                for &t2 in &thetas {
                    for &f2 in &phis {
                        for a in [-1.0, 1.0] {
                            let x0 = SVector::<f64, 6>::from([a, 0.0, t1, f1, t2, f2]);
                            let (x, res) = minimize(x0, &p);
                            if res > 1e-10 {
                                continue;
                            }
                            let (j1, j2) = p.spin_lengths();
                            let dir = |t: f64, f: f64| [t.sin() * f.cos(), t.sin() * f.sin(), t.cos()];
                            let s = MeanFieldState::new(Complex64::new(x[0], x[1]), dir(x[2], x[3]).map(|v| v * j1), dir(x[4], x[5]).map(|v| v * j2));
                            let hit = known.iter().position(|fp| fp.state.distance(&s) < 1e-6);
                            match hit {
                                Some(k) => found[k] = true,
                                None => return Err(format!("extra fixed point {:?} at {p:?}", s.to_array())),
                            }
                        }
                    }
                }
            }
        }
        found_total += found.iter().filter(|&&f| f).count();
    }
    Ok(format!("Jacobian error {worst_jac:.1e}; minimizer found {found_total} known fixed points and no others"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("thresholds", thresholds),
        ("fixed-point census", census),
        ("steady-state values", steady_state_values),
        ("stability pattern", stability_pattern),
        ("basin dynamics", basins),
        ("limit cycle", limit_cycle),
        ("quantum suite", quantum_suite),
        ("Q-function lobes", q_function),
        ("oracle equivalence", oracles),
    ];
    let budgets = [1.0, 10.0, 1.0, 5.0, 5.0, 30.0, 120.0, 300.0, 60.0].map(Duration::from_secs_f64);
    // `cargo test -- <filter>` runs the criteria whose number or name matches
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, ((name, f), budget)) in criteria.iter().zip(budgets).enumerate() {
        let n = i + 1;
        if !filter.is_empty() && !filter.iter().any(|x| x == &n.to_string() || name.contains(x.as_str())) {
            continue;
        }
        let clock = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or(e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
        });
        let elapsed = clock.elapsed();
        let over = if elapsed > budget { format!(", over the {budget:?} budget") } else { String::new() };
        match outcome {
            Ok(detail) => println!("criterion {n} ({name}): PASS [{elapsed:.2?}{over}] {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n} ({name}): FAIL [{elapsed:.2?}{over}] {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
