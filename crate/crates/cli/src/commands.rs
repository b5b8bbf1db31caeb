//! Subcommand implementations.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use anyhow::Context as _;
use log::{info, warn};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use nsdicke::dynamics::{classify_attractor, integrate, perturbed_fixed_point, seed, DynamicsControls, DEFAULT_SEED};
use nsdicke::model::parity_transform;
use nsdicke::steadystate::FixedPointJson;
use nsdicke::stability::{bifurcation_scan, classify_stability, locate_stability_change, ScanRow, StabilityOptions, Verdict};
use nsdicke::sweep::{
    fmt_value, line_cut, phase_diagram, phase_summary, surface, write_gnuplot_matrix, write_line_cut_csv, write_phase_csv,
    write_region_csv, Axis, GridSpec, Metadata, Quantity,
};
use nsdicke::{all_fixed_points, critical_couplings, fixed_point, fixed_point_table, MeanFieldState, ModelParams, PhaseLabel};
use nsdicke_quantum::state::{tilted_initial_state, DensityDiagnostics};
use nsdicke_quantum::{
    build_operators, count_q_lobes, evolve_master, husimi_q, partial_trace_field, AlphaGrid, EvolveOptions, FieldState, HilbertSpec,
    InitialState, LobeReport, ProductState, SpinAngles, TruncationPolicy,
};

use crate::args::{EvolvePreset, QuantumPreset, SweepPart, SweepPreset};
use crate::config::Settings;
use crate::exit::usage;
use crate::gnuplot;

/// Resolved settings plus the output location.
pub struct Context {
    pub settings: Settings,
    pub out_dir: PathBuf,
    pub reproducible: bool,
}

impl Context {
    pub fn new(settings: Settings) -> Self {
        let out_dir = PathBuf::from(settings.out_dir.clone().unwrap_or_else(|| "out".into()));
        let reproducible = settings.reproducible.unwrap_or(false);
        Self { settings, out_dir, reproducible }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn create(&self, name: &str) -> anyhow::Result<BufWriter<File>> {
        std::fs::create_dir_all(&self.out_dir).with_context(|| format!("cannot create {}", self.out_dir.display()))?;
        let p = self.path(name);
        let f = File::create(&p).with_context(|| format!("cannot create {}", p.display()))?;
        Ok(BufWriter::new(f))
    }

    fn write_with(&self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> anyhow::Result<()> {
        let mut w = self.create(name)?;
        body(&mut w).and_then(|_| w.flush()).with_context(|| format!("cannot write {}", self.path(name).display()))?;
        info!("wrote {}", self.path(name).display());
        Ok(())
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> anyhow::Result<()> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)
        })
    }

    fn write_text(&self, name: &str, text: &str) -> anyhow::Result<()> {
        self.write_with(name, |w| w.write_all(text.as_bytes()))
    }

    fn meta(&self, params: ModelParams, grid: Option<GridSpec>) -> Metadata {
        Metadata::new(params, grid, self.reproducible)
    }

    fn params(&self) -> anyhow::Result<ModelParams> {
        Ok(self.settings.model_params()?)
    }
}

fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

// ---------------------------------------------------------------- fixed points

#[derive(Debug, Serialize)]
pub struct FixedPointEntry {
    #[serde(flatten)]
    pub point: FixedPointJson,
    pub verdict: Verdict,
    pub leading: [f64; 2],
    pub eigenvalues: Vec<[f64; 2]>,
}

#[derive(Debug, Serialize)]
pub struct FixedPointReport {
    pub params: ModelParams,
    pub n_fixed_points: usize,
    pub n_stable: usize,
    pub fixed_points: Vec<FixedPointEntry>,
    /// Labels whose branch does not exist at these parameters.
    pub absent: Vec<String>,
}

pub fn fixed_point_report(params: &ModelParams, opts: &StabilityOptions) -> anyhow::Result<FixedPointReport> {
    let table = fixed_point_table(params)?;
    let mut fixed_points = Vec::new();
    let mut absent = Vec::new();
    for fp in &table {
        if !fp.exists {
            absent.push(fp.label.as_str().to_string());
            continue;
        }
        let r = classify_stability(fp, params, opts)?;
        fixed_points.push(FixedPointEntry {
            point: fp.to_json(params),
            verdict: r.verdict,
            leading: pair(r.leading),
            eigenvalues: r.eigenvalues.iter().copied().map(pair).collect(),
        });
    }
    let n_stable = fixed_points.iter().filter(|e| e.verdict == Verdict::Stable).count();
    Ok(FixedPointReport { params: *params, n_fixed_points: fixed_points.len(), n_stable, fixed_points, absent })
}

pub fn cmd_fixed_points(ctx: &Context) -> anyhow::Result<()> {
    let params = ctx.params()?;
    let report = fixed_point_report(&params, &StabilityOptions::default())?;
    ctx.write_json("fixed_points.json", &report)?;
    print_json(&report)
}

// ---------------------------------------------------------------- thresholds

fn write_threshold_curves(ctx: &Context, params: &ModelParams, points: usize) -> anyhow::Result<()> {
    if points < 2 {
        return Err(usage("points must be at least 2"));
    }
    let meta = ctx.meta(*params, None);
    ctx.write_with("thresholds.csv", |w| {
        meta.write_header(w)?;
        writeln!(w, "n2_over_n1,xfi_lambda_over_kappa,xfo_lambda_over_kappa")?;
        for i in 0..points {
            let r = i as f64 / (points - 1) as f64;
            let mut p = *params;
            p.n2 = r * p.n1;
            let c = critical_couplings(&p);
            writeln!(w, "{r},{},{}", fmt_value(c.xfi / p.kappa), fmt_value(c.xfo / p.kappa))?;
        }
        Ok(())
    })
}

pub fn cmd_thresholds(ctx: &Context, boundary: bool) -> anyhow::Result<()> {
    let params = ctx.params()?;
    let c = critical_couplings(&params);
    if boundary {
        write_threshold_curves(ctx, &params, ctx.settings.points.unwrap_or(101))?;
        ctx.write_text("thresholds.gp", &gnuplot::thresholds())?;
    }
    // the infinite ferromagnetic threshold of equal ensembles serializes as null
    let out = json!({ "params": params, "lambda_c_xfi": c.xfi, "lambda_c_xfo": c.xfo });
    ctx.write_json("thresholds.json", &out)?;
    print_json(&out)
}

// ---------------------------------------------------------------- stability scan

#[derive(Debug, Clone, Serialize)]
pub struct StabilityChange {
    pub label: PhaseLabel,
    pub lambda: f64,
    pub from: Verdict,
    pub to: Verdict,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Bisects every verdict change between adjacent scan rows of a branch that
/// exists on both sides.
pub fn refine_changes(params: &ModelParams, rows: &[ScanRow], opts: &StabilityOptions) -> Vec<StabilityChange> {
    let mut out = Vec::new();
    for label in PhaseLabel::ALL {
        let branch: Vec<&ScanRow> = rows.iter().filter(|r| r.label == label).collect();
        for w in branch.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (Some(va), Some(vb)) = (a.verdict, b.verdict) else { continue };
            if va == vb {
                continue;
            }
            match locate_stability_change(params, label, a.lambda, b.lambda, 1e-12, opts) {
                Ok(lambda) => out.push(StabilityChange { label, lambda, from: va, to: vb }),
                Err(e) => warn!("{label}: {e}"),
            }
        }
    }
    out
}

pub fn cmd_stability_scan(ctx: &Context, refine: bool) -> anyhow::Result<()> {
    let params = ctx.params()?;
    let s = &ctx.settings;
    let (lo, hi, n) = (s.lambda_min.unwrap_or(0.0), s.lambda_max.unwrap_or(3.0), s.points.unwrap_or(200));
    if n < 2 || !(lo < hi) {
        return Err(usage(format!("need lambda_min < lambda_max and points >= 2 (got {lo}, {hi}, {n})")));
    }
    let opts = StabilityOptions::default();
    let grid = linspace(lo, hi, n);
    let rows = bifurcation_scan(&params, &grid, &opts)?;
    let meta = ctx.meta(params, None);
    ctx.write_with("stability_scan.csv", |w| {
        meta.write_header(w)?;
        writeln!(w, "lambda,label,exists,verdict,re_lead,im_lead,n_zero_modes,n_neutral_modes")?;
        for r in &rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.lambda,
                r.label,
                r.exists,
                r.verdict_str(),
                fmt_value(r.re_lead),
                fmt_value(r.im_lead),
                r.n_zero_modes,
                r.n_neutral_modes
            )?;
        }
        Ok(())
    })?;
    ctx.write_text("stability_scan.gp", &gnuplot::stability_scan())?;
    let c = critical_couplings(&params);
    let changes = if refine { Some(refine_changes(&params, &rows, &opts)) } else { None };
    let out = json!({
        "params": params,
        "points": n,
        "lambda_c_xfi": c.xfi,
        "lambda_c_xfo": c.xfo,
        "stability_changes": changes,
    });
    ctx.write_json("stability_scan.json", &out)?;
    print_json(&out)
}

// ---------------------------------------------------------------- evolve

pub fn evolve_preset(p: EvolvePreset) -> Settings {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let base = Settings { lambda: Some(2.0), n2_ratio: Some(0.3), t_final: Some(1000.0), ..Settings::default() };
    match p {
        EvolvePreset::Fig3 => Settings { init_s1: Some([h, h, 0.0]), init_s2: Some([h, 0.0, -h]), ..base },
        EvolvePreset::FigS3a => Settings { from: Some("-zFo-N".into()), ..base },
        EvolvePreset::FigS3c => Settings { from: Some("+zFi-N".into()), ..base },
    }
}

pub fn initial_state(s: &Settings, params: &ModelParams) -> anyhow::Result<MeanFieldState> {
    let a0 = s.init_a.map(|[re, im]| Complex64::new(re, im)).unwrap_or_default();
    let a = a0 + seed(s.seed_magnitude.unwrap_or(DEFAULT_SEED), s.seed_phase.unwrap_or(0.0));
    let x0 = match (s.init_s1, s.init_s2) {
        (Some(d1), Some(d2)) => {
            for d in [d1, d2] {
                if !(d.iter().map(|v| v * v).sum::<f64>() > 0.0) || d.iter().any(|v| !v.is_finite()) {
                    return Err(usage("initial spin directions must be finite and non-zero"));
                }
            }
            MeanFieldState::from_directions(a, d1, d2, params)
        }
        (None, None) => {
            let name = s.from.as_deref().unwrap_or("-zFo-N");
            let label: PhaseLabel = name.parse()?;
            let fp = fixed_point(params, label)?;
            if !fp.exists {
                return Err(usage(format!("{label} does not exist at these parameters")));
            }
            perturbed_fixed_point(&fp, a)?
        }
        _ => return Err(usage("give both init_s1 and init_s2")),
    };
    Ok(if s.parity_flip.unwrap_or(false) { parity_transform(&x0) } else { x0 })
}

pub fn cmd_evolve(ctx: &Context, title: &str) -> anyhow::Result<()> {
    let params = ctx.params()?;
    let s = &ctx.settings;
    let d = DynamicsControls::default();
    let controls = DynamicsControls {
        rtol: s.rtol.unwrap_or(d.rtol),
        atol: s.atol.unwrap_or(d.atol),
        sample_dt: s.sample_dt.unwrap_or(d.sample_dt),
        ..d
    };
    let x0 = initial_state(s, &params)?;
    let t_final = s.t_final.unwrap_or(1000.0);
    let clock = Instant::now();
    let traj = integrate(&x0, &params, t_final, &controls).context("mean-field integration failed")?;
    let verdict = classify_attractor(&traj, &all_fixed_points(&params)?, &controls)?;
    info!("integrated to t = {t_final} in {:.2?} ({} steps)", clock.elapsed(), traj.stats.accepted);

    let meta = ctx.meta(params, None).with("t_final", t_final).with("rtol", format!("{:e}", controls.rtol)).with("atol", format!("{:e}", controls.atol));
    ctx.write_with("trajectory.csv", |w| {
        meta.write_header(w)?;
        traj.write_csv(w)
    })?;
    let v = verdict.to_json();
    ctx.write_json("verdict.json", &v)?;
    ctx.write_text("evolve.gp", &gnuplot::trajectory(title))?;
    print_json(&json!({
        "params": params,
        "initial": x0.to_array(),
        "t_final": t_final,
        "verdict": v,
        "max_norm_drift": traj.max_norm_drift,
        "accepted_steps": traj.stats.accepted,
        "rejected_steps": traj.stats.rejected,
    }))
}

// ---------------------------------------------------------------- sweep

pub fn sweep_preset(p: SweepPreset) -> (Settings, SweepPart) {
    match p {
        SweepPreset::Fig1 => (Settings { ratio_points: Some(101), lambda_points: Some(151), ..Settings::default() }, SweepPart::Phase),
        SweepPreset::Fig2 => (Settings { n2_ratio: Some(0.3), points: Some(601), ..Settings::default() }, SweepPart::LineCut),
        SweepPreset::FigS2 => (Settings { ratio_points: Some(101), lambda_points: Some(151), ..Settings::default() }, SweepPart::Surfaces),
    }
}

pub fn cmd_sweep(ctx: &Context, part: SweepPart) -> anyhow::Result<()> {
    let params = ctx.params()?;
    let s = &ctx.settings;
    let opts = StabilityOptions::default();
    let lambda_max = s.lambda_max.unwrap_or(3.0);
    let mut grid = GridSpec::ratio_lambda(params, s.ratio_points.unwrap_or(101), s.lambda_points.unwrap_or(151));
    grid.axis2 = Axis { max: lambda_max, ..grid.axis2 };
    grid.validate()?;
    let mut summary = serde_json::Map::new();
    summary.insert("params".into(), serde_json::to_value(params)?);

    if matches!(part, SweepPart::Phase | SweepPart::All) {
        let clock = Instant::now();
        let cells = phase_diagram(&grid, &opts)?;
        info!("phase diagram of {} cells in {:.2?}", cells.len(), clock.elapsed());
        let meta = ctx.meta(params, Some(grid.clone()));
        ctx.write_with("phase_diagram.csv", |w| write_phase_csv(w, &meta, &grid, &cells))?;
        ctx.write_with("regions.csv", |w| write_region_csv(w, &meta, &grid, &cells))?;
        write_threshold_curves(ctx, &params, grid.axis1.count)?;
        let ps = phase_summary(meta, &grid, &cells);
        ctx.write_json("phase_summary.json", &ps)?;
        ctx.write_text("phase_diagram.gp", &gnuplot::phase_diagram())?;
        summary.insert("region_cells".into(), serde_json::to_value(&ps.region_cells)?);
        summary.insert("boundary_points".into(), ps.boundaries.len().into());
    }
    if matches!(part, SweepPart::LineCut | SweepPart::All) {
        let n = s.points.unwrap_or(601);
        if n < 2 {
            return Err(usage("points must be at least 2"));
        }
        let lambdas: Vec<f64> = linspace(0.0, lambda_max, n).into_iter().map(|x| x * params.kappa).collect();
        let rows = line_cut(&params, &lambdas, &opts)?;
        let meta = ctx.meta(params, None);
        ctx.write_with("line_cut.csv", |w| write_line_cut_csv(w, &meta, &rows))?;
        ctx.write_text("line_cut.gp", &gnuplot::line_cut())?;
        summary.insert("line_cut_rows".into(), rows.len().into());
    }
    if matches!(part, SweepPart::Surfaces | SweepPart::All) {
        let meta = ctx.meta(params, Some(grid.clone()));
        let mut script = String::new();
        let mut files = Vec::new();
        for label in PhaseLabel::ALL {
            for q in [Quantity::Sx, Quantity::Sz, Quantity::DSx, Quantity::E0, Quantity::NPhot] {
                let surf = surface(q, label, &grid)?;
                let name = format!("surface_{}_{}.dat", label.as_str(), q.as_str());
                ctx.write_with(&name, |w| write_gnuplot_matrix(w, &meta, &surf))?;
                script.push_str(&gnuplot::surface(&name, &format!("{} of {}", q.as_str(), label.as_str())));
                script.push_str("pause -1\n");
                files.push(name);
            }
        }
        ctx.write_text("surfaces.gp", &script)?;
        summary.insert("surface_files".into(), files.len().into());
    }
    let out = serde_json::Value::Object(summary);
    print_json(&out)
}

// ---------------------------------------------------------------- quantum

pub fn quantum_preset(p: QuantumPreset) -> Settings {
    match p {
        QuantumPreset::Fig4 => Settings {
            n1: Some(4.0),
            n2: Some(3.0),
            lambda: Some(1.01),
            init: Some("tilted".into()),
            t_final: Some(nsdicke_quantum::state::TILTED_SNAPSHOT_TIME),
            ..Settings::default()
        },
    }
}

/// Defaults for the quantum command without a preset.
pub fn quantum_base() -> Settings {
    Settings { n1: Some(4.0), n2: Some(3.0), ..Settings::default() }
}

fn parse_floats<const N: usize>(s: &str, what: &str) -> anyhow::Result<[f64; N]> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| usage(format!("bad {what} `{s}`: {e}")))?;
    v.try_into().map_err(|_| usage(format!("{what} needs {N} comma-separated numbers, got `{s}`")))
}

/// Parses an `--init` value.
pub fn parse_initial_state(s: &str) -> anyhow::Result<InitialState> {
    let down = |field| InitialState::pure(ProductState { field, spin1: SpinAngles::DOWN, spin2: SpinAngles::DOWN });
    let s = s.trim();
    if s == "down" {
        return Ok(down(FieldState::vacuum()));
    }
    if s == "up" {
        return Ok(InitialState::pure(ProductState { field: FieldState::vacuum(), spin1: SpinAngles::UP, spin2: SpinAngles::UP }));
    }
    if s == "tilted" {
        return Ok(tilted_initial_state());
    }
    if let Some(n) = s.strip_prefix("fock") {
        let n: usize = n.parse().map_err(|_| usage(format!("bad Fock state `{s}`")))?;
        return Ok(down(FieldState::Fock { n }));
    }
    if let Some(rest) = s.strip_prefix("coherent:") {
        let [re, im] = parse_floats::<2>(rest, "coherent amplitude")?;
        return Ok(down(FieldState::Coherent { re, im }));
    }
    if let Some(rest) = s.strip_prefix("css:") {
        let [t1, p1, t2, p2] = parse_floats::<4>(rest, "spin angles")?;
        return Ok(InitialState::pure(ProductState {
            field: FieldState::vacuum(),
            spin1: SpinAngles::new(t1, p1),
            spin2: SpinAngles::new(t2, p2),
        }));
    }
    Err(usage(format!("unknown initial state `{s}` (expected down, up, fock<N>, coherent:RE,IM, css:T1,P1,T2,P2 or tilted)")))
}

fn integer_size(v: f64, name: &str) -> anyhow::Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v <= 1e6 {
        Ok(v as usize)
    } else {
        Err(usage(format!("{name} = {v}: the quantum solver needs a whole number of atoms")))
    }
}

/// Least-squares slope of `ln y` against `t` over samples with `y > floor`.
pub fn log_decay_rate(t: &[f64], y: &[f64], floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = t.iter().zip(y).filter(|(_, &v)| v > floor).map(|(&t, &v)| (t, v.ln())).collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let (st, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mt, my) = (st / n, sy / n);
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + (p.0 - mt) * (p.1 - my), b + (p.0 - mt) * (p.0 - mt)));
    Some(-sxy / sxx)
}

#[derive(Debug, Serialize)]
pub struct QuantumReport {
    pub params: ModelParams,
    pub n_max: usize,
    pub dimension: usize,
    pub field_dimension: usize,
    pub spin_dimensions: [usize; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_trace_drift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_cutoff_population: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_diagnostics: Option<DensityDiagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_n_phot: Option<f64>,
    /// Fitted decay constant of ⟨a†a⟩, reported for an uncoupled cavity.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub photon_decay_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_integral: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lobes: Option<LobeReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lobes_parity_paired: Option<bool>,
}

/// `n_max` from the settings, else sized from the brightest stable mean-field
/// state.
pub fn photon_cutoff(s: &Settings, params: &ModelParams) -> anyhow::Result<usize> {
    if let Some(n) = s.n_max {
        return Ok(n);
    }
    let nphot = all_fixed_points(params)?
        .iter()
        .filter(|fp| classify_stability(fp, params, &StabilityOptions::default()).map(|r| r.verdict == Verdict::Stable).unwrap_or(false))
        .map(|fp| fp.state.a.norm_sqr())
        .fold(0.0, f64::max);
    Ok(HilbertSpec::default_n_max(nphot))
}

pub fn cmd_quantum(ctx: &Context, dimension_only: bool) -> anyhow::Result<()> {
    let params = ctx.params()?;
    let s = &ctx.settings;
    let n1 = integer_size(params.n1, "n1")?;
    let n2 = integer_size(params.n2, "n2")?;
    let n_max = photon_cutoff(s, &params)?;
    let spec = HilbertSpec::new(n_max, n1, n2)?;
    let mut report = QuantumReport {
        params,
        n_max,
        dimension: spec.dim(),
        field_dimension: spec.field_dim(),
        spin_dimensions: [spec.spin_dims().0, spec.spin_dims().1],
        init: None,
        t_final: None,
        dt: None,
        steps: None,
        max_trace_drift: None,
        max_cutoff_population: None,
        final_diagnostics: None,
        final_n_phot: None,
        photon_decay_rate: None,
        q_integral: None,
        lobes: None,
        lobes_parity_paired: None,
    };
    if dimension_only {
        return print_json(&report);
    }

    let init_name = s.init.clone().unwrap_or_else(|| "down".into());
    let init = parse_initial_state(&init_name)?;
    let ops = build_operators(&spec)?;
    let rho0 = init.density_matrix(&spec)?;
    let t_final = s.t_final.unwrap_or(20.0);
    let dt = s.dt.unwrap_or_else(|| EvolveOptions::default_dt(&params, &ops));
    let opts = EvolveOptions {
        sample_interval: s.sample_interval.unwrap_or(0.1),
        truncation: TruncationPolicy::Warn,
        ..EvolveOptions::with_dt(dt)
    };
    info!("dimension {} (n_max {n_max}), dt {dt:.3e}, t_final {t_final}", spec.dim());
    let clock = Instant::now();
    let ev = evolve_master(&rho0, &params, &ops, t_final, &opts)?;
    info!("{} steps in {:.2?}", ev.steps, clock.elapsed());

    ctx.write_with("observables.csv", |w| {
        ctx.meta(params, None).with("n_max", n_max).with("dt", ev.dt).with("init", &init_name).write_header(w)?;
        nsdicke_quantum::master::write_observables_csv(w, &ev.samples)
    })?;

    let rho_f = partial_trace_field(&ev.rho, &spec);
    let last = ev.samples.last().expect("at least the initial sample");
    let grid = AlphaGrid::default_for(last.n_phot);
    let grid = match s.q_points {
        Some(n) => AlphaGrid::square(grid.re[grid.re.len() - 1], n),
        None => grid,
    };
    let q = husimi_q(&rho_f, &grid);
    ctx.write_with("q_function.csv", |w| q.write_csv(w))?;
    ctx.write_with("q_function.dat", |w| q.write_matrix(w))?;
    let lobes = count_q_lobes(&q, s.lobe_threshold.unwrap_or(0.5));
    let paired = lobes.parity_paired(grid.dx().max(grid.dy()));
    ctx.write_json("lobes.json", &json!({ "lobes": lobes, "parity_paired": paired, "q_integral": q.integral() }))?;
    ctx.write_text("quantum.gp", &gnuplot::quantum())?;

    if params.lambda == 0.0 {
        let t: Vec<f64> = ev.samples.iter().map(|x| x.t).collect();
        let n: Vec<f64> = ev.samples.iter().map(|x| x.n_phot).collect();
        report.photon_decay_rate = log_decay_rate(&t, &n, 1e-10);
    }
    report.init = Some(init_name);
    report.t_final = Some(t_final);
    report.dt = Some(ev.dt);
    report.steps = Some(ev.steps);
    report.max_trace_drift = Some(ev.max_trace_drift);
    report.max_cutoff_population = Some(ev.max_cutoff_population);
    report.final_diagnostics = Some(ev.final_diagnostics);
    report.final_n_phot = Some(last.n_phot);
    report.q_integral = Some(q.integral());
    report.lobes = Some(lobes);
    report.lobes_parity_paired = Some(paired);
    ctx.write_json("quantum_report.json", &report)?;
    print_json(&report)
}
