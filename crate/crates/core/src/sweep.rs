//! Parameter grids: phase diagrams, λ line cuts and steady-state surfaces.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::stability::{classify_stability, StabilityOptions, Verdict};
use crate::steadystate::{fixed_point_table, FixedPointRecord, PhaseLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisName {
    /// `N₂/N₁` at fixed `N₁`.
    N2OverN1,
    /// `λ/κ` at fixed `κ`.
    LambdaOverKappa,
    Lambda,
    OmegaC,
    OmegaA,
    Kappa,
}

impl AxisName {
    pub fn as_str(self) -> &'static str {
        match self {
            AxisName::N2OverN1 => "n2_over_n1",
            AxisName::LambdaOverKappa => "lambda_over_kappa",
            AxisName::Lambda => "lambda",
            AxisName::OmegaC => "omega_c",
            AxisName::OmegaA => "omega_a",
            AxisName::Kappa => "kappa",
        }
    }

    pub fn apply(self, params: &mut ModelParams, v: f64) {
        match self {
            AxisName::N2OverN1 => params.n2 = v * params.n1,
            AxisName::LambdaOverKappa => params.lambda = v * params.kappa,
            AxisName::Lambda => params.lambda = v,
            AxisName::OmegaC => params.omega_c = v,
            AxisName::OmegaA => params.omega_a = v,
            AxisName::Kappa => params.kappa = v,
        }
    }
}

impl fmt::Display for AxisName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AxisName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "n2_over_n1" | "n2_ratio" | "n2/n1" => AxisName::N2OverN1,
            "lambda_over_kappa" | "lambda/kappa" => AxisName::LambdaOverKappa,
            "lambda" => AxisName::Lambda,
            "omega_c" => AxisName::OmegaC,
            "omega_a" => AxisName::OmegaA,
            "kappa" => AxisName::Kappa,
            _ => return Err(Error::InvalidParameter { name: "axis", reason: format!("unknown axis `{s}`") }),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: AxisName,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(name: AxisName, min: f64, max: f64, count: usize) -> Self {
        Self { name, min, max, count }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return Err(Error::InvalidParameter { name: "count", reason: format!("axis {} needs at least 2 points", self.name) });
        }
        if !(self.min < self.max) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::InvalidParameter {
                name: "min",
                reason: format!("axis {} needs finite min < max, got [{}, {}]", self.name, self.min, self.max),
            });
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let n = self.count - 1;
        (0..=n).map(|i| if i == n { self.max } else { self.min + (self.max - self.min) * i as f64 / n as f64 }).collect()
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }
}

/// Two-axis grid over a base parameter set. Axis 1 runs along rows of the
/// output matrices, axis 2 down the columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axis1: Axis,
    pub axis2: Axis,
    pub base: ModelParams,
}

impl GridSpec {
    /// The phase-diagram plane: `N₂/N₁ ∈ [0, 1]` against `λ/κ ∈ [0, 3]`.
    pub fn ratio_lambda(base: ModelParams, n_ratio: usize, n_lambda: usize) -> Self {
        Self {
            axis1: Axis::new(AxisName::N2OverN1, 0.0, 1.0, n_ratio),
            axis2: Axis::new(AxisName::LambdaOverKappa, 0.0, 3.0, n_lambda),
            base,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.axis1.validate()?;
        self.axis2.validate()?;
        if self.axis1.name == self.axis2.name {
            return Err(Error::InvalidParameter { name: "axis2", reason: "axes must differ".into() });
        }
        Ok(())
    }

    pub fn params_at(&self, x1: f64, x2: f64) -> ModelParams {
        let mut p = self.base;
        // ratios refer to the base N₁ and κ, so apply absolute axes first
        let (first, second) = if matches!(self.axis1.name, AxisName::N2OverN1 | AxisName::LambdaOverKappa) {
            ((self.axis2.name, x2), (self.axis1.name, x1))
        } else {
            ((self.axis1.name, x1), (self.axis2.name, x2))
        };
        first.0.apply(&mut p, first.1);
        second.0.apply(&mut p, second.1);
        p
    }

    /// Row-major `(i2, i1)` cell coordinates.
    fn cells(&self) -> Vec<(f64, f64)> {
        let v1 = self.axis1.values();
        let v2 = self.axis2.values();
        v2.iter().flat_map(|&y| v1.iter().map(move |&x| (x, y))).collect()
    }
}

/// Observables of one fixed point. Quantities are NaN where the point does not
/// exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub label: PhaseLabel,
    pub exists: bool,
    /// `None` when absent.
    pub stable: Option<bool>,
    pub sx: f64,
    pub sz: f64,
    pub dsx: f64,
    pub e0: f64,
    pub nphot: f64,
}

impl PointSummary {
    fn from_record(fp: &FixedPointRecord, stable: Option<bool>) -> Self {
        if !fp.exists {
            return Self { label: fp.label, exists: false, stable: None, sx: f64::NAN, sz: f64::NAN, dsx: f64::NAN, e0: f64::NAN, nphot: f64::NAN };
        }
        let s = &fp.state;
        Self {
            label: fp.label,
            exists: true,
            stable,
            sx: s.s1.x + s.s2.x,
            sz: s.s1.z + s.s2.z,
            dsx: s.s1.x - s.s2.x,
            e0: fp.energy,
            nphot: s.a.norm_sqr(),
        }
    }

    pub fn quantity(&self, q: Quantity) -> f64 {
        match q {
            Quantity::Sx => self.sx,
            Quantity::Sz => self.sz,
            Quantity::DSx => self.dsx,
            Quantity::E0 => self.e0,
            Quantity::NPhot => self.nphot,
        }
    }

    /// `solid` for stable, `dashed` for unstable or marginal, `absent`.
    pub fn branch_style(&self) -> &'static str {
        match self.stable {
            Some(true) => "solid",
            Some(false) => "dashed",
            None => "absent",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub x1: f64,
    pub x2: f64,
    pub n_fixed_points: usize,
    pub stable_labels: Vec<PhaseLabel>,
    pub points: Vec<PointSummary>,
}

fn summarize(params: &ModelParams, opts: &StabilityOptions) -> Result<Vec<PointSummary>> {
    fixed_point_table(params)?
        .iter()
        .map(|fp| {
            let stable = if fp.exists { Some(classify_stability(fp, params, opts)?.verdict == Verdict::Stable) } else { None };
            Ok(PointSummary::from_record(fp, stable))
        })
        .collect()
}

pub fn phase_diagram(grid: &GridSpec, opts: &StabilityOptions) -> Result<Vec<PhaseCell>> {
    grid.validate()?;
    grid.cells()
        .par_iter()
        .map(|&(x1, x2)| {
            let p = grid.params_at(x1, x2);
            p.validate()?;
            let points = summarize(&p, opts)?;
            Ok(PhaseCell {
                x1,
                x2,
                n_fixed_points: points.iter().filter(|s| s.exists).count(),
                stable_labels: points.iter().filter(|s| s.stable == Some(true)).map(|s| s.label).collect(),
                points,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineCutRow {
    pub lambda: f64,
    pub point: PointSummary,
}

/// Every fixed point's observables along `lambda_grid`, eight rows per λ.
pub fn line_cut(params: &ModelParams, lambda_grid: &[f64], opts: &StabilityOptions) -> Result<Vec<LineCutRow>> {
    let per: Vec<Result<Vec<LineCutRow>>> = lambda_grid
        .par_iter()
        .map(|&lambda| {
            let p = params.with_lambda(lambda);
            p.validate()?;
            Ok(summarize(&p, opts)?.into_iter().map(|point| LineCutRow { lambda, point }).collect())
        })
        .collect();
    let mut rows = Vec::with_capacity(lambda_grid.len() * 8);
    for r in per {
        rows.extend(r?);
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantity {
    #[serde(rename = "Sx")]
    Sx,
    #[serde(rename = "Sz")]
    Sz,
    #[serde(rename = "dSx")]
    DSx,
    #[serde(rename = "E0")]
    E0,
    #[serde(rename = "nphot")]
    NPhot,
}

impl Quantity {
    pub const ALL: [Quantity; 5] = [Quantity::Sx, Quantity::Sz, Quantity::DSx, Quantity::E0, Quantity::NPhot];

    pub fn as_str(self) -> &'static str {
        match self {
            Quantity::Sx => "Sx",
            Quantity::Sz => "Sz",
            Quantity::DSx => "dSx",
            Quantity::E0 => "E0",
            Quantity::NPhot => "nphot",
        }
    }
}

impl FromStr for Quantity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Quantity::ALL
            .into_iter()
            .find(|q| q.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter { name: "quantity", reason: format!("unknown quantity `{s}`") })
    }
}

/// Steady-state quantity on a grid. `values[i2][i1]`, NaN where the point is
/// absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub quantity: Quantity,
    pub label: PhaseLabel,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl Surface {
    pub fn get(&self, i1: usize, i2: usize) -> f64 {
        self.values[i2][i1].unwrap_or(f64::NAN)
    }
}

pub fn surface(quantity: Quantity, label: PhaseLabel, grid: &GridSpec) -> Result<Surface> {
    grid.validate()?;
    let flat: Vec<Result<Option<f64>>> = grid
        .cells()
        .par_iter()
        .map(|&(x1, x2)| {
            let p = grid.params_at(x1, x2);
            p.validate()?;
            let fp = crate::steadystate::fixed_point(&p, label)?;
            Ok(fp.exists.then(|| PointSummary::from_record(&fp, None).quantity(quantity)))
        })
        .collect();
    let n1 = grid.axis1.count;
    let mut values = Vec::with_capacity(grid.axis2.count);
    let mut row = Vec::with_capacity(n1);
    for v in flat {
        row.push(v?);
        if row.len() == n1 {
            values.push(std::mem::replace(&mut row, Vec::with_capacity(n1)));
        }
    }
    Ok(Surface { quantity, label, x1: grid.axis1.values(), x2: grid.axis2.values(), values })
}

/// A change of the fixed-point count between two neighbouring cells of one
/// axis-1 column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionBoundary {
    pub x1: f64,
    /// Midpoint between the two cells.
    pub x2: f64,
    pub from: usize,
    pub to: usize,
}

pub fn region_boundaries(grid: &GridSpec, cells: &[PhaseCell]) -> Vec<RegionBoundary> {
    let n1 = grid.axis1.count;
    let n2 = grid.axis2.count;
    let mut out = Vec::new();
    if cells.len() != n1 * n2 {
        return out;
    }
    for i1 in 0..n1 {
        for i2 in 1..n2 {
            let a = &cells[(i2 - 1) * n1 + i1];
            let b = &cells[i2 * n1 + i1];
            if a.n_fixed_points != b.n_fixed_points {
                out.push(RegionBoundary { x1: a.x1, x2: 0.5 * (a.x2 + b.x2), from: a.n_fixed_points, to: b.n_fixed_points });
            }
        }
    }
    out
}

/// Header block written at the top of every data file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub generator: String,
    pub version: String,
    pub params: ModelParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    /// Seconds since the Unix epoch; omitted in reproducible mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub extra: Vec<(String, String)>,
}

impl Metadata {
    pub fn new(params: ModelParams, grid: Option<GridSpec>, reproducible: bool) -> Self {
        let timestamp = (!reproducible)
            .then(|| std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0));
        Self {
            generator: "nsdicke".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            params,
            grid,
            timestamp,
            extra: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.extra.push((key.into(), value.to_string()));
        self
    }

    pub fn write_header<W: Write>(&self, w: &mut W) -> io::Result<()> {
        let p = &self.params;
        writeln!(w, "# generator: {} {}", self.generator, self.version)?;
        writeln!(
            w,
            "# params: omega_c={} omega_a={} kappa={} lambda={} n1={} n2={}",
            p.omega_c, p.omega_a, p.kappa, p.lambda, p.n1, p.n2
        )?;
        if let Some(g) = &self.grid {
            for (k, a) in [("axis1", &g.axis1), ("axis2", &g.axis2)] {
                writeln!(w, "# {k}: {} min={} max={} count={}", a.name, a.min, a.max, a.count)?;
            }
        }
        for (k, v) in &self.extra {
            writeln!(w, "# {k}: {v}")?;
        }
        if let Some(t) = self.timestamp {
            writeln!(w, "# timestamp_unix: {t}")?;
        }
        Ok(())
    }
}

/// Formats a float for CSV, writing non-finite values as `nan`.
pub fn fmt_value(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        "nan".to_string()
    }
}

fn fmt_stable(s: Option<bool>) -> &'static str {
    match s {
        Some(true) => "true",
        Some(false) => "false",
        None => "nan",
    }
}

pub fn write_phase_csv<W: Write>(mut w: W, meta: &Metadata, grid: &GridSpec, cells: &[PhaseCell]) -> io::Result<()> {
    meta.write_header(&mut w)?;
    writeln!(w, "{},{},n_fixed_points,label,exists,stable,sx,sz,dsx,e0,nphot", grid.axis1.name, grid.axis2.name)?;
    for c in cells {
        for p in &c.points {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                c.x1,
                c.x2,
                c.n_fixed_points,
                p.label,
                p.exists,
                fmt_stable(p.stable),
                fmt_value(p.sx),
                fmt_value(p.sz),
                fmt_value(p.dsx),
                fmt_value(p.e0),
                fmt_value(p.nphot)
            )?;
        }
    }
    Ok(())
}

/// One row per cell with the region descriptors only.
pub fn write_region_csv<W: Write>(mut w: W, meta: &Metadata, grid: &GridSpec, cells: &[PhaseCell]) -> io::Result<()> {
    meta.write_header(&mut w)?;
    writeln!(w, "{},{},n_fixed_points,n_stable,stable_labels", grid.axis1.name, grid.axis2.name)?;
    for c in cells {
        let labels: Vec<&str> = c.stable_labels.iter().map(|l| l.as_str()).collect();
        writeln!(w, "{},{},{},{},{}", c.x1, c.x2, c.n_fixed_points, c.stable_labels.len(), labels.join(" "))?;
    }
    Ok(())
}

pub fn write_line_cut_csv<W: Write>(mut w: W, meta: &Metadata, rows: &[LineCutRow]) -> io::Result<()> {
    meta.write_header(&mut w)?;
    writeln!(w, "lambda,label,exists,stable,branch,sx,sz,dsx,e0,nphot")?;
    for r in rows {
        let p = &r.point;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.lambda,
            p.label,
            p.exists,
            fmt_stable(p.stable),
            p.branch_style(),
            fmt_value(p.sx),
            fmt_value(p.sz),
            fmt_value(p.dsx),
            fmt_value(p.e0),
            fmt_value(p.nphot)
        )?;
    }
    Ok(())
}

/// Gnuplot `nonuniform matrix` layout: the first row holds the column count
/// and the axis-1 values, each further row an axis-2 value and its data.
pub fn write_gnuplot_matrix<W: Write>(mut w: W, meta: &Metadata, s: &Surface) -> io::Result<()> {
    meta.write_header(&mut w)?;
    writeln!(w, "# surface: {} of {}", s.quantity.as_str(), s.label)?;
    let head: Vec<String> = s.x1.iter().map(|v| v.to_string()).collect();
    writeln!(w, "{} {}", s.x1.len(), head.join(" "))?;
    for (y, row) in s.x2.iter().zip(&s.values) {
        let vals: Vec<String> = row.iter().map(|v| fmt_value(v.unwrap_or(f64::NAN))).collect();
        writeln!(w, "{} {}", y, vals.join(" "))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseSummary {
    pub meta: Metadata,
    pub boundaries: Vec<RegionBoundary>,
    /// Count of cells per number of fixed points, keyed 4, 6, 8.
    pub region_cells: Vec<(usize, usize)>,
}

pub fn phase_summary(meta: Metadata, grid: &GridSpec, cells: &[PhaseCell]) -> PhaseSummary {
    let region_cells = [4, 6, 8].iter().map(|&n| (n, cells.iter().filter(|c| c.n_fixed_points == n).count())).collect();
    PhaseSummary { meta, boundaries: region_boundaries(grid, cells), region_cells }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steadystate::critical_couplings;

    fn unit() -> ModelParams {
        ModelParams::unit(1.0, 0.3).unwrap()
    }

    fn single_cell(ratio: f64, lambda: f64) -> PhaseCell {
        let grid = GridSpec {
            axis1: Axis::new(AxisName::N2OverN1, ratio, ratio + 1e-9, 2),
            axis2: Axis::new(AxisName::LambdaOverKappa, lambda, lambda + 1e-9, 2),
            base: unit(),
        };
        phase_diagram(&grid, &StabilityOptions::default()).unwrap().remove(0)
    }

    #[test]
    fn reference_cells() {
        use PhaseLabel::*;
        let c = single_cell(0.3, 1.0);
        assert_eq!(c.n_fixed_points, 4);
        assert_eq!(c.stable_labels, vec![MinusZFoN, MinusZFiN]);
        let c = single_cell(0.3, 1.5);
        assert_eq!(c.n_fixed_points, 6);
        assert_eq!(c.stable_labels, vec![MinusZFiN, PlusXFiSR, MinusXFiSR]);
        let c = single_cell(0.3, 2.0);
        assert_eq!(c.n_fixed_points, 8);
        assert_eq!(c.stable_labels, vec![PlusXFoSR, MinusXFoSR, PlusXFiSR, MinusXFiSR]);
    }

    #[test]
    fn axis_values_hit_endpoints() {
        let a = Axis::new(AxisName::Lambda, 0.0, 3.0, 7);
        let v = a.values();
        assert_eq!(v.len(), 7);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[6], 3.0);
        assert!((a.step() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn grid_validation() {
        let mut g = GridSpec::ratio_lambda(unit(), 3, 3);
        assert!(g.validate().is_ok());
        g.axis1.count = 1;
        assert!(g.validate().is_err());
        let mut g = GridSpec::ratio_lambda(unit(), 3, 3);
        g.axis2.max = g.axis2.min;
        assert!(g.validate().is_err());
        let mut g = GridSpec::ratio_lambda(unit(), 3, 3);
        g.axis2.name = AxisName::N2OverN1;
        assert!(g.validate().is_err());
    }

    #[test]
    fn row_major_order() {
        let g = GridSpec::ratio_lambda(unit(), 3, 4);
        let cells = phase_diagram(&g, &StabilityOptions::default()).unwrap();
        assert_eq!(cells.len(), 12);
        assert_eq!((cells[1].x1, cells[1].x2), (0.5, 0.0));
        assert_eq!((cells[3].x1, cells[3].x2), (0.0, 1.0));
    }

    #[test]
    fn ratio_axis_scales_with_n1() {
        let base = ModelParams::new(1.0, 1.0, 1.0, 1.0, 10.0, 0.0).unwrap();
        let g = GridSpec::ratio_lambda(base, 2, 2);
        let p = g.params_at(0.3, 2.0);
        assert!((p.n2 - 3.0).abs() < 1e-12);
        assert_eq!(p.lambda, 2.0);
    }

    #[test]
    fn boundaries_track_thresholds() {
        let g = GridSpec::ratio_lambda(unit(), 11, 61);
        let cells = phase_diagram(&g, &StabilityOptions::default()).unwrap();
        let step = g.axis2.step();
        for b in region_boundaries(&g, &cells) {
            let cc = critical_couplings(&g.params_at(b.x1, 1.0));
            let target = if (b.from, b.to) == (4, 6) { cc.xfi } else { cc.xfo };
            assert!((b.x2 - target).abs() <= step, "{b:?} vs {target}");
        }
    }

    #[test]
    fn line_cut_parity_mirror_and_continuity() {
        let p = unit();
        let grid: Vec<f64> = (0..400).map(|i| 0.5 + 2.5 * i as f64 / 399.0).collect();
        let rows = line_cut(&p, &grid, &StabilityOptions::default()).unwrap();
        assert_eq!(rows.len(), 3200);
        for chunk in rows.chunks(8) {
            let get = |l: PhaseLabel| chunk.iter().find(|r| r.point.label == l).unwrap().point;
            let (a, b) = (get(PhaseLabel::PlusXFiSR), get(PhaseLabel::MinusXFiSR));
            if a.exists {
                assert!((a.dsx + b.dsx).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn order_parameter_square_root_onset() {
        let p = unit();
        let lc = critical_couplings(&p).xfi;
        let xs: Vec<f64> = (0..30).map(|i| lc * (1.0 + 10f64.powf(-4.0 + 2.0 * i as f64 / 29.0))).collect();
        let rows = line_cut(&p, &xs, &StabilityOptions::default()).unwrap();
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.point.label == PhaseLabel::PlusXFiSR)
            .map(|r| ((r.lambda - lc).ln(), r.point.dsx.abs().ln()))
            .collect();
        let n = pts.len() as f64;
        let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!((slope - 0.5).abs() < 0.05, "{slope}");
    }

    #[test]
    fn energy_continuous_across_threshold() {
        let p = unit();
        let lc = critical_couplings(&p).xfi;
        let mut jumps = Vec::new();
        for h in [1e-2, 1e-3, 1e-4] {
            let rows = line_cut(&p, &[lc - h, lc + h], &StabilityOptions::default()).unwrap();
            let below = rows[..8].iter().find(|r| r.point.label == PhaseLabel::MinusZFoN).unwrap().point;
            let above = rows[8..].iter().find(|r| r.point.label == PhaseLabel::PlusXFiSR).unwrap().point;
            jumps.push(((above.e0 - below.e0).abs(), (above.sz - below.sz).abs()));
        }
        assert!(jumps[2].0 < jumps[0].0 && jumps[2].1 < jumps[0].1);
        assert!(jumps[2].0 < 1e-3 && jumps[2].1 < 1e-3, "{jumps:?}");
    }

    #[test]
    fn surfaces() {
        let g = GridSpec::ratio_lambda(unit(), 11, 13);
        let plus = surface(Quantity::DSx, PhaseLabel::PlusXFiSR, &g).unwrap();
        let minus = surface(Quantity::DSx, PhaseLabel::MinusXFiSR, &g).unwrap();
        for (r1, r2) in plus.values.iter().zip(&minus.values) {
            for (a, b) in r1.iter().zip(r2) {
                match (a, b) {
                    (Some(a), Some(b)) => assert!((a + b).abs() < 1e-14),
                    (None, None) => {}
                    _ => panic!("existence mismatch"),
                }
            }
        }
        let xfo = surface(Quantity::Sx, PhaseLabel::PlusXFoSR, &g).unwrap();
        assert!(xfo.values.iter().all(|row| row[10].is_none()));
        let sz = surface(Quantity::Sz, PhaseLabel::MinusZFoN, &g).unwrap();
        for (i1, r) in g.axis1.values().iter().enumerate() {
            for i2 in 0..13 {
                assert!((sz.get(i1, i2) + (1.0 + r) / 2.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn csv_and_matrix_output() {
        let g = GridSpec::ratio_lambda(unit(), 2, 3);
        let cells = phase_diagram(&g, &StabilityOptions::default()).unwrap();
        let meta = Metadata::new(unit(), Some(g), true);
        let mut buf = Vec::new();
        write_phase_csv(&mut buf, &meta, &g, &cells).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(!text.contains("timestamp"));
        let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
        assert_eq!(header, "n2_over_n1,lambda_over_kappa,n_fixed_points,label,exists,stable,sx,sz,dsx,e0,nphot");
        assert!(text.contains(",nan,"));
        assert!(!text.contains("NaN"));

        let s = surface(Quantity::E0, PhaseLabel::PlusXFoSR, &g).unwrap();
        let mut buf = Vec::new();
        write_gnuplot_matrix(&mut buf, &meta, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data[0], "2 0 1");
        assert_eq!(data.len(), 4);

        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("null"));
        assert!(Metadata::new(unit(), None, false).timestamp.is_some());
    }

    #[test]
    fn output_is_independent_of_worker_count() {
        let g = GridSpec::ratio_lambda(unit(), 9, 9);
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let cells = pool.install(|| phase_diagram(&g, &StabilityOptions::default()).unwrap());
            let mut buf = Vec::new();
            write_phase_csv(&mut buf, &Metadata::new(unit(), Some(g), true), &g, &cells).unwrap();
            buf
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn name_parsing() {
        assert_eq!("lambda_over_kappa".parse::<AxisName>().unwrap(), AxisName::LambdaOverKappa);
        assert!("foo".parse::<AxisName>().is_err());
        assert_eq!("dsx".parse::<Quantity>().unwrap(), Quantity::DSx);
        assert_eq!("nphot".parse::<Quantity>().unwrap(), Quantity::NPhot);
    }
}
