//! Husimi Q function of the reduced field state and lobe counting.

use std::collections::VecDeque;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::space::CMatrix;
use crate::state::coherent_field;

/// Square grid of phase-space points `α = x + i y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaGrid {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl AlphaGrid {
    pub fn square(half_width: f64, points: usize) -> Self {
        let n = points.max(2);
        let v: Vec<f64> = (0..n).map(|i| -half_width + 2.0 * half_width * i as f64 / (n - 1) as f64).collect();
        Self { re: v.clone(), im: v }
    }

    /// `|Re α|, |Im α| ≤ 3 + 3√n̄` with 101 points per axis.
    pub fn default_for(n_phot: f64) -> Self {
        Self::square(3.0 + 3.0 * n_phot.max(0.0).sqrt(), 101)
    }

    pub fn dx(&self) -> f64 {
        (self.re[self.re.len() - 1] - self.re[0]) / (self.re.len() - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.im[self.im.len() - 1] - self.im[0]) / (self.im.len() - 1) as f64
    }
}

/// `values[iy][ix] = Q(re[ix] + i im[iy])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QGrid {
    pub grid: AlphaGrid,
    pub values: Vec<Vec<f64>>,
}

impl QGrid {
    pub fn max(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    /// Riemann sum of Q over the grid.
    pub fn integral(&self) -> f64 {
        self.values.iter().flatten().sum::<f64>() * self.grid.dx() * self.grid.dy()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "re_alpha,im_alpha,q")?;
        for (y, row) in self.grid.im.iter().zip(&self.values) {
            for (x, q) in self.grid.re.iter().zip(row) {
                writeln!(w, "{x},{y},{q}")?;
            }
        }
        Ok(())
    }

    /// Gnuplot `nonuniform matrix` layout.
    pub fn write_matrix<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let head: Vec<String> = self.grid.re.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{} {}", self.grid.re.len(), head.join(" "))?;
        for (y, row) in self.grid.im.iter().zip(&self.values) {
            let vals: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{y} {}", vals.join(" "))?;
        }
        Ok(())
    }
}

/// `Q(α) = ⟨α|ρ|α⟩/π` with `|α⟩` truncated at the field cutoff.
pub fn husimi_q(rho_field: &CMatrix, grid: &AlphaGrid) -> QGrid {
    let n_max = rho_field.nrows() - 1;
    let values = grid
        .im
        .par_iter()
        .map(|&y| {
            grid.re
                .iter()
                .map(|&x| {
                    let c = coherent_field(n_max, Complex64::new(x, y));
                    let rc = rho_field * &c;
                    c.dotc(&rc).re / std::f64::consts::PI
                })
                .collect()
        })
        .collect();
    QGrid { grid: grid.clone(), values }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lobe {
    /// Q-weighted centre of the component.
    pub centroid: Complex64,
    pub cells: usize,
    pub peak: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LobeReport {
    pub count: usize,
    pub threshold_fraction: f64,
    pub lobes: Vec<Lobe>,
}

impl LobeReport {
    /// True when the lobes split into pairs at `α` and `−α` up to `tol`.
    pub fn parity_paired(&self, tol: f64) -> bool {
        let n = self.lobes.len();
        if n % 2 != 0 {
            return false;
        }
        let mut used = vec![false; n];
        for i in 0..n {
            if used[i] {
                continue;
            }
            used[i] = true;
            let target = -self.lobes[i].centroid;
            let partner = (0..n)
                .filter(|&k| !used[k])
                .min_by(|&u, &v| (self.lobes[u].centroid - target).norm().total_cmp(&(self.lobes[v].centroid - target).norm()));
            match partner {
                Some(k) if (self.lobes[k].centroid - target).norm() <= tol => used[k] = true,
                _ => return false,
            }
        }
        true
    }
}

/// Connected components of `{Q > threshold_fraction · max Q}` under
/// 4-neighbour adjacency, ordered by descending peak.
pub fn count_q_lobes(q: &QGrid, threshold_fraction: f64) -> LobeReport {
    let ny = q.values.len();
    let nx = if ny > 0 { q.values[0].len() } else { 0 };
    let cut = threshold_fraction * q.max();
    let mut seen = vec![vec![false; nx]; ny];
    let mut lobes = Vec::new();
    for sy in 0..ny {
        for sx in 0..nx {
            if seen[sy][sx] || !(q.values[sy][sx] > cut) {
                continue;
            }
            let mut queue = VecDeque::from([(sy, sx)]);
            seen[sy][sx] = true;
            let (mut w, mut cx, mut cy, mut peak, mut cells) = (0.0, 0.0, 0.0, f64::NEG_INFINITY, 0);
            while let Some((y, x)) = queue.pop_front() {
                let v = q.values[y][x];
                w += v;
                cx += v * q.grid.re[x];
                cy += v * q.grid.im[y];
                peak = peak.max(v);
                cells += 1;
                let mut push = |yy: usize, xx: usize| {
                    if !seen[yy][xx] && q.values[yy][xx] > cut {
                        seen[yy][xx] = true;
                        queue.push_back((yy, xx));
                    }
                };
                if y > 0 {
                    push(y - 1, x);
                }
                if y + 1 < ny {
                    push(y + 1, x);
                }
                if x > 0 {
                    push(y, x - 1);
                }
                if x + 1 < nx {
                    push(y, x + 1);
                }
            }
            lobes.push(Lobe { centroid: Complex64::new(cx / w, cy / w), cells, peak });
        }
    }
    lobes.sort_by(|a, b| b.peak.total_cmp(&a.peak).then(a.centroid.re.total_cmp(&b.centroid.re)));
    LobeReport { count: lobes.len(), threshold_fraction, lobes }
}
