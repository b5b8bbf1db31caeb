//! Product space Fock(n_max) ⊗ spin(N₁/2) ⊗ spin(N₂/2) and its operators.
//!
//! Basis index of `|n, m₁, m₂⟩` is `(n·(N₁+1) + k₁)·(N₂+1) + k₂` where
//! `k_l = j_l − m_l`, so each spin factor runs from `m = +j` down to `−j`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QuantumError, Result};

pub type CMatrix = DMatrix<Complex64>;

pub const DEFAULT_BUDGET: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertSpec {
    pub n_max: usize,
    pub n1: usize,
    pub n2: usize,
    pub budget: usize,
}

impl HilbertSpec {
    pub fn new(n_max: usize, n1: usize, n2: usize) -> Result<Self> {
        let s = Self { n_max, n1, n2, budget: DEFAULT_BUDGET };
        s.validate()?;
        Ok(s)
    }

    pub fn with_budget(mut self, budget: usize) -> Result<Self> {
        self.budget = budget;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 {
            return Err(QuantumError::InvalidParameter { name: "n1", reason: "first ensemble must be non-empty".into() });
        }
        let dim = self.dim();
        if dim > self.budget {
            return Err(QuantumError::Resource { dim, budget: self.budget });
        }
        Ok(())
    }

    pub fn field_dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn spin_dims(&self) -> (usize, usize) {
        (self.n1 + 1, self.n2 + 1)
    }

    pub fn spin_dim(&self) -> usize {
        (self.n1 + 1) * (self.n2 + 1)
    }

    pub fn dim(&self) -> usize {
        self.field_dim().saturating_mul(self.spin_dim())
    }

    pub fn index(&self, n: usize, k1: usize, k2: usize) -> usize {
        (n * (self.n1 + 1) + k1) * (self.n2 + 1) + k2
    }

    /// Default photon cutoff for a mean-field photon number `nphot`.
    pub fn default_n_max(nphot: f64) -> usize {
        (4.0 * nphot.max(1.0)).ceil() as usize + 6
    }
}

/// Real sparse matrix in compressed-row form. Every operator of the model is
/// real in the number/Dicke basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl SparseOp {
    pub fn from_triplets(dim: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; dim + 1];
        let mut col = Vec::with_capacity(t.len());
        let mut val: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *val.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            col.push(c);
            val.push(v);
            row_ptr[r + 1] = col.len();
        }
        for r in 0..dim {
            row_ptr[r + 1] = row_ptr[r + 1].max(row_ptr[r]);
        }
        let mut s = Self { dim, row_ptr, col, val };
        s.prune();
        s
    }

    fn prune(&mut self) {
        let mut t = Vec::with_capacity(self.val.len());
        let mut any_zero = false;
        for (r, c, v) in self.triplets() {
            if v == 0.0 {
                any_zero = true;
            } else {
                t.push((r, c, v));
            }
        }
        if any_zero {
            let mut row_ptr = vec![0; self.dim + 1];
            let mut col = Vec::with_capacity(t.len());
            let mut val = Vec::with_capacity(t.len());
            for (r, c, v) in t {
                col.push(c);
                val.push(v);
                row_ptr[r + 1] = col.len();
            }
            for r in 0..self.dim {
                row_ptr[r + 1] = row_ptr[r + 1].max(row_ptr[r]);
            }
            *self = Self { dim: self.dim, row_ptr, col, val };
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_triplets(dim, (0..dim).map(|i| (i, i, 1.0)).collect())
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self::from_triplets(d.len(), d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect())
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col[k], self.val[k])))
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (c, r, v)).collect())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { val: self.val.iter().map(|v| v * s).collect(), ..self.clone() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self::from_triplets(self.dim, self.triplets().chain(other.triplets()).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut t = Vec::new();
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let (m, v) = (self.col[k], self.val[k]);
                for q in other.row_ptr[m]..other.row_ptr[m + 1] {
                    t.push((r, other.col[q], v * other.val[q]));
                }
            }
        }
        Self::from_triplets(self.dim, t)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.matmul(other).sub(&other.matmul(self))
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.val.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn diag(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.dim];
        for (r, c, v) in self.triplets() {
            if r == c {
                d[r] += v;
            }
        }
        d
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn to_complex_dense(&self) -> CMatrix {
        self.to_dense().map(|v| Complex64::new(v, 0.0))
    }

    /// `out = self · x` for a column-major dense `x`.
    pub fn mul_dense_into(&self, x: &CMatrix, out: &mut CMatrix) {
        let n = self.dim;
        let xs = x.as_slice();
        let os = out.as_mut_slice();
        for j in 0..x.ncols() {
            let xc = &xs[j * n..(j + 1) * n];
            let oc = &mut os[j * n..(j + 1) * n];
            for r in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc += xc[self.col[k]] * self.val[k];
                }
                oc[r] = acc;
            }
        }
    }

    pub fn mul_dense(&self, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, x.ncols());
        self.mul_dense_into(x, &mut out);
        out
    }

    /// `Tr(self · ρ)`.
    pub fn expectation(&self, rho: &CMatrix) -> Complex64 {
        self.triplets().map(|(r, c, v)| rho[(c, r)] * v).sum()
    }
}

/// Kronecker product of three small factors given as triplets.
fn kron3(
    dims: (usize, usize, usize),
    a: &[(usize, usize, f64)],
    b: &[(usize, usize, f64)],
    c: &[(usize, usize, f64)],
) -> SparseOp {
    let (_, db, dc) = dims;
    let mut t = Vec::with_capacity(a.len() * b.len() * c.len());
    for &(ra, ca, va) in a {
        for &(rb, cb, vb) in b {
            for &(rc, cc, vc) in c {
                t.push(((ra * db + rb) * dc + rc, (ca * db + cb) * dc + cc, va * vb * vc));
            }
        }
    }
    SparseOp::from_triplets(dims.0 * db * dc, t)
}

fn eye(d: usize) -> Vec<(usize, usize, f64)> {
    (0..d).map(|i| (i, i, 1.0)).collect()
}

/// Annihilation operator on `n_max + 1` Fock states.
pub fn ladder_a(n_max: usize) -> Vec<(usize, usize, f64)> {
    (1..=n_max).map(|n| (n - 1, n, (n as f64).sqrt())).collect()
}

/// `S_z` and `S_+` for spin `j = two_j / 2`, basis ordered `m = j, j−1, …, −j`.
pub fn spin_factors(two_j: usize) -> (Vec<(usize, usize, f64)>, Vec<(usize, usize, f64)>) {
    let j = two_j as f64 / 2.0;
    let m = |k: usize| j - k as f64;
    let sz = (0..=two_j).map(|k| (k, k, m(k))).collect();
    // S₊|m⟩ = √((j − m)(j + m + 1)) |m + 1⟩ ; |m + 1⟩ sits at k − 1
    let sp = (1..=two_j).map(|k| (k - 1, k, ((j - m(k)) * (j + m(k) + 1.0)).sqrt())).collect();
    (sz, sp)
}

fn transpose_t(t: &[(usize, usize, f64)]) -> Vec<(usize, usize, f64)> {
    t.iter().map(|&(r, c, v)| (c, r, v)).collect()
}

#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub spec: HilbertSpec,
    pub a: SparseOp,
    pub a_dag: SparseOp,
    pub s1z: SparseOp,
    pub s1p: SparseOp,
    pub s1m: SparseOp,
    pub s2z: SparseOp,
    pub s2p: SparseOp,
    pub s2m: SparseOp,
    /// `a†a`
    pub num: SparseOp,
    pub s1x: SparseOp,
    pub s2x: SparseOp,
}

pub fn build_operators(spec: &HilbertSpec) -> Result<OperatorSet> {
    spec.validate()?;
    let dims = (spec.field_dim(), spec.n1 + 1, spec.n2 + 1);
    let (i_f, i_1, i_2) = (eye(dims.0), eye(dims.1), eye(dims.2));
    let a1 = ladder_a(spec.n_max);
    let (z1, p1) = spin_factors(spec.n1);
    let (z2, p2) = spin_factors(spec.n2);
    let a = kron3(dims, &a1, &i_1, &i_2);
    let a_dag = a.transpose();
    let s1z = kron3(dims, &i_f, &z1, &i_2);
    let s1p = kron3(dims, &i_f, &p1, &i_2);
    let s1m = kron3(dims, &i_f, &transpose_t(&p1), &i_2);
    let s2z = kron3(dims, &i_f, &i_1, &z2);
    let s2p = kron3(dims, &i_f, &i_1, &p2);
    let s2m = kron3(dims, &i_f, &i_1, &transpose_t(&p2));
    let num = a_dag.matmul(&a);
    let s1x = s1p.add(&s1m).scale(0.5);
    let s2x = s2p.add(&s2m).scale(0.5);
    Ok(OperatorSet { spec: *spec, a, a_dag, s1z, s1p, s1m, s2z, s2p, s2m, num, s1x, s2x })
}

impl OperatorSet {
    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// `S_l² = S_z² + (S₊S₋ + S₋S₊)/2` for ensemble `l ∈ {1, 2}`.
    pub fn spin_squared(&self, l: usize) -> SparseOp {
        let (z, p, m) = if l == 1 { (&self.s1z, &self.s1p, &self.s1m) } else { (&self.s2z, &self.s2p, &self.s2m) };
        z.matmul(z).add(&p.matmul(m).add(&m.matmul(p)).scale(0.5))
    }

    /// Square of the total spin `S₁ + S₂`.
    pub fn total_spin_squared(&self) -> SparseOp {
        let z = self.s1z.add(&self.s2z);
        let p = self.s1p.add(&self.s2p);
        let m = self.s1m.add(&self.s2m);
        z.matmul(&z).add(&p.matmul(&m).add(&m.matmul(&p)).scale(0.5))
    }

    /// Parity `exp(iπ a†a) ⊗ exp(iπ(S₁z + j₁)) ⊗ exp(iπ(S₂z + j₂))` as a ±1
    /// diagonal.
    pub fn parity_diagonal(&self) -> Vec<f64> {
        let s = &self.spec;
        let mut d = vec![0.0; s.dim()];
        for n in 0..=s.n_max {
            for k1 in 0..=s.n1 {
                for k2 in 0..=s.n2 {
                    // m_l + j_l = N_l − k_l
                    let e = n + (s.n1 - k1) + (s.n2 - k2);
                    d[s.index(n, k1, k2)] = if e % 2 == 0 { 1.0 } else { -1.0 };
                }
            }
        }
        d
    }

    pub fn parity(&self) -> SparseOp {
        SparseOp::diagonal(&self.parity_diagonal())
    }
}
