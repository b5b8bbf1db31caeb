//! Eigenvalues of small dense real matrices.
//!
//! Balancing, reduction to upper Hessenberg form by stabilised elimination, and
//! Francis double-shift QR iteration with deflation.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Iterations allowed per deflated eigenvalue before giving up.
pub const MAX_ITERATIONS_PER_EIGENVALUE: usize = 60;

const RADIX: f64 = 2.0;

/// All eigenvalues of a square real matrix, sorted by descending real part
/// (ties by ascending imaginary part).
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Domain(format!("eigenvalues of a non-square {}x{} matrix", n, m.ncols())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut a = Dense::from_matrix(m);
    a.balance();
    a.reduce_to_hessenberg();
    let mut ev = a.hessenberg_qr()?;
    sort_spectrum(&mut ev);
    Ok(ev)
}

pub fn sort_spectrum(ev: &mut [Complex64]) {
    ev.sort_by(|x, y| y.re.total_cmp(&x.re).then(x.im.total_cmp(&y.im)));
}

/// Row-major working copy.
struct Dense {
    n: usize,
    v: Vec<f64>,
}

impl Dense {
    fn from_matrix(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                v[i * n + j] = m[(i, j)];
            }
        }
        Self { n, v }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.v[i * self.n + j]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.v[i * self.n + j]
    }

    /// Similarity scaling by powers of two so that row and column norms are
    /// comparable.
    fn balance(&mut self) {
        let n = self.n;
        let sqrdx = RADIX * RADIX;
        let mut done = false;
        while !done {
            done = true;
            for i in 0..n {
                let mut r = 0.0;
                let mut c = 0.0;
                for j in 0..n {
                    if j != i {
                        c += self.at(j, i).abs();
                        r += self.at(i, j).abs();
                    }
                }
                if c != 0.0 && r != 0.0 {
                    let mut g = r / RADIX;
                    let mut f = 1.0;
                    let s = c + r;
                    while c < g {
                        f *= RADIX;
                        c *= sqrdx;
                    }
                    g = r * RADIX;
                    while c > g {
                        f /= RADIX;
                        c /= sqrdx;
                    }
                    if (c + r) / f < 0.95 * s {
                        done = false;
                        let g = 1.0 / f;
                        for j in 0..n {
                            *self.at_mut(i, j) *= g;
                        }
                        for j in 0..n {
                            *self.at_mut(j, i) *= f;
                        }
                    }
                }
            }
        }
    }

    /// Gaussian elimination with partial pivoting, applied as a similarity.
    fn reduce_to_hessenberg(&mut self) {
        let n = self.n;
        if n < 3 {
            return;
        }
        for m in 1..n - 1 {
            let mut x: f64 = 0.0;
            let mut i = m;
            for j in m..n {
                if self.at(j, m - 1).abs() > x.abs() {
                    x = self.at(j, m - 1);
                    i = j;
                }
            }
            if i != m {
                for j in (m - 1)..n {
                    self.v.swap(i * n + j, m * n + j);
                }
                for j in 0..n {
                    self.v.swap(j * n + i, j * n + m);
                }
            }
            if x != 0.0 {
                for i in (m + 1)..n {
                    let mut y = self.at(i, m - 1);
                    if y != 0.0 {
                        y /= x;
                        *self.at_mut(i, m - 1) = y;
                        for j in m..n {
                            let t = self.at(m, j);
                            *self.at_mut(i, j) -= y * t;
                        }
                        for j in 0..n {
                            let t = self.at(j, i);
                            *self.at_mut(j, m) += y * t;
                        }
                    }
                }
            }
        }
        for i in 2..n {
            for j in 0..i - 1 {
                *self.at_mut(i, j) = 0.0;
            }
        }
    }

    fn hessenberg_qr(&mut self) -> Result<Vec<Complex64>> {
        let n = self.n;
        let mut wr = vec![0.0; n];
        let mut wi = vec![0.0; n];
        let mut found = vec![false; n];
        let mut anorm = 0.0;
        for i in 0..n {
            for j in i.saturating_sub(1)..n {
                anorm += self.at(i, j).abs();
            }
        }
        let mut total_iterations = 0usize;
        let mut nn = n as isize - 1;
        let mut t = 0.0;
        while nn >= 0 {
            let mut its = 0usize;
            loop {
                let nu = nn as usize;
                // locate a negligible subdiagonal element
                let mut l = nu;
                while l >= 1 {
                    let mut s = self.at(l - 1, l - 1).abs() + self.at(l, l).abs();
                    if s == 0.0 {
                        s = anorm;
                    }
                    if self.at(l, l - 1).abs() + s == s {
                        *self.at_mut(l, l - 1) = 0.0;
                        break;
                    }
                    l -= 1;
                }
                let mut x = self.at(nu, nu);
                if l == nu {
                    wr[nu] = x + t;
                    wi[nu] = 0.0;
                    found[nu] = true;
                    nn -= 1;
                    break;
                }
                let mut y = self.at(nu - 1, nu - 1);
                let mut w = self.at(nu, nu - 1) * self.at(nu - 1, nu);
                if l == nu - 1 {
                    let p = 0.5 * (y - x);
                    let q = p * p + w;
                    let z = q.abs().sqrt();
                    x += t;
                    if q >= 0.0 {
                        let z = p + z.copysign(p);
                        wr[nu - 1] = x + z;
                        wr[nu] = x + z;
                        if z != 0.0 {
                            wr[nu] = x - w / z;
                        }
                        wi[nu - 1] = 0.0;
                        wi[nu] = 0.0;
                    } else {
                        wr[nu - 1] = x + p;
                        wr[nu] = x + p;
                        wi[nu - 1] = -z;
                        wi[nu] = z;
                    }
                    found[nu - 1] = true;
                    found[nu] = true;
                    nn -= 2;
                    break;
                }
                if its == MAX_ITERATIONS_PER_EIGENVALUE {
                    let partial = (0..n)
                        .filter(|&i| found[i])
                        .map(|i| Complex64::new(wr[i], wi[i]))
                        .collect::<Vec<_>>();
                    return Err(Error::EigenNonConvergence {
                        iterations: total_iterations,
                        dim: n,
                        found: partial.len(),
                        partial,
                    });
                }
                if its > 0 && its % 10 == 0 {
                    // exceptional shift
                    t += x;
                    for i in 0..=nu {
                        *self.at_mut(i, i) -= x;
                    }
                    let s = self.at(nu, nu - 1).abs() + self.at(nu - 1, nu - 2).abs();
                    x = 0.75 * s;
                    y = x;
                    w = -0.4375 * s * s;
                }
                its += 1;
                total_iterations += 1;

                // look for two consecutive small subdiagonal elements
                let mut m = nu - 2;
                let (mut p, mut q, mut r);
                loop {
                    let z = self.at(m, m);
                    let rr = x - z;
                    let ss = y - z;
                    p = (rr * ss - w) / self.at(m + 1, m) + self.at(m, m + 1);
                    q = self.at(m + 1, m + 1) - z - rr - ss;
                    r = self.at(m + 2, m + 1);
                    let s = p.abs() + q.abs() + r.abs();
                    p /= s;
                    q /= s;
                    r /= s;
                    if m == l {
                        break;
                    }
                    let u = self.at(m, m - 1).abs() * (q.abs() + r.abs());
                    let v = p.abs() * (self.at(m - 1, m - 1).abs() + z.abs() + self.at(m + 1, m + 1).abs());
                    if u + v == v {
                        break;
                    }
                    m -= 1;
                }
                for i in (m + 2)..=nu {
                    *self.at_mut(i, i - 2) = 0.0;
                    if i != m + 2 {
                        *self.at_mut(i, i - 3) = 0.0;
                    }
                }
                // double-shift QR sweep
                let mut k = m;
                while k < nu {
                    if k != m {
                        p = self.at(k, k - 1);
                        q = self.at(k + 1, k - 1);
                        r = if k != nu - 1 { self.at(k + 2, k - 1) } else { 0.0 };
                        x = p.abs() + q.abs() + r.abs();
                        if x != 0.0 {
                            p /= x;
                            q /= x;
                            r /= x;
                        }
                    }
                    let s = (p * p + q * q + r * r).sqrt().copysign(p);
                    if s != 0.0 {
                        if k == m {
                            if l != m {
                                *self.at_mut(k, k - 1) = -self.at(k, k - 1);
                            }
                        } else {
                            *self.at_mut(k, k - 1) = -s * x;
                        }
                        p += s;
                        x = p / s;
                        y = q / s;
                        let z = r / s;
                        q /= p;
                        r /= p;
                        for j in k..=nu {
                            let mut pp = self.at(k, j) + q * self.at(k + 1, j);
                            if k != nu - 1 {
                                pp += r * self.at(k + 2, j);
                                *self.at_mut(k + 2, j) -= pp * z;
                            }
                            *self.at_mut(k + 1, j) -= pp * y;
                            *self.at_mut(k, j) -= pp * x;
                        }
                        let mmin = if nu < k + 3 { nu } else { k + 3 };
                        for i in l..=mmin {
                            let mut pp = x * self.at(i, k) + y * self.at(i, k + 1);
                            if k != nu - 1 {
                                pp += z * self.at(i, k + 2);
                                *self.at_mut(i, k + 2) -= pp * r;
                            }
                            *self.at_mut(i, k + 1) -= pp * q;
                            *self.at_mut(i, k) -= pp;
                        }
                    }
                    k += 1;
                }
            }
        }
        Ok(wr.into_iter().zip(wi).map(|(re, im)| Complex64::new(re, im)).collect())
    }
}
