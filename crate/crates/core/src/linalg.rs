//! Dense complex linear algebra: Hessenberg reduction, shifted QR eigenvalues,
//! inverse-iteration eigenvectors and polynomial roots via companion matrices.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};

const EPS: f64 = f64::EPSILON;

/// Square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![C64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n, "matrix must be square");
            m.data[i * n..(i + 1) * n].copy_from_slice(r);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn conj_transpose(&self) -> Self {
        let mut m = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Conjugate-linear in the first argument.
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn abs1(z: C64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Reduces `a` in place to upper Hessenberg form `Q^H A Q` and returns `Q`.
pub fn hessenberg(a: &mut CMatrix) -> CMatrix {
    let n = a.n;
    let mut q = CMatrix::identity(n);
    if n < 3 {
        return q;
    }
    let mut v = vec![C64::new(0.0, 0.0); n];
    for k in 0..n - 2 {
        let xnorm = (k + 1..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0.norm() == 0.0 { C64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let alpha = -phase * xnorm;
        v.fill(C64::new(0.0, 0.0));
        v[k + 1] = x0 - alpha;
        for i in k + 2..n {
            v[i] = a[(i, k)];
        }
        let vnorm2: f64 = (k + 1..n).map(|i| v[i].norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;
        // A <- (I - beta v v^H) A
        for j in k..n {
            let s: C64 = (k + 1..n).map(|i| v[i].conj() * a[(i, j)]).sum::<C64>() * beta;
            for i in k + 1..n {
                let vi = v[i];
                a[(i, j)] -= vi * s;
            }
        }
        // A <- A (I - beta v v^H), same for Q
        for m in [&mut *a, &mut q] {
            for i in 0..n {
                let s: C64 = (k + 1..n).map(|j| m[(i, j)] * v[j]).sum::<C64>() * beta;
                for j in k + 1..n {
                    let vj = v[j].conj();
                    m[(i, j)] -= s * vj;
                }
            }
        }
        a[(k + 1, k)] = alpha;
        for i in k + 2..n {
            a[(i, k)] = C64::new(0.0, 0.0);
        }
    }
    q
}

fn givens(x: C64, y: C64) -> (f64, C64) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    if ax == 0.0 {
        return (0.0, y.conj() / ay);
    }
    let r = ax.hypot(ay);
    (ax / r, (x / ax) * y.conj() / r)
}

/// Eigenvalues of an upper Hessenberg matrix by single-shift complex QR with
/// Wilkinson shifts and deflation. The input is overwritten.
pub fn hessenberg_eigenvalues(h: &mut CMatrix) -> Result<Vec<C64>> {
    let n = h.n;
    let mut eig = vec![C64::new(0.0, 0.0); n];
    if n == 0 {
        return Ok(eig);
    }
    let max_its = 30 * n.max(1);
    let mut ihi = n as isize - 1;
    let mut its = 0usize;
    while ihi >= 0 {
        let hi = ihi as usize;
        let mut l = hi;
        while l > 0 {
            let sub = abs1(h[(l, l - 1)]);
            let mut tst = abs1(h[(l - 1, l - 1)]) + abs1(h[(l, l)]);
            if tst == 0.0 {
                tst = (l.saturating_sub(1)..=hi.min(l + 1))
                    .map(|i| abs1(h[(i, i)]))
                    .sum::<f64>()
                    .max(f64::MIN_POSITIVE);
            }
            if sub <= EPS * tst {
                h[(l, l - 1)] = C64::new(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig[hi] = h[(hi, hi)];
            ihi -= 1;
            its = 0;
            continue;
        }
        its += 1;
        if its > max_its {
            let lo = l;
            let block: Vec<Vec<C64>> =
                (lo..=hi).map(|i| (lo..=hi).map(|j| h[(i, j)]).collect()).collect();
            return Err(Error::QrStall { index: hi, block });
        }
        let shift = if its.is_multiple_of(10) {
            h[(hi, hi)] + 0.75 * h[(hi, hi - 1)].re.abs()
        } else if its % 10 == 5 {
            h[(hi, hi)] + 0.75 * h[(hi, hi - 1)].norm() * C64::new(0.0, 1.0)
        } else {
            let a = h[(hi - 1, hi - 1)];
            let b = h[(hi - 1, hi)];
            let c = h[(hi, hi - 1)];
            let d = h[(hi, hi)];
            let p = (a - d) * 0.5;
            let bc = b * c;
            let disc = (p * p + bc).sqrt();
            let den = if (p + disc).norm() >= (p - disc).norm() { p + disc } else { p - disc };
            if den.norm() == 0.0 { d } else { d - bc / den }
        };
        for k in l..hi {
            let (x, y) = if k == l {
                (h[(l, l)] - shift, h[(l + 1, l)])
            } else {
                (h[(k, k - 1)], h[(k + 1, k - 1)])
            };
            let (c, s) = givens(x, y);
            let jstart = if k == l { l } else { k - 1 };
            for j in jstart..=hi {
                let a = h[(k, j)];
                let b = h[(k + 1, j)];
                h[(k, j)] = a * c + s * b;
                h[(k + 1, j)] = -s.conj() * a + b * c;
            }
            let iend = (k + 2).min(hi);
            for i in l..=iend {
                let a = h[(i, k)];
                let b = h[(i, k + 1)];
                h[(i, k)] = a * c + b * s.conj();
                h[(i, k + 1)] = -a * s + b * c;
            }
            if k > l {
                h[(k + 1, k - 1)] = C64::new(0.0, 0.0);
            }
        }
    }
    Ok(eig)
}

/// Eigenvalues of a general square matrix.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<C64>> {
    let mut h = a.clone();
    hessenberg(&mut h);
    hessenberg_eigenvalues(&mut h)
}

/// Solves `(H - sigma I) w = b` for upper Hessenberg `H` by LU with partial
/// pivoting restricted to adjacent rows. Tiny pivots are replaced by `floor`.
fn hessenberg_shifted_solve(h: &CMatrix, sigma: C64, b: &mut [C64], floor: f64) {
    let n = h.n;
    let mut u = h.clone();
    for i in 0..n {
        u[(i, i)] -= sigma;
    }
    for k in 0..n.saturating_sub(1) {
        if u[(k + 1, k)].norm() > u[(k, k)].norm() {
            for j in k..n {
                let t = u[(k, j)];
                u[(k, j)] = u[(k + 1, j)];
                u[(k + 1, j)] = t;
            }
            b.swap(k, k + 1);
        }
        if u[(k, k)].norm() < floor {
            u[(k, k)] = C64::new(floor, 0.0);
        }
        let m = u[(k + 1, k)] / u[(k, k)];
        if m != C64::new(0.0, 0.0) {
            for j in k + 1..n {
                let t = u[(k, j)];
                u[(k + 1, j)] -= m * t;
            }
            let t = b[k];
            b[k + 1] -= m * t;
        }
        u[(k + 1, k)] = C64::new(0.0, 0.0);
    }
    if n > 0 && u[(n - 1, n - 1)].norm() < floor {
        u[(n - 1, n - 1)] = C64::new(floor, 0.0);
    }
    for i in (0..n).rev() {
        let s: C64 = (i + 1..n).map(|j| u[(i, j)] * b[j]).sum();
        b[i] = (b[i] - s) / u[(i, i)];
    }
}

fn hessenberg_residual(h: &CMatrix, lambda: C64, w: &[C64]) -> f64 {
    let n = h.n;
    let mut s = 0.0;
    for i in 0..n {
        let lo = i.saturating_sub(1);
        let mut r: C64 = (lo..n).map(|j| h[(i, j)] * w[j]).sum();
        r -= lambda * w[i];
        s += r.norm_sqr();
    }
    s.sqrt()
}

fn start_vector(n: usize, seed: usize) -> Vec<C64> {
    (0..n)
        .map(|i| {
            let t = (i + 1) as f64 + 0.37 * seed as f64;
            C64::new(1.0 + 0.5 * (0.731 * t).sin(), 0.5 * (1.303 * t).cos())
        })
        .collect()
}

/// Full eigendecomposition.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<C64>,
    /// Unit-norm right eigenvectors, one per value.
    pub vectors: Vec<Vec<C64>>,
}

/// Eigenvalues by Hessenberg QR, right eigenvectors by two steps of inverse
/// iteration on the Hessenberg form, back-transformed with the reduction.
pub fn eig(a: &CMatrix) -> Result<Eigen> {
    let n = a.n;
    let scale = a.norm_inf().max(f64::MIN_POSITIVE);
    let mut hess = a.clone();
    let q = hessenberg(&mut hess);
    let mut work = hess.clone();
    let mut values = hessenberg_eigenvalues(&mut work)?;
    values.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));

    let gap = 1e-8 * scale;
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut owner = vec![usize::MAX; n];
    for j in 0..n {
        let mut found = None;
        let mut i = j;
        while i > 0 {
            i -= 1;
            if values[j].re - values[i].re > gap {
                break;
            }
            if (values[j] - values[i]).norm() < gap {
                found = Some(owner[i]);
                break;
            }
        }
        match found {
            Some(c) => {
                clusters[c].push(j);
                owner[j] = c;
            }
            None => {
                owner[j] = clusters.len();
                clusters.push(vec![j]);
            }
        }
    }

    let shift = 1e-10 * scale;
    let floor = EPS * scale;
    let solved: Vec<Vec<(usize, Vec<C64>)>> = clusters
        .par_iter()
        .map(|members| {
            let mut basis: Vec<Vec<C64>> = Vec::new();
            let mut out = Vec::new();
            for (pos, &j) in members.iter().enumerate() {
                let sigma = values[j] + shift;
                let mut w = start_vector(n, pos);
                // for strongly non-normal H a further step can move away from
                // the eigenvector, so the iterate with the smallest residual is kept
                let mut best = (f64::INFINITY, w.clone());
                for _ in 0..2 {
                    hessenberg_shifted_solve(&hess, sigma, &mut w, floor);
                    for b in &basis {
                        let c = dot(b, &w);
                        for (wi, bi) in w.iter_mut().zip(b) {
                            *wi -= c * bi;
                        }
                    }
                    let nrm = norm2(&w);
                    for wi in w.iter_mut() {
                        *wi /= nrm;
                    }
                    let r = hessenberg_residual(&hess, values[j], &w);
                    if r < best.0 {
                        best = (r, w.clone());
                    }
                }
                let w = best.1;
                basis.push(w.clone());
                let mut v = q.matvec(&w);
                let nrm = norm2(&v);
                for vi in v.iter_mut() {
                    *vi /= nrm;
                }
                out.push((j, v));
            }
            out
        })
        .collect();
    let mut vectors = vec![Vec::new(); n];
    for group in solved {
        for (j, v) in group {
            vectors[j] = v;
        }
    }
    Ok(Eigen { values, vectors })
}

/// Evaluates a polynomial with ascending coefficients and its derivative.
pub fn poly_eval(coeffs: &[C64], y: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * y + p;
        p = p * y + c;
    }
    (p, dp)
}

/// Roots of `sum_j coeffs[j] y^j`. Exactly vanishing leading and trailing
/// coefficients are dropped, so neither infinite nor zero roots are reported.
pub fn poly_roots(coeffs: &[C64]) -> Vec<C64> {
    let cmax = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if cmax == 0.0 {
        return Vec::new();
    }
    let tiny = 1e-15 * cmax;
    let hi = match coeffs.iter().rposition(|c| c.norm() > tiny) {
        Some(h) => h,
        None => return Vec::new(),
    };
    let lo = coeffs.iter().position(|c| c.norm() > tiny).unwrap_or(0);
    let c = &coeffs[lo..=hi];
    let d = c.len() - 1;
    if d == 0 {
        return Vec::new();
    }
    let lead = c[d];
    let mut comp = CMatrix::zeros(d);
    for j in 0..d {
        comp[(0, j)] = -c[d - 1 - j] / lead;
    }
    for i in 1..d {
        comp[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    let mut roots = match hessenberg_eigenvalues(&mut comp) {
        Ok(r) => r,
        Err(_) => return Vec::new(),
    };
    for y in roots.iter_mut() {
        let (p, dp) = poly_eval(c, *y);
        if dp.norm() > 0.0 {
            let cand = *y - p / dp;
            if cand.is_finite() && poly_eval(c, cand).0.norm() < p.norm() {
                *y = cand;
            }
        }
    }
    roots
}
