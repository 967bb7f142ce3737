//! Single-band lattice baths: dispersion, symbol roots, winding numbers and
//! spectral self-intersections.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::poly_roots;

/// Tolerance on `||y| - 1|` below which a root counts as lying on the unit circle.
pub const UNIT_CIRCLE_TOL: f64 = 1e-8;
/// Relative distance below which two roots are merged into one of higher multiplicity.
pub const MULTIPLICITY_TOL: f64 = 1e-7;
/// Largest hopping range accepted by the parsers.
pub const MAX_RANGE: usize = 64;

/// Reduces an angle to `(-pi, pi]`.
pub fn reduce_angle(k: f64) -> f64 {
    let r = (k + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

/// Distance between two momenta on the circle.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    reduce_angle(a - b).abs()
}

/// Hopping amplitudes `h_n` for `n` in `-p..=q`.
#[derive(Clone, Debug, PartialEq)]
pub struct BathSpec {
    p: usize,
    q: usize,
    hops: Vec<C64>,
}

impl BathSpec {
    /// Builds a bath with tight ranges inferred from the nonzero entries.
    pub fn new(hoppings: &[(i64, C64)]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for &(n, h) in hoppings {
            if !h.is_finite() {
                return Err(Error::InvalidBath(format!("hopping h_{n} is not finite")));
            }
            *map.entry(n).or_insert(C64::new(0.0, 0.0)) += h;
        }
        map.retain(|_, h| *h != C64::new(0.0, 0.0));
        if map.is_empty() {
            return Err(Error::DegenerateBath);
        }
        let lo = *map.keys().next().unwrap();
        let hi = *map.keys().next_back().unwrap();
        let p = (-lo).max(0) as usize;
        let q = hi.max(0) as usize;
        Self::with_ranges(p, q, &map.into_iter().collect::<Vec<_>>())
    }

    /// Builds a bath with declared ranges, rejecting loose declarations.
    pub fn with_ranges(p: usize, q: usize, hoppings: &[(i64, C64)]) -> Result<Self> {
        if p + q == 0 {
            return Err(Error::InvalidBath("p + q must be at least 1".into()));
        }
        if p > MAX_RANGE || q > MAX_RANGE {
            return Err(Error::InvalidBath(format!("hopping range exceeds {MAX_RANGE}")));
        }
        let mut hops = vec![C64::new(0.0, 0.0); p + q + 1];
        for &(n, h) in hoppings {
            if n < -(p as i64) || n > q as i64 {
                return Err(Error::InvalidBath(format!("offset {n} outside declared range -{p}..{q}")));
            }
            if !h.is_finite() {
                return Err(Error::InvalidBath(format!("hopping h_{n} is not finite")));
            }
            hops[(n + p as i64) as usize] += h;
        }
        if hops.iter().all(|h| *h == C64::new(0.0, 0.0)) {
            return Err(Error::DegenerateBath);
        }
        if p >= 1 && hops[0] == C64::new(0.0, 0.0) {
            return Err(Error::InvalidBath(format!("declared p = {p} but h_-{p} vanishes")));
        }
        if q >= 1 && hops[p + q] == C64::new(0.0, 0.0) {
            return Err(Error::InvalidBath(format!("declared q = {q} but h_{q} vanishes")));
        }
        Ok(Self { p, q, hops })
    }

    /// Hatano-Nelson bath with asymmetric nearest-neighbour hopping.
    pub fn hatano_nelson(u: f64, kappa: f64) -> Self {
        Self::new(&[(-1, C64::new(-(u - kappa / 2.0), 0.0)), (1, C64::new(-(u + kappa / 2.0), 0.0))])
            .expect("HN bath requires u != kappa/2 or u != -kappa/2")
    }

    /// Unidirectional bath with nearest and next-nearest neighbour hopping.
    pub fn nnn(kappa: f64, kappa_p: f64) -> Self {
        Self::new(&[(1, C64::new(-kappa, 0.0)), (2, C64::new(-kappa_p, 0.0))]).expect("NNN bath requires a nonzero hopping")
    }

    pub fn left_range(&self) -> usize {
        self.p
    }

    pub fn right_range(&self) -> usize {
        self.q
    }

    pub fn is_unidirectional(&self) -> bool {
        self.p == 0 || self.q == 0
    }

    pub fn hopping(&self, n: i64) -> C64 {
        if n < -(self.p as i64) || n > self.q as i64 {
            C64::new(0.0, 0.0)
        } else {
            self.hops[(n + self.p as i64) as usize]
        }
    }

    /// `(n, h_n)` over the declared range, zeros included.
    pub fn hoppings(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        self.hops.iter().enumerate().map(move |(i, h)| (i as i64 - self.p as i64, *h))
    }

    /// Energy scale `max |h_n|`.
    pub fn scale(&self) -> f64 {
        self.hops.iter().map(|h| h.norm()).fold(0.0, f64::max)
    }

    /// `h(y) = sum_n h_n y^-n`.
    pub fn symbol(&self, y: C64) -> C64 {
        self.hoppings().map(|(n, h)| h * y.powi(-n as i32)).sum()
    }

    /// `dh/dy`.
    pub fn symbol_derivative(&self, y: C64) -> C64 {
        self.hoppings().map(|(n, h)| -(n as f64) * h * y.powi(-(n as i32) - 1)).sum()
    }

    /// `d^2h/dy^2`.
    pub fn symbol_second_derivative(&self, y: C64) -> C64 {
        self.hoppings().map(|(n, h)| (n * (n + 1)) as f64 * h * y.powi(-(n as i32) - 2)).sum()
    }

    /// `h_k = sum_n h_n e^{-ink}`.
    pub fn dispersion(&self, k: f64) -> C64 {
        let k = reduce_angle(k);
        self.hoppings().map(|(n, h)| h * C64::from_polar(1.0, -(n as f64) * k)).sum()
    }

    /// First or second derivative of `h_k` with respect to `k`.
    pub fn dispersion_derivative(&self, k: f64, order: u8) -> C64 {
        let k = reduce_angle(k);
        self.hoppings()
            .map(|(n, h)| C64::new(0.0, -(n as f64)).powi(order as i32) * h * C64::from_polar(1.0, -(n as f64) * k))
            .sum()
    }

    /// `h_k` continued to complex momentum.
    pub fn dispersion_complex(&self, k: C64) -> C64 {
        let k = C64::new(reduce_angle(k.re), k.im);
        self.hoppings().map(|(n, h)| h * (C64::new(0.0, -(n as f64)) * k).exp()).sum()
    }

    /// `dh_k/dk` continued to complex momentum.
    pub fn dispersion_derivative_complex(&self, k: C64) -> C64 {
        let k = C64::new(reduce_angle(k.re), k.im);
        self.hoppings()
            .map(|(n, h)| C64::new(0.0, -(n as f64)) * h * (C64::new(0.0, -(n as f64)) * k).exp())
            .sum()
    }

    /// `h_{2 pi m / L}` for `m = 1..=L`, with phases reduced exactly in integers.
    pub fn finite_band(&self, size: usize) -> Vec<C64> {
        let l = size as i64;
        (1..=l)
            .map(|m| {
                self.hoppings()
                    .map(|(n, h)| {
                        let mut j = (-n * m).rem_euclid(l);
                        if j > l / 2 {
                            j -= l;
                        }
                        h * C64::from_polar(1.0, 2.0 * PI * j as f64 / l as f64)
                    })
                    .sum()
            })
            .collect()
    }

    /// Ascending coefficients of `y^q (E - h(y))`.
    pub fn symbol_polynomial(&self, energy: C64) -> Vec<C64> {
        let mut c = vec![C64::new(0.0, 0.0); self.p + self.q + 1];
        c[self.q] += energy;
        for (n, h) in self.hoppings() {
            c[(self.q as i64 - n) as usize] -= h;
        }
        c
    }

    /// All roots of `E = h(y)`, merged by multiplicity.
    pub fn symbol_roots(&self, energy: C64) -> Result<SymbolRoots> {
        if self.scale() == 0.0 {
            return Err(Error::DegenerateBath);
        }
        let raw = poly_roots(&self.symbol_polynomial(energy));
        Ok(SymbolRoots { energy, roots: merge_roots(raw) })
    }

    /// Winding number of `h_k - z` from root counting.
    pub fn winding_number(&self, z: C64) -> Result<i64> {
        let roots = self.symbol_roots(z)?;
        if roots.roots.iter().any(|r| r.on_circle) {
            return Err(Error::OnBandCurve { z });
        }
        let inside: usize = roots.roots.iter().filter(|r| r.y.norm() < 1.0).map(|r| r.multiplicity).sum();
        Ok(inside as i64 - self.q as i64)
    }

    /// Winding number of `h_k - z` from the discretized argument principle.
    pub fn winding_number_integral(&self, z: C64, points: usize) -> Result<i64> {
        let points = points.max(16);
        let mut total = 0.0;
        let mut prev = self.dispersion(0.0) - z;
        let tol = 1e-8 * self.scale();
        for i in 1..=points {
            let cur = self.dispersion(2.0 * PI * i as f64 / points as f64) - z;
            if cur.norm() < tol {
                return Err(Error::OnBandCurve { z });
            }
            total += (cur / prev).arg();
            prev = cur;
        }
        Ok((total / (2.0 * PI)).round() as i64)
    }

    /// Distance from `z` to the band curve sampled at `samples` momenta.
    pub fn band_distance(&self, z: C64, samples: usize) -> f64 {
        (0..samples.max(1))
            .map(|i| (self.dispersion(-PI + 2.0 * PI * i as f64 / samples as f64) - z).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Real momenta where `h'_k` vanishes.
    pub fn stationary_points(&self) -> Vec<f64> {
        // y h'(y) = sum_n -n h_n y^-n, times y^q
        let mut c = vec![C64::new(0.0, 0.0); self.p + self.q + 1];
        for (n, h) in self.hoppings() {
            c[(self.q as i64 - n) as usize] -= n as f64 * h;
        }
        let tol = 1e-6 * self.scale();
        let mut out: Vec<f64> = poly_roots(&c)
            .into_iter()
            .filter(|y| (y.norm() - 1.0).abs() < 1e-6)
            .map(|y| y.arg())
            .filter(|&k| self.dispersion_derivative(k, 1).norm() < tol)
            .map(reduce_angle)
            .collect();
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| angle_distance(*a, *b) < 1e-6);
        out
    }

    /// Pairs of distinct real momenta with equal energy.
    pub fn self_intersections(&self) -> Vec<SelfIntersection> {
        const N: usize = 256;
        let scale = self.scale();
        let eval = |c: f64, d: f64| self.divided_difference(c, d);
        let mut grid = vec![0.0; N * N];
        for i in 0..N {
            for j in 0..N {
                let (c, d) = grid_point(i, j, N);
                grid[i * N + j] = eval(c, d).0.norm();
            }
        }
        let mut found: Vec<SelfIntersection> = Vec::new();
        for i in 0..N {
            for j in 0..N {
                let g = grid[i * N + j];
                let mut is_min = true;
                'nb: for di in [-1i64, 0, 1] {
                    for dj in [-1i64, 0, 1] {
                        if di == 0 && dj == 0 {
                            continue;
                        }
                        let ii = (i as i64 + di).rem_euclid(N as i64) as usize;
                        let jj = j as i64 + dj;
                        if jj < 0 || jj >= N as i64 {
                            continue;
                        }
                        if grid[ii * N + jj as usize] < g {
                            is_min = false;
                            break 'nb;
                        }
                    }
                }
                if !is_min {
                    continue;
                }
                let (c0, d0) = grid_point(i, j, N);
                if let Some((c, d)) = self.refine_intersection(c0, d0) {
                    if !(1e-4..=PI - 1e-4).contains(&d) {
                        continue;
                    }
                    let mut k1 = reduce_angle(c - d);
                    let mut k2 = reduce_angle(c + d);
                    if k1 > k2 {
                        std::mem::swap(&mut k1, &mut k2);
                    }
                    let e1 = self.dispersion(k1);
                    if (e1 - self.dispersion(k2)).norm() > 1e-10 * scale || angle_distance(k1, k2) < 1e-4 {
                        continue;
                    }
                    let dup = found.iter().any(|s| (s.k_pair.0 - k1).abs() < 1e-6 && (s.k_pair.1 - k2).abs() < 1e-6);
                    if !dup {
                        found.push(SelfIntersection { k_pair: (k1, k2), energy: e1 });
                    }
                }
            }
        }
        found.sort_by(|a, b| a.k_pair.0.total_cmp(&b.k_pair.0).then(a.k_pair.1.total_cmp(&b.k_pair.1)));
        found
    }

    // (h(c + d) - h(c - d)) / (-2i sin d) and its partial derivatives in c and d.
    fn divided_difference(&self, c: f64, d: f64) -> (C64, C64, C64) {
        let (sd, cd) = d.sin_cos();
        let mut g = C64::new(0.0, 0.0);
        let mut gc = C64::new(0.0, 0.0);
        let mut gd = C64::new(0.0, 0.0);
        for (n, h) in self.hoppings() {
            if n == 0 {
                continue;
            }
            let nf = n as f64;
            let (snd, cnd) = (nf * d).sin_cos();
            let u = snd / sd;
            let du = (nf * cnd * sd - snd * cd) / (sd * sd);
            let ph = h * C64::from_polar(1.0, -nf * c);
            g += ph * u;
            gc += C64::new(0.0, -nf) * ph * u;
            gd += ph * du;
        }
        (g, gc, gd)
    }

    fn refine_intersection(&self, mut c: f64, mut d: f64) -> Option<(f64, f64)> {
        let tol = 1e-13 * self.scale().max(f64::MIN_POSITIVE);
        for _ in 0..60 {
            let (g, gc, gd) = self.divided_difference(c, d);
            if g.norm() < tol {
                return Some((c, d));
            }
            let det = gc.re * gd.im - gd.re * gc.im;
            if det.abs() < 1e-300 {
                return None;
            }
            let mut dc = (g.re * gd.im - gd.re * g.im) / det;
            let mut dd = (gc.re * g.im - g.re * gc.im) / det;
            let step = dc.hypot(dd);
            if step > 0.5 {
                dc *= 0.5 / step;
                dd *= 0.5 / step;
            }
            c -= dc;
            d -= dd;
            if !(1e-6..PI - 1e-6).contains(&d) {
                return None;
            }
        }
        let (g, _, _) = self.divided_difference(c, d);
        (g.norm() < 1e3 * tol).then_some((c, d))
    }

    /// Parses the `key = value` bath format (`p`, `q`, `hop.<n> = re,im`).
    pub fn from_text(text: &str) -> Result<Self> {
        let mut p = None;
        let mut q = None;
        let mut hops: BTreeMap<i64, C64> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |message: String| Error::Parse { line: line_no, message };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected `key = value`".into()))?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "p" | "q" => {
                    let v: usize = value.parse().map_err(|_| err(format!("invalid range `{value}`")))?;
                    if v > MAX_RANGE {
                        return Err(err(format!("range {v} exceeds {MAX_RANGE}")));
                    }
                    let slot = if key == "p" { &mut p } else { &mut q };
                    if slot.replace(v).is_some() {
                        return Err(err(format!("duplicate key `{key}`")));
                    }
                }
                _ => {
                    let n = key
                        .strip_prefix("hop.")
                        .and_then(|s| s.trim().parse::<i64>().ok())
                        .ok_or_else(|| err(format!("unknown key `{key}`")))?;
                    if n.unsigned_abs() > MAX_RANGE as u64 {
                        return Err(err(format!("offset {n} exceeds {MAX_RANGE}")));
                    }
                    let h = parse_complex(value).ok_or_else(|| err(format!("invalid complex value `{value}`")))?;
                    if hops.insert(n, h).is_some() {
                        return Err(err(format!("duplicate hopping offset {n}")));
                    }
                }
            }
        }
        let p = p.ok_or(Error::Parse { line: 0, message: "missing `p`".into() })?;
        let q = q.ok_or(Error::Parse { line: 0, message: "missing `q`".into() })?;
        Self::with_ranges(p, q, &hops.into_iter().collect::<Vec<_>>())
    }

    /// Serializes to the format read by [`BathSpec::from_text`].
    pub fn to_text(&self) -> String {
        let mut s = format!("p = {}\nq = {}\n", self.p, self.q);
        for (n, h) in self.hoppings() {
            if h != C64::new(0.0, 0.0) {
                let _ = writeln!(s, "hop.{n} = {:?},{:?}", h.re, h.im);
            }
        }
        s
    }
}

fn grid_point(i: usize, j: usize, n: usize) -> (f64, f64) {
    (2.0 * PI * i as f64 / n as f64, PI * (j as f64 + 0.5) / n as f64)
}

/// Parses `re,im` or a bare real number.
pub fn parse_complex(s: &str) -> Option<C64> {
    let mut parts = s.split(',');
    let re: f64 = parts.next()?.trim().parse().ok()?;
    let im: f64 = match parts.next() {
        Some(t) => t.trim().parse().ok()?,
        None => 0.0,
    };
    if parts.next().is_some() || !re.is_finite() || !im.is_finite() {
        return None;
    }
    Some(C64::new(re, im))
}

/// A root of `E = h(y)` with its multiplicity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub y: C64,
    pub multiplicity: usize,
    pub on_circle: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymbolRoots {
    pub energy: C64,
    /// Sorted by modulus, ties by argument.
    pub roots: Vec<Root>,
}

impl SymbolRoots {
    pub fn total_multiplicity(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }
}

fn merge_roots(raw: Vec<C64>) -> Vec<Root> {
    let n = raw.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            let tol = MULTIPLICITY_TOL * raw[i].norm().max(raw[j].norm()).max(1.0);
            if (raw[i] - raw[j]).norm() < tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<C64>> = BTreeMap::new();
    for (i, &y) in raw.iter().enumerate() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(y);
    }
    let mut roots: Vec<Root> = groups
        .into_values()
        .map(|g| {
            let y = g.iter().sum::<C64>() / g.len() as f64;
            Root { y, multiplicity: g.len(), on_circle: (y.norm() - 1.0).abs() < UNIT_CIRCLE_TOL }
        })
        .collect();
    roots.sort_by(|a, b| a.y.norm().total_cmp(&b.y.norm()));
    let mut start = 0;
    while start < roots.len() {
        let m0 = roots[start].y.norm();
        let mut end = start + 1;
        while end < roots.len() && roots[end].y.norm() - m0 <= 1e-12 * m0.max(1.0) {
            end += 1;
        }
        roots[start..end].sort_by(|a, b| a.y.arg().total_cmp(&b.y.arg()));
        start = end;
    }
    roots
}

/// Two distinct real momenta sharing one energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelfIntersection {
    pub k_pair: (f64, f64),
    pub energy: C64,
}
