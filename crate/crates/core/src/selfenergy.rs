//! Finite-size and thermodynamic self-energies of the emitter, evaluated by
//! direct summation, by residues over the roots of `E = h(y)`, and by the
//! branch-resolved thermodynamic limit.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::bath::{BathSpec, Root, SymbolRoots};
use crate::error::{Error, Result};

/// Analytic continuation of thermodynamic quantities onto the band curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    /// The plane-wave root `e^{ik}` is counted inside the unit circle.
    Greater,
    /// The plane-wave root `e^{ik}` is counted outside the unit circle.
    Less,
}

impl Branch {
    pub fn symbol(self) -> &'static str {
        match self {
            Branch::Greater => ">",
            Branch::Less => "<",
        }
    }

    pub fn other(self) -> Self {
        match self {
            Branch::Greater => Branch::Less,
            Branch::Less => Branch::Greater,
        }
    }
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Which half-line expression is used at `x = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    NonNegative,
    Negative,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelfEnergyKind {
    FiniteSum,
    FiniteResidue,
    Thermo,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelfEnergyResult {
    pub value: C64,
    pub kind: SelfEnergyKind,
    pub x: i64,
    /// Lattice size, absent in the thermodynamic limit.
    pub size: Option<usize>,
    /// Present for thermodynamic values only.
    pub branch: Option<Branch>,
    /// The `x = 0` convention, recorded for unidirectional baths.
    pub unidirectional_side: Option<Side>,
    /// Set when some `y^L` was replaced by its Heaviside limit.
    pub truncated: bool,
}

/// Lowest and highest site of the lattice window.
pub fn window(size: usize) -> (i64, i64) {
    let l = size as i64;
    (-(l / 2), (l - 1) / 2)
}

/// Maps `x` into the lattice window modulo `L`.
pub fn reduce_site(x: i64, size: usize) -> i64 {
    let l = size as i64;
    let (lo, _) = window(size);
    (x - lo).rem_euclid(l) + lo
}

/// Half-line expression used at site `x`.
pub fn default_side(bath: &BathSpec, x: i64) -> Side {
    if x > 0 || (x == 0 && bath.right_range() > 0) {
        Side::NonNegative
    } else {
        Side::Negative
    }
}

fn side_record(bath: &BathSpec, x: i64, side: Side) -> Option<Side> {
    (x == 0 && bath.is_unidirectional()).then_some(side)
}

/// `f_+(y) = 1/(y^L - 1)`.
pub fn f_plus(y: C64, size: usize) -> C64 {
    1.0 / (y.powi(size as i32) - 1.0)
}

/// `f_-(y) = -1/(y^-L - 1)`.
pub fn f_minus(y: C64, size: usize) -> C64 {
    -1.0 / (y.powi(-(size as i32)) - 1.0)
}

fn check_size(bath: &BathSpec, size: usize) -> Result<()> {
    if size < bath.left_range() + bath.right_range() + 1 {
        return Err(Error::InvalidParameter(format!(
            "L = {size} must be at least p + q + 1 = {}",
            bath.left_range() + bath.right_range() + 1
        )));
    }
    if size > i32::MAX as usize / 4 {
        return Err(Error::InvalidParameter(format!("L = {size} is too large")));
    }
    Ok(())
}

fn check_finite_spectrum(band: &[C64], z: C64) -> Result<()> {
    let tol = 1e-12 * (1.0 + z.norm());
    if band.iter().any(|h| (z - h).norm() <= tol) {
        return Err(Error::OnFiniteSpectrum { z });
    }
    Ok(())
}

fn check_not_h0(bath: &BathSpec, z: C64) -> Result<()> {
    if bath.is_unidirectional() && z == bath.hopping(0) {
        return Err(Error::InvalidParameter("E = h_0 is excluded for unidirectional baths".into()));
    }
    Ok(())
}

#[derive(Default, Clone, Copy)]
struct Compensated {
    sum: C64,
    comp: C64,
}

impl Compensated {
    fn add(&mut self, v: C64) {
        fn two(s: f64, c: &mut f64, v: f64) -> f64 {
            let t = s + v;
            if s.abs() >= v.abs() {
                *c += (s - t) + v;
            } else {
                *c += (v - t) + s;
            }
            t
        }
        self.sum.re = two(self.sum.re, &mut self.comp.re, v.re);
        self.sum.im = two(self.sum.im, &mut self.comp.im, v.im);
    }

    fn total(&self) -> C64 {
        self.sum + self.comp
    }
}

fn plane_phase(m: i64, x: i64, size: usize) -> C64 {
    let l = size as i64;
    let mut j = (m * x).rem_euclid(l);
    if j > l / 2 {
        j -= l;
    }
    C64::from_polar(1.0, 2.0 * PI * j as f64 / l as f64)
}

/// `(J^2/L) sum_k e^{ikx}/(z - h_k)` in ascending `m` with compensated summation.
pub fn sigma_finite_sum(bath: &BathSpec, coupling: f64, size: usize, z: C64, x: i64) -> Result<SelfEnergyResult> {
    check_size(bath, size)?;
    let band = bath.finite_band(size);
    check_finite_spectrum(&band, z)?;
    let x = reduce_site(x, size);
    let mut acc = Compensated::default();
    for (i, h) in band.iter().enumerate() {
        acc.add(plane_phase(i as i64 + 1, x, size) / (z - h));
    }
    Ok(SelfEnergyResult {
        value: coupling * coupling / size as f64 * acc.total(),
        kind: SelfEnergyKind::FiniteSum,
        x,
        size: Some(size),
        branch: None,
        unidirectional_side: None,
        truncated: false,
    })
}

/// `d/dz` of the finite-size self-energy at `x = 0`, by direct summation.
pub fn sigma_finite_sum_derivative(bath: &BathSpec, coupling: f64, size: usize, z: C64) -> Result<C64> {
    check_size(bath, size)?;
    let band = bath.finite_band(size);
    check_finite_spectrum(&band, z)?;
    let mut acc = Compensated::default();
    for h in &band {
        let d = z - h;
        acc.add(1.0 / (d * d));
    }
    Ok(-coupling * coupling / size as f64 * acc.total())
}

// Truncated Taylor series in t = beta - y0.
fn pow_series(base: C64, m: i64, len: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(len);
    let mut binom = C64::new(1.0, 0.0);
    for i in 0..len {
        out.push(binom * base.powi((m - i as i64) as i32));
        binom *= (m - i as i64) as f64 / (i + 1) as f64;
    }
    out
}

fn series_mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    let n = a.len();
    (0..n).map(|i| (0..=i).map(|j| a[j] * b[i - j]).sum()).collect()
}

fn series_recip(a: &[C64]) -> Vec<C64> {
    let n = a.len();
    let mut b = vec![C64::new(0.0, 0.0); n];
    b[0] = 1.0 / a[0];
    for i in 1..n {
        let s: C64 = (1..=i).map(|j| a[j] * b[i - j]).sum();
        b[i] = -s * b[0];
    }
    b
}

fn constant_series(c: f64, len: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); len];
    v[0] = C64::new(c, 0.0);
    v
}

const HEAVISIDE_LOG: f64 = 700.0;

/// Weight function multiplying `beta^(x-1) / (E - h(beta))` in the residue sum.
#[derive(Clone, Copy, Debug)]
enum Weight {
    /// `f_+` or `f_-` of the finite lattice.
    Finite(usize, Side),
    /// Thermodynamic limit: `-1` on roots counted inside for the non-negative
    /// half, `+1` on roots counted outside for the negative half.
    Thermo(Side),
}

impl Weight {
    // y^(x-1) F(y) for a simple root, evaluated without overflow.
    fn weighted_power(self, y: C64, inside: bool, x: i64) -> (C64, bool) {
        match self {
            Weight::Thermo(Side::NonNegative) => {
                if inside {
                    (-y.powi((x - 1) as i32), false)
                } else {
                    (C64::new(0.0, 0.0), false)
                }
            }
            Weight::Thermo(Side::Negative) => {
                if inside {
                    (C64::new(0.0, 0.0), false)
                } else {
                    (y.powi((x - 1) as i32), false)
                }
            }
            Weight::Finite(size, side) => {
                let l = size as i64;
                let a = y.norm().ln() * size as f64;
                let trunc = a.abs() > HEAVISIDE_LOG;
                let v = match (side, y.norm() < 1.0) {
                    (Side::NonNegative, true) => {
                        let yl = if trunc { C64::new(0.0, 0.0) } else { y.powi(size as i32) };
                        -y.powi((x - 1) as i32) / (1.0 - yl)
                    }
                    (Side::NonNegative, false) => {
                        let yl = if trunc { C64::new(0.0, 0.0) } else { y.powi(-(size as i32)) };
                        y.powi((x - 1 - l) as i32) / (1.0 - yl)
                    }
                    (Side::Negative, true) => {
                        let yl = if trunc { C64::new(0.0, 0.0) } else { y.powi(size as i32) };
                        -y.powi((x - 1 + l) as i32) / (1.0 - yl)
                    }
                    (Side::Negative, false) => {
                        let yl = if trunc { C64::new(0.0, 0.0) } else { y.powi(-(size as i32)) };
                        y.powi((x - 1) as i32) / (1.0 - yl)
                    }
                };
                (v, trunc)
            }
        }
    }

    // Taylor series of F at y0 for a multiple root.
    fn series(self, y0: C64, inside: bool, len: usize) -> (Vec<C64>, bool) {
        match self {
            Weight::Thermo(Side::NonNegative) => (constant_series(if inside { -1.0 } else { 0.0 }, len), false),
            Weight::Thermo(Side::Negative) => (constant_series(if inside { 0.0 } else { 1.0 }, len), false),
            Weight::Finite(size, side) => {
                let a = y0.norm().ln() * size as f64;
                let mut f = if a.abs() > HEAVISIDE_LOG {
                    constant_series(if a < 0.0 { -1.0 } else { 0.0 }, len)
                } else {
                    let mut s = pow_series(y0, size as i64, len);
                    s[0] -= 1.0;
                    series_recip(&s)
                };
                if side == Side::Negative {
                    f[0] += 1.0;
                }
                (f, a.abs() > HEAVISIDE_LOG)
            }
        }
    }
}

/// Roots of `E = h(y)` with an inside/outside assignment, ready for residue sums.
#[derive(Clone, Debug)]
struct ClassifiedRoots {
    roots: Vec<(Root, bool)>,
    lead: C64,
    q: usize,
}

impl ClassifiedRoots {
    fn new(bath: &BathSpec, roots: &SymbolRoots, inside: impl Fn(usize, &Root) -> bool) -> Self {
        let poly = bath.symbol_polynomial(roots.energy);
        let lead = poly[poly.len() - 1];
        Self {
            roots: roots.roots.iter().enumerate().map(|(i, r)| (*r, inside(i, r))).collect(),
            lead,
            q: bath.right_range(),
        }
    }

    // sum_y W(y) / h'(y) with residues of higher order where needed.
    fn sum(&self, bath: &BathSpec, weight: Weight, x: i64) -> Result<(C64, bool)> {
        let mut total = C64::new(0.0, 0.0);
        let mut truncated = false;
        for (idx, (root, inside)) in self.roots.iter().enumerate() {
            if root.multiplicity == 1 {
                let (w, t) = weight.weighted_power(root.y, *inside, x);
                truncated |= t;
                if w != C64::new(0.0, 0.0) {
                    total += w / bath.symbol_derivative(root.y);
                }
            } else {
                let r = root.multiplicity;
                let (f, t) = weight.series(root.y, *inside, r);
                truncated |= t;
                if f.iter().all(|c| *c == C64::new(0.0, 0.0)) {
                    continue;
                }
                let mut g = series_mul(&pow_series(root.y, x - 1 + self.q as i64, r), &f);
                for (jdx, (other, _)) in self.roots.iter().enumerate() {
                    if jdx != idx {
                        g = series_mul(&g, &pow_series(root.y - other.y, -(other.multiplicity as i64), r));
                    }
                }
                // residue of beta^(x-1) F / (E - h) is g[r-1] / lead; the sum carries a minus sign
                total -= g[r - 1] / self.lead;
            }
        }
        if !total.is_finite() {
            return Err(Error::NumericalOverflow(format!("residue sum at x = {x} is not finite")));
        }
        Ok((total, truncated))
    }
}

/// Residue evaluation of the finite-size self-energy at one energy, reusable across sites.
#[derive(Clone, Debug)]
pub struct FiniteResidue<'a> {
    bath: &'a BathSpec,
    coupling: f64,
    size: usize,
    energy: C64,
    roots: ClassifiedRoots,
}

impl<'a> FiniteResidue<'a> {
    pub fn new(bath: &'a BathSpec, coupling: f64, size: usize, z: C64) -> Result<Self> {
        check_size(bath, size)?;
        check_not_h0(bath, z)?;
        check_finite_spectrum(&bath.finite_band(size), z)?;
        let roots = bath.symbol_roots(z)?;
        let roots = ClassifiedRoots::new(bath, &roots, |_, r| r.y.norm() < 1.0);
        Ok(Self { bath, coupling, size, energy: z, roots })
    }

    pub fn energy(&self) -> C64 {
        self.energy
    }

    pub fn at(&self, x: i64) -> Result<SelfEnergyResult> {
        let x = reduce_site(x, self.size);
        let side = default_side(self.bath, x);
        let (v, truncated) = self.roots.sum(self.bath, Weight::Finite(self.size, side), x)?;
        Ok(SelfEnergyResult {
            value: self.coupling * self.coupling * v,
            kind: SelfEnergyKind::FiniteResidue,
            x,
            size: Some(self.size),
            branch: None,
            unidirectional_side: side_record(self.bath, x, side),
            truncated,
        })
    }

    /// Value at `x` with an explicit half-line expression.
    pub fn at_side(&self, x: i64, side: Side) -> Result<C64> {
        let x = reduce_site(x, self.size);
        let (v, _) = self.roots.sum(self.bath, Weight::Finite(self.size, side), x)?;
        Ok(self.coupling * self.coupling * v)
    }
}

/// Finite-size self-energy from the residues of `f_s(y) y^(x-1) / h'(y)`.
pub fn sigma_finite_residue(bath: &BathSpec, coupling: f64, size: usize, z: C64, x: i64) -> Result<SelfEnergyResult> {
    FiniteResidue::new(bath, coupling, size, z)?.at(x)
}

/// Thermodynamic self-energy at one energy with a fixed root classification.
#[derive(Clone, Debug)]
pub struct ThermoEvaluator<'a> {
    bath: &'a BathSpec,
    coupling: f64,
    energy: C64,
    branch: Option<Branch>,
    roots: ClassifiedRoots,
}

impl<'a> ThermoEvaluator<'a> {
    /// On-circle roots are assigned by `branch`; it is required if any exist.
    pub fn new(bath: &'a BathSpec, coupling: f64, z: C64, branch: Option<Branch>) -> Result<Self> {
        check_not_h0(bath, z)?;
        let roots = bath.symbol_roots(z)?;
        if roots.roots.iter().any(|r| r.on_circle) && branch.is_none() {
            return Err(Error::AmbiguousBranch);
        }
        let roots = ClassifiedRoots::new(bath, &roots, |_, r| {
            if r.on_circle {
                branch == Some(Branch::Greater)
            } else {
                r.y.norm() < 1.0
            }
        });
        Ok(Self { bath, coupling, energy: z, branch, roots })
    }

    /// Continuation to `E = h(e^{ik})` for complex `k`: the root `e^{ik}` is
    /// assigned by `branch`, all others by modulus.
    pub fn at_momentum(bath: &'a BathSpec, coupling: f64, k: C64, branch: Branch) -> Result<Self> {
        let z = bath.dispersion_complex(k);
        check_not_h0(bath, z)?;
        let roots = bath.symbol_roots(z)?;
        let y0 = (C64::new(0.0, 1.0) * k).exp();
        let designated = roots
            .roots
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1.y - y0).norm().total_cmp(&(b.1.y - y0).norm()))
            .map(|(i, _)| i)
            .ok_or(Error::DegenerateBath)?;
        if roots.roots[designated].multiplicity != 1 {
            return Err(Error::FineTunedInput { k: k.re });
        }
        if roots.roots.iter().enumerate().any(|(i, r)| i != designated && r.on_circle) {
            return Err(Error::AmbiguousBranch);
        }
        let roots = ClassifiedRoots::new(bath, &roots, |i, r| {
            if i == designated {
                branch == Branch::Greater
            } else {
                r.y.norm() < 1.0
            }
        });
        Ok(Self { bath, coupling, energy: z, branch: Some(branch), roots })
    }

    pub fn energy(&self) -> C64 {
        self.energy
    }

    pub fn at(&self, x: i64) -> Result<SelfEnergyResult> {
        self.at_side(x, default_side(self.bath, x))
    }

    /// Value at `x` using the given half-line expression (only relevant at `x = 0`).
    pub fn at_side(&self, x: i64, side: Side) -> Result<SelfEnergyResult> {
        let (v, _) = self.roots.sum(self.bath, Weight::Thermo(side), x)?;
        Ok(SelfEnergyResult {
            value: self.coupling * self.coupling * v,
            kind: SelfEnergyKind::Thermo,
            x,
            size: None,
            branch: self.branch,
            unidirectional_side: side_record(self.bath, x, side),
            truncated: false,
        })
    }
}

/// Thermodynamic-limit self-energy `Sigma_x(z)`.
pub fn sigma_thermo(bath: &BathSpec, coupling: f64, z: C64, x: i64, branch: Option<Branch>) -> Result<SelfEnergyResult> {
    ThermoEvaluator::new(bath, coupling, z, branch)?.at(x)
}

/// Thermodynamic self-energy at `E = h_k` continued to complex momentum.
pub fn sigma_thermo_at_momentum(bath: &BathSpec, coupling: f64, k: C64, x: i64, branch: Branch) -> Result<SelfEnergyResult> {
    ThermoEvaluator::at_momentum(bath, coupling, k, branch)?.at(x)
}

/// Branch discontinuity of the self-energy on the band, with its predicted value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchJump {
    pub computed: C64,
    pub predicted: C64,
}

impl BranchJump {
    pub fn relative_error(&self) -> f64 {
        (self.computed - self.predicted).norm() / self.predicted.norm()
    }
}

/// `Sigma^>_x(h_k) - Sigma^<_x(h_k)` against `J^2 e^{ikx} / (i h'_k)`.
pub fn branch_jump(bath: &BathSpec, coupling: f64, k: f64, x: i64) -> Result<BranchJump> {
    let d = bath.dispersion_derivative(k, 1);
    if d.norm() < 1e-9 * bath.scale() {
        return Err(Error::VanishingGroupVelocity { k });
    }
    let kc = C64::new(k, 0.0);
    let g = ThermoEvaluator::at_momentum(bath, coupling, kc, Branch::Greater)?.at(x)?.value;
    let l = ThermoEvaluator::at_momentum(bath, coupling, kc, Branch::Less)?.at(x)?.value;
    let predicted = coupling * coupling * C64::from_polar(1.0, k * x as f64) / (C64::new(0.0, 1.0) * d);
    Ok(BranchJump { computed: g - l, predicted })
}

/// Residual of the sum rule over the roots of `E = h(y)`; vanishes identically.
pub fn sum_rule_residual(bath: &BathSpec, energy: C64) -> Result<C64> {
    check_not_h0(bath, energy)?;
    let roots = bath.symbol_roots(energy)?;
    let classified = ClassifiedRoots::new(bath, &roots, |_, _| false);
    // Thermo(Negative) with everything outside gives sum_y y^(x-1) / h'(y) at x = 0
    let (s, _) = classified.sum(bath, Weight::Thermo(Side::Negative), 0)?;
    let h0 = 1.0 / (energy - bath.hopping(0));
    Ok(if bath.left_range() == 0 {
        s + h0
    } else if bath.right_range() == 0 {
        s - h0
    } else {
        s
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn rel(a: C64, b: C64) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    // Magnitude of the terms of the direct sum, against which its roundoff is measured.
    fn sum_scale(b: &BathSpec, j: f64, size: usize, z: C64) -> f64 {
        j * j / size as f64 * b.finite_band(size).iter().map(|h| 1.0 / (z - h).norm()).sum::<f64>()
    }

    #[test]
    fn window_and_reduction() {
        assert_eq!(window(8), (-4, 3));
        assert_eq!(window(801), (-400, 400));
        assert_eq!(reduce_site(3 - 16, 16), 3);
        assert_eq!(reduce_site(4, 8), -4);
    }

    #[test]
    fn direct_sum_matches_exact_rational_oracle() {
        // HN u=1, kappa=0.5: h_k = -(0.75) e^{ik} - (1.25) e^{-ik}
        let b = BathSpec::hatano_nelson(1.0, 0.5);
        let z = c(0.0, 3.0);
        let mut want = c(0.0, 0.0);
        for m in 1..=8 {
            let k = 2.0 * PI * m as f64 / 8.0;
            let h = -0.75 * C64::from_polar(1.0, k) - 1.25 * C64::from_polar(1.0, -k);
            want += 1.0 / (z - h);
        }
        want /= 8.0;
        let got = sigma_finite_sum(&b, 1.0, 8, z, 0).unwrap().value;
        assert!(rel(got, want) < 1e-15);
    }

    #[test]
    fn direct_sum_is_periodic() {
        let b = BathSpec::hatano_nelson(6.0, 2.0);
        let z = c(1.0, 2.0);
        let a = sigma_finite_sum(&b, 2.0, 16, z, 3).unwrap().value;
        let m = sigma_finite_sum(&b, 2.0, 16, z, 3 - 16).unwrap().value;
        assert_eq!(a, m);
    }

    #[test]
    fn collision_with_finite_spectrum() {
        let b = BathSpec::hatano_nelson(6.0, 2.0);
        let z = b.dispersion(2.0 * PI * 3.0 / 16.0);
        assert!(matches!(sigma_finite_sum(&b, 1.0, 16, z, 0), Err(Error::OnFiniteSpectrum { .. })));
        assert!(matches!(sigma_finite_residue(&b, 1.0, 16, z, 0), Err(Error::OnFiniteSpectrum { .. })));
    }

    #[test]
    fn residue_matches_direct_sum_hn() {
        let b = BathSpec::hatano_nelson(6.0, 2.0);
        let z = c(3.0, 3.0);
        let fr = FiniteResidue::new(&b, 20.0, 64, z).unwrap();
        for x in -32..32 {
            let s = sigma_finite_sum(&b, 20.0, 64, z, x).unwrap().value;
            assert!(rel(fr.at(x).unwrap().value, s) < 1e-10, "x = {x}");
        }
    }

    #[test]
    fn bidirectional_origin_both_halves_agree() {
        let b = BathSpec::hatano_nelson(6.0, 2.0);
        let fr = FiniteResidue::new(&b, 20.0, 64, c(3.0, 3.0)).unwrap();
        let p = fr.at_side(0, Side::NonNegative).unwrap();
        let m = fr.at_side(0, Side::Negative).unwrap();
        assert!(rel(p, m) < 1e-12);
    }

    #[test]
    fn unidirectional_origin_discrepancy() {
        let b = BathSpec::nnn(5.0, 12.0);
        let (j, z) = (20.0, c(3.0, 3.0));
        let fr = FiniteResidue::new(&b, j, 64, z).unwrap();
        let p = fr.at_side(0, Side::NonNegative).unwrap();
        let m = fr.at_side(0, Side::Negative).unwrap();
        assert!(rel(p - m, c(j * j, 0.0) / (z - b.hopping(0))) < 1e-10);
        let s = sigma_finite_sum(&b, j, 64, z, 0).unwrap().value;
        assert!((p - s).norm() < 1e-10 * sum_scale(&b, j, 64, z));
        let r = fr.at(0).unwrap();
        assert_eq!(r.unidirectional_side, Some(Side::NonNegative));
    }

    #[test]
    fn left_unidirectional_uses_negative_half() {
        let b = BathSpec::new(&[(-1, c(-3.0, 0.0)), (-2, c(-1.5, 0.5))]).unwrap();
        let z = c(0.4, 1.7);
        let r = sigma_finite_residue(&b, 2.0, 40, z, 0).unwrap();
        assert_eq!(r.unidirectional_side, Some(Side::Negative));
        let s = sigma_finite_sum(&b, 2.0, 40, z, 0).unwrap().value;
        assert!(rel(r.value, s) < 1e-10);
    }

    #[test]
    fn thermo_hn_closed_forms_on_band() {
        let (u, kap, j) = (6.0, 2.0, 20.0);
        let b = BathSpec::hatano_nelson(u, kap);
        let k = 0.7;
        let e = b.dispersion(k);
        let delta = (u - kap / 2.0) * C64::from_polar(1.0, k) - (u + kap / 2.0) * C64::from_polar(1.0, -k);
        for x in 0..5 {
            let g = sigma_thermo(&b, j, e, x, Some(Branch::Greater)).unwrap().value;
            assert!(rel(g, j * j / delta * C64::from_polar(1.0, k * x as f64)) < 1e-12);
            let l = sigma_thermo(&b, j, e, x, Some(Branch::Less)).unwrap().value;
            assert!(l.norm() < 1e-12);
        }
        assert!(matches!(sigma_thermo(&b, j, e, 0, None), Err(Error::AmbiguousBranch)));
    }

    #[test]
    fn thermo_large_z_asymptotics() {
        let b = BathSpec::hatano_nelson(6.0, 2.0);
        let z = c(1e6, 0.0);
        let s = sigma_thermo(&b, 20.0, z, 0, None).unwrap().value;
        assert!(rel(s, 400.0 / z) < 1e-5);
    }

    #[test]
    fn branch_jump_closed_forms() {
        let (u, kap, j) = (6.0, 2.0, 20.0);
        let hn = BathSpec::hatano_nelson(u, kap);
        let k = 1.1;
        let delta = (u - kap / 2.0) * C64::from_polar(1.0, k) - (u + kap / 2.0) * C64::from_polar(1.0, -k);
        let bj = branch_jump(&hn, j, k, 0).unwrap();
        assert!(rel(bj.computed, j * j / delta) < 1e-12);
        let (ka, kp) = (5.0, 12.0);
        let nnn = BathSpec::nnn(ka, kp);
        let dn = ka + 2.0 * kp * C64::from_polar(1.0, -k);
        let bj = branch_jump(&nnn, j, k, 0).unwrap();
        assert!(rel(bj.computed, -j * j * C64::from_polar(1.0, k) / dn) < 1e-12);
        for x in [-7, -1, 3, 12] {
            let bx = branch_jump(&nnn, j, k, x).unwrap();
            assert!(rel(bx.computed, bj.computed * C64::from_polar(1.0, k * x as f64)) < 1e-12);
        }
        assert!(matches!(branch_jump(&BathSpec::nnn(10.0, 5.0), j, PI, 0), Err(Error::VanishingGroupVelocity { .. })));
    }

    #[test]
    fn sum_rules_of_paper_baths() {
        assert!(sum_rule_residual(&BathSpec::hatano_nelson(6.0, 2.0), c(5.0, 2.0)).unwrap().norm() < 1e-10);
        assert!(sum_rule_residual(&BathSpec::nnn(5.0, 12.0), c(30.0, 10.0)).unwrap().norm() < 1e-10);
        let sym = BathSpec::new(&[(-1, c(1.0, 0.0)), (1, c(1.0, 0.0))]).unwrap();
        assert!(sum_rule_residual(&sym, c(0.0, 2.5)).unwrap().norm() < 1e-14);
        let left = BathSpec::new(&[(-1, c(-3.0, 0.0)), (-2, c(-1.5, 0.5))]).unwrap();
        assert!(sum_rule_residual(&left, c(0.3, -2.0)).unwrap().norm() < 1e-12);
    }

    #[test]
    fn double_root_residue_matches_direct_sum() {
        // E = 5 is the doubly degenerate root y = -1 of this bath
        let b = BathSpec::nnn(10.0, 5.0);
        let z = c(5.0, 0.0);
        let roots = b.symbol_roots(z).unwrap();
        assert_eq!(roots.roots[0].multiplicity, 2);
        for size in [31usize, 65] {
            let fr = FiniteResidue::new(&b, 3.0, size, z).unwrap();
            for x in [-5, -1, 0, 1, 4, 10] {
                let s = sigma_finite_sum(&b, 3.0, size, z, x).unwrap().value;
                assert!(rel(fr.at(x).unwrap().value, s) < 1e-8, "L = {size}, x = {x}");
            }
        }
    }

    #[test]
    fn exponential_convergence_off_band() {
        let b = BathSpec::hatano_nelson(6.0, 2.0);
        let z = c(3.0, 20.0);
        let th = sigma_thermo(&b, 20.0, z, 0, None).unwrap().value;
        let sizes = [16usize, 32, 64, 128, 256];
        let logs: Vec<f64> = sizes
            .iter()
            .map(|&l| (sigma_finite_sum(&b, 20.0, l, z, 0).unwrap().value - th).norm().max(1e-300).ln())
            .collect();
        assert!(logs[1] < logs[0] && logs[2] < logs[1]);
    }

    #[test]
    fn heaviside_truncation_flag() {
        let b = BathSpec::hatano_nelson(6.0, 2.0);
        let r = sigma_finite_residue(&b, 1.0, 4001, c(0.0, 40.0), 0).unwrap();
        assert!(r.truncated);
        let s = sigma_finite_sum(&b, 1.0, 4001, c(0.0, 40.0), 0).unwrap().value;
        assert!(rel(r.value, s) < 1e-10);
    }

    fn arb_bath() -> impl Strategy<Value = BathSpec> {
        (0usize..=3, 0usize..=3).prop_filter("nonempty", |(p, q)| p + q >= 1).prop_flat_map(|(p, q)| {
            proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), p + q + 1).prop_map(move |v| {
                let mut hops: Vec<(i64, C64)> = v.iter().enumerate().map(|(i, &(a, b))| (i as i64 - p as i64, c(a, b))).collect();
                for (n, h) in hops.iter_mut() {
                    if (*n == -(p as i64) || *n == q as i64) && h.norm() < 0.3 {
                        *h += c(0.6, 0.0);
                    }
                }
                BathSpec::with_ranges(p, q, &hops).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn residue_equals_direct_sum(b in arb_bath(), li in 0usize..3, zr in -6.0f64..6.0, zi in -6.0f64..6.0, xf in 0.0f64..1.0) {
            let size = [32usize, 64, 128][li];
            let z = c(zr, zi);
            prop_assume!(b.band_distance(z, 4096) > 0.05 * b.scale());
            let (lo, hi) = window(size);
            let x = lo + ((hi - lo) as f64 * xf).round() as i64;
            let s = sigma_finite_sum(&b, 1.3, size, z, x).unwrap().value;
            let r = sigma_finite_residue(&b, 1.3, size, z, x).unwrap().value;
            prop_assert!((r - s).norm() <= 1e-10 * sum_scale(&b, 1.3, size, z));
        }

        #[test]
        fn f_identity(re in -1.5f64..1.5, im in -1.5f64..1.5, size in 2usize..50) {
            let y = c(re, im);
            prop_assume!((y.norm() - 1.0).abs() > 0.05 && y.norm() > 0.2);
            let lhs = f_minus(y, size);
            let rhs = f_plus(y, size) + 1.0;
            prop_assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0));
        }

        #[test]
        fn sum_rule_holds(b in arb_bath(), er in -6.0f64..6.0, ei in -6.0f64..6.0) {
            let e = c(er, ei);
            prop_assume!(b.band_distance(e, 4096) > 0.05 * b.scale());
            let roots = b.symbol_roots(e).unwrap();
            let mag: f64 = roots.roots.iter().map(|r| (1.0 / (r.y * b.symbol_derivative(r.y))).norm()).sum();
            prop_assert!(sum_rule_residual(&b, e).unwrap().norm() <= 1e-10 * mag.max(1.0));
        }

        #[test]
        fn branch_jump_identity(b in arb_bath(), k in -3.1f64..3.1, x in -6i64..6) {
            let d = b.dispersion_derivative(k, 1);
            prop_assume!(d.norm() > 0.05 * b.scale());
            let e = b.dispersion(k);
            let roots = b.symbol_roots(e).unwrap();
            prop_assume!(roots.roots.iter().filter(|r| (r.y.norm() - 1.0).abs() < 1e-6).count() == 1);
            let bj = branch_jump(&b, 1.0, k, x).unwrap();
            prop_assert!(bj.relative_error() < 1e-10);
        }
    }
}
