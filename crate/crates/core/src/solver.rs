//! Secular equations: finite-size scattering momenta, bound-state poles of the
//! emitter Green's function, and fine-tuned degenerate states.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::bath::{reduce_angle, angle_distance, BathSpec, SelfIntersection};
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, CMatrix};
use crate::selfenergy::{
    sigma_finite_sum, sigma_finite_sum_derivative, Branch, FiniteResidue, Side, ThermoEvaluator,
};

/// Radius around fine-tuned momenta inside which the generic solver refuses to run.
pub const FINE_TUNED_RADIUS: f64 = 1e-3;

const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmitterParams {
    /// Coupling `J`.
    pub coupling: f64,
    /// Detuning `Delta`.
    pub detuning: f64,
}

impl EmitterParams {
    pub fn new(coupling: f64, detuning: f64) -> Result<Self> {
        if !coupling.is_finite() || !detuning.is_finite() {
            return Err(Error::InvalidParameter("J and Delta must be finite".into()));
        }
        Ok(Self { coupling, detuning })
    }

    pub fn require_coupling(&self) -> Result<()> {
        if self.coupling == 0.0 {
            return Err(Error::InvalidParameter("coupling J must be nonzero".into()));
        }
        Ok(())
    }
}

/// Scale against which secular residuals are judged.
pub fn secular_scale(bath: &BathSpec, params: &EmitterParams, energy: C64) -> f64 {
    energy.norm() + params.detuning.abs() + params.coupling * params.coupling / bath.scale()
}

/// A solved finite-size scattering momentum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatteringMomentum {
    /// Unperturbed momentum `2 pi m / L` (or the target momentum).
    pub k_base: f64,
    pub k_tilde: C64,
    pub energy: C64,
    pub size: usize,
    /// Secular residual at the solution. When the energy is closer to the
    /// finite spectrum than the collision tolerance, this is the residual of
    /// the equation multiplied through by `E - h_k`.
    pub residual: C64,
    /// The approximate branch form that was solved, if any.
    pub branch_used: Option<Branch>,
    /// `|c_e|` of the normalized eigenstate.
    pub emitter_weight: f64,
}

impl ScatteringMomentum {
    /// True when the emitter amplitude is numerically zero.
    pub fn emitter_vanishes(&self) -> bool {
        self.emitter_weight < 1e-12
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    Conventional,
    Hidden,
}

impl BoundKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundKind::Conventional => "conventional",
            BoundKind::Hidden => "hidden",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundState {
    pub energy: C64,
    pub k_tilde: C64,
    pub pole_branch: Branch,
    /// Every branch on which the pole was found.
    pub pole_branches: Vec<Branch>,
    pub region_winding: i64,
    pub kind: BoundKind,
    /// `E_b - Delta - Sigma(E_b)`.
    pub residual: C64,
}

/// `1 / (z - Delta - Sigma(z))` at `x = 0`.
pub fn emitter_green(
    bath: &BathSpec,
    params: &EmitterParams,
    z: C64,
    branch: Option<Branch>,
    side: Option<Side>,
) -> Result<C64> {
    let ev = ThermoEvaluator::new(bath, params.coupling, z, branch)?;
    let side = side.unwrap_or(crate::selfenergy::default_side(bath, 0));
    green_from(bath, params, z, ev.at_side(0, side)?.value)
}

/// Emitter Green's function at `E = h_k` continued to complex momentum.
pub fn emitter_green_at_momentum(
    bath: &BathSpec,
    params: &EmitterParams,
    k: C64,
    branch: Branch,
    side: Option<Side>,
) -> Result<C64> {
    let ev = ThermoEvaluator::at_momentum(bath, params.coupling, k, branch)?;
    let side = side.unwrap_or(crate::selfenergy::default_side(bath, 0));
    green_from(bath, params, ev.energy(), ev.at_side(0, side)?.value)
}

fn green_from(bath: &BathSpec, params: &EmitterParams, z: C64, sigma: C64) -> Result<C64> {
    let d = z - params.detuning - sigma;
    if d.norm() < 1e-12 * secular_scale(bath, params, z) {
        return Err(Error::AtPole { z });
    }
    Ok(1.0 / d)
}

/// `(1/L) log |G^>(h_k) / G^<(h_k)|`.
pub fn imk_leading(bath: &BathSpec, params: &EmitterParams, size: usize, k: f64) -> Result<f64> {
    let (g, l) = green_pair(bath, params, k)?;
    Ok((g / l).norm().ln() / size as f64)
}

fn green_pair(bath: &BathSpec, params: &EmitterParams, k: f64) -> Result<(C64, C64)> {
    if bath.dispersion_derivative(k, 1).norm() < 1e-9 * bath.scale() {
        return Err(Error::VanishingGroupVelocity { k });
    }
    let kc = C64::new(k, 0.0);
    let g = emitter_green_at_momentum(bath, params, kc, Branch::Greater, None)?;
    let l = emitter_green_at_momentum(bath, params, kc, Branch::Less, None)?;
    Ok((g, l))
}

/// Fine-tuned momenta of a bath: stationary points and self-intersection partners.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FineTunedPoints {
    pub stationary: Vec<f64>,
    pub intersections: Vec<SelfIntersection>,
}

impl FineTunedPoints {
    pub fn of(bath: &BathSpec) -> Self {
        Self { stationary: bath.stationary_points(), intersections: bath.self_intersections() }
    }

    pub fn momenta(&self) -> Vec<f64> {
        let mut v = self.stationary.clone();
        for s in &self.intersections {
            v.push(s.k_pair.0);
            v.push(s.k_pair.1);
        }
        v
    }

    pub fn energies(&self, bath: &BathSpec) -> Vec<C64> {
        let mut v: Vec<C64> = self.stationary.iter().map(|&k| bath.dispersion(k)).collect();
        v.extend(self.intersections.iter().map(|s| s.energy));
        v
    }

    pub fn near(&self, k: f64, radius: f64) -> bool {
        self.momenta().iter().any(|&f| angle_distance(f, k) < radius)
    }
}

/// Exact secular residual `E - Delta - Sigma^(L)(E)` via residues.
pub fn secular_residual(bath: &BathSpec, params: &EmitterParams, size: usize, energy: C64) -> Result<C64> {
    let s = FiniteResidue::new(bath, params.coupling, size, energy)?.at(0)?.value;
    Ok(energy - params.detuning - s)
}

/// Branch forms of the approximate secular equation at complex momentum.
pub fn secular_branch_residual(
    bath: &BathSpec,
    params: &EmitterParams,
    size: usize,
    k: C64,
    branch: Branch,
) -> Result<C64> {
    let ev = ThermoEvaluator::at_momentum(bath, params.coupling, k, branch)?;
    let e = ev.energy();
    let sigma = ev.at(0)?.value;
    let d = bath.dispersion_derivative_complex(k);
    let phase = (I * k * size as f64).exp();
    let j2 = params.coupling * params.coupling;
    let pole = match branch {
        Branch::Less => j2 / (I * d * (1.0 - phase)),
        Branch::Greater => j2 * phase / (I * d * (1.0 - phase)),
    };
    Ok(e - params.detuning - sigma - pole)
}

// Secular function multiplied through by (E - h_m), evaluated by direct sums.
struct Regularized<'a> {
    band: Vec<C64>,
    pole: usize,
    params: &'a EmitterParams,
}

impl<'a> Regularized<'a> {
    fn new(bath: &BathSpec, params: &'a EmitterParams, size: usize, pole: usize) -> Self {
        Self { band: bath.finite_band(size), pole, params }
    }

    fn eval(&self, e: C64) -> (C64, C64) {
        let l = self.band.len() as f64;
        let j2 = self.params.coupling * self.params.coupling;
        let mut s = C64::new(0.0, 0.0);
        let mut ds = C64::new(0.0, 0.0);
        let mut cs = C64::new(0.0, 0.0);
        let mut cds = C64::new(0.0, 0.0);
        for (i, h) in self.band.iter().enumerate() {
            if i == self.pole {
                continue;
            }
            let r = 1.0 / (e - h);
            let (t, c) = two_sum(s, r);
            s = t;
            cs += c;
            let (t, c) = two_sum(ds, -r * r);
            ds = t;
            cds += c;
        }
        let s = (s + cs) * j2 / l;
        let ds = (ds + cds) * j2 / l;
        let hm = self.band[self.pole];
        let inner = e - self.params.detuning - s;
        let g = (e - hm) * inner - j2 / l;
        let dg = inner + (e - hm) * (1.0 - ds);
        (g, dg)
    }
}

fn two_sum(a: C64, b: C64) -> (C64, C64) {
    fn ts(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }
    let (re, cre) = ts(a.re, b.re);
    let (im, cim) = ts(a.im, b.im);
    (C64::new(re, im), C64::new(cre, cim))
}

fn emitter_weight(bath: &BathSpec, params: &EmitterParams, size: usize, energy: C64) -> f64 {
    let j2 = params.coupling * params.coupling;
    let s: f64 = bath.finite_band(size).iter().map(|h| 1.0 / (energy - h).norm_sqr()).sum();
    let w = 1.0 / (1.0 + j2 / size as f64 * s);
    if w.is_finite() { w.sqrt() } else { 0.0 }
}

fn finish_scattering(
    bath: &BathSpec,
    params: &EmitterParams,
    size: usize,
    k_base: f64,
    k_tilde: C64,
    regularized: C64,
    branch_used: Option<Branch>,
) -> Result<ScatteringMomentum> {
    let k_tilde = C64::new(reduce_angle(k_tilde.re), k_tilde.im);
    if k_tilde.im.abs() > 10.0 / size as f64 {
        return Err(Error::ConvergedToBoundState { k_tilde });
    }
    let energy = bath.dispersion_complex(k_tilde);
    let residual = match secular_residual(bath, params, size, energy) {
        Ok(r) => r,
        Err(Error::OnFiniteSpectrum { .. }) => regularized,
        Err(e) => return Err(e),
    };
    Ok(ScatteringMomentum {
        k_base,
        k_tilde,
        energy,
        size,
        residual,
        branch_used,
        emitter_weight: emitter_weight(bath, params, size, energy),
    })
}

/// Solves `E - Delta - Sigma^(L)(E) = 0` for the state continuing plane wave `m`.
pub fn scattering_momentum(bath: &BathSpec, params: &EmitterParams, size: usize, m: usize) -> Result<ScatteringMomentum> {
    let k = check_mode(bath, size, m)?;
    let fine = FineTunedPoints::of(bath);
    if fine.near(k, FINE_TUNED_RADIUS) {
        return Err(Error::FineTunedInput { k });
    }
    let mut kt = initial_guess(bath, params, size, k)?;
    let reg = Regularized::new(bath, params, size, m - 1);
    let tol = 1e-13 * secular_scale(bath, params, bath.dispersion(k));
    let cap = PI / size as f64;
    let mut trace = Vec::new();
    for _ in 0..100 {
        let e = bath.dispersion_complex(kt);
        let (g, dg) = reg.eval(e);
        trace.push(g.norm());
        let dk = g / (dg * bath.dispersion_derivative_complex(kt));
        if g.norm() <= tol || dk.norm() < 1e-16 {
            return finish_scattering(bath, params, size, k, kt, g, None);
        }
        kt -= if dk.norm() > cap { dk * (cap / dk.norm()) } else { dk };
    }
    Err(Error::NoConvergence { steps: 100, trace })
}

fn check_mode(bath: &BathSpec, size: usize, m: usize) -> Result<f64> {
    if size < bath.left_range() + bath.right_range() + 1 {
        return Err(Error::InvalidParameter(format!("L = {size} is smaller than p + q + 1")));
    }
    if m < 1 || m > size {
        return Err(Error::InvalidParameter(format!("mode index {m} outside 1..={size}")));
    }
    Ok(reduce_angle(2.0 * PI * m as f64 / size as f64))
}

fn initial_guess(bath: &BathSpec, params: &EmitterParams, size: usize, k: f64) -> Result<C64> {
    if params.coupling == 0.0 {
        return Ok(C64::new(k, 0.0));
    }
    let (g, l) = green_pair(bath, params, k)?;
    // e^{i k L} ~ G^< / G^>
    Ok(C64::new(k, 0.0) - I * (l / g).ln() / size as f64)
}

/// Solves one of the two approximate branch forms of the secular equation.
pub fn scattering_momentum_branch(
    bath: &BathSpec,
    params: &EmitterParams,
    size: usize,
    m: usize,
    branch: Branch,
) -> Result<ScatteringMomentum> {
    let k = check_mode(bath, size, m)?;
    if FineTunedPoints::of(bath).near(k, FINE_TUNED_RADIUS) {
        return Err(Error::FineTunedInput { k });
    }
    let mut kt = initial_guess(bath, params, size, k)?;
    let tol = 1e-12 * secular_scale(bath, params, bath.dispersion(k));
    let step = 1e-7 / size as f64;
    let cap = PI / size as f64;
    let mut trace = Vec::new();
    for _ in 0..100 {
        let f = secular_branch_residual(bath, params, size, kt, branch)?;
        trace.push(f.norm());
        if f.norm() <= tol {
            let e = bath.dispersion_complex(kt);
            let (g, _) = Regularized::new(bath, params, size, m - 1).eval(e);
            let mut out = finish_scattering(bath, params, size, k, kt, g, Some(branch))?;
            out.branch_used = Some(branch);
            return Ok(out);
        }
        let fp = secular_branch_residual(bath, params, size, kt + step, branch)?;
        let fm = secular_branch_residual(bath, params, size, kt - step, branch)?;
        let dk = f / ((fp - fm) / (2.0 * step));
        kt -= if dk.norm() > cap { dk * (cap / dk.norm()) } else { dk };
    }
    Err(Error::NoConvergence { steps: 100, trace })
}

/// Starting grid for the bound-state search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundSearch {
    pub grid: usize,
    pub im_max: f64,
}

impl Default for BoundSearch {
    fn default() -> Self {
        Self { grid: 64, im_max: 3.0 }
    }
}

#[derive(Clone, Copy, Debug)]
struct PoleCandidate {
    k: C64,
    energy: C64,
    branch: Branch,
}

fn pole_newton(bath: &BathSpec, params: &EmitterParams, mut k: C64, branch: Branch, im_limit: f64) -> Option<PoleCandidate> {
    let f = |k: C64| -> Option<C64> {
        let ev = ThermoEvaluator::at_momentum(bath, params.coupling, k, branch).ok()?;
        let s = ev.at(0).ok()?.value;
        Some(ev.energy() - params.detuning - s)
    };
    let h = 1e-7;
    for _ in 0..60 {
        let v = f(k)?;
        let tol = 1e-12 * secular_scale(bath, params, bath.dispersion_complex(k));
        if v.norm() <= tol {
            return Some(PoleCandidate { k, energy: bath.dispersion_complex(k), branch });
        }
        let dv = (f(k + h)? - f(k - h)?) / (2.0 * h);
        if dv.norm() == 0.0 {
            return None;
        }
        let mut dk = v / dv;
        if dk.norm() > 0.5 {
            dk *= 0.5 / dk.norm();
        }
        k -= dk;
        k = C64::new(reduce_angle(k.re), k.im);
        if !k.is_finite() || k.im.abs() > im_limit {
            return None;
        }
    }
    None
}

/// All poles of the branch-resolved emitter Green's functions off the band.
pub fn bound_states(bath: &BathSpec, params: &EmitterParams) -> Vec<BoundState> {
    bound_states_with(bath, params, BoundSearch::default())
}

pub fn bound_states_with(bath: &BathSpec, params: &EmitterParams, search: BoundSearch) -> Vec<BoundState> {
    if params.coupling == 0.0 {
        // the pole sits at Delta itself when the emitter decouples
        return bath
            .winding_number(C64::new(params.detuning, 0.0))
            .ok()
            .map(|w| {
                let roots = bath.symbol_roots(C64::new(params.detuning, 0.0)).ok();
                roots
                    .and_then(|r| r.roots.first().copied())
                    .map(|r| BoundState {
                        energy: C64::new(params.detuning, 0.0),
                        k_tilde: -I * r.y.ln(),
                        pole_branch: if r.y.norm() < 1.0 { Branch::Greater } else { Branch::Less },
                        pole_branches: vec![Branch::Greater, Branch::Less],
                        region_winding: w,
                        kind: if w == 0 { BoundKind::Conventional } else { BoundKind::Hidden },
                        residual: C64::new(0.0, 0.0),
                    })
                    .into_iter()
                    .collect()
            })
            .unwrap_or_default();
    }
    let n = search.grid.max(2);
    let starts: Vec<(C64, Branch)> = [Branch::Greater, Branch::Less]
        .iter()
        .flat_map(|&b| {
            (0..n).flat_map(move |i| {
                (0..n).map(move |j| {
                    let re = -PI + 2.0 * PI * (i + 1) as f64 / n as f64;
                    let im = -search.im_max + 2.0 * search.im_max * j as f64 / (n - 1) as f64;
                    (C64::new(re, im), b)
                })
            })
        })
        .collect();
    let scale = bath.scale();
    let candidates: Vec<PoleCandidate> = starts
        .par_iter()
        .filter_map(|&(k0, b)| pole_newton(bath, params, k0, b, 2.0 * search.im_max))
        .filter(|c| match c.branch {
            Branch::Greater => c.k.im > 1e-6,
            Branch::Less => c.k.im < -1e-6,
        })
        .filter(|c| {
            bath.symbol_roots(c.energy)
                .map(|r| r.roots.iter().all(|y| (y.y.norm() - 1.0).abs() > 1e-6))
                .unwrap_or(false)
        })
        .collect();

    let mut groups: Vec<Vec<PoleCandidate>> = Vec::new();
    for c in candidates {
        match groups.iter_mut().find(|g| (g[0].energy - c.energy).norm() < 1e-6 * scale) {
            Some(g) => g.push(c),
            None => groups.push(vec![c]),
        }
    }
    let mut out: Vec<BoundState> = groups
        .into_iter()
        .filter_map(|g| {
            let energy = g[0].energy;
            let w = bath.winding_number(energy).ok()?;
            let kind = if w == 0 { BoundKind::Conventional } else { BoundKind::Hidden };
            let preferred = if w == 0 { Branch::Greater } else { Branch::Less };
            let pool: Vec<&PoleCandidate> = if g.iter().any(|c| c.branch == preferred) {
                g.iter().filter(|c| c.branch == preferred).collect()
            } else {
                g.iter().collect()
            };
            let best = pool
                .into_iter()
                .min_by(|a, b| {
                    let (ia, ib) = (a.k.im.abs(), b.k.im.abs());
                    if (ia - ib).abs() > 1e-6 {
                        ia.total_cmp(&ib)
                    } else {
                        (a.k.re < -1e-9).cmp(&(b.k.re < -1e-9)).then(a.k.re.abs().total_cmp(&b.k.re.abs()))
                    }
                })?;
            let mut branches: Vec<Branch> = g.iter().map(|c| c.branch).collect();
            branches.sort_by_key(|b| *b == Branch::Less);
            branches.dedup();
            let sigma = ThermoEvaluator::new(bath, params.coupling, energy, None).ok()?.at(0).ok()?.value;
            Some(BoundState {
                energy,
                k_tilde: best.k,
                pole_branch: best.branch,
                pole_branches: branches,
                region_winding: w,
                kind,
                residual: energy - params.detuning - sigma,
            })
        })
        .collect();
    out.sort_by(|a, b| a.energy.re.total_cmp(&b.energy.re).then(a.energy.im.total_cmp(&b.energy.im)));
    out
}

/// Fine-tuned point around which a degenerate pair of momenta is sought.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FineTunedTarget {
    SelfIntersection(SelfIntersection),
    /// Vanishing group velocity at `k_r`; `mode` selects the family member.
    SecondOrderPole { k_r: f64, mode: usize },
}

/// Two finite-size momenta sharing one energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DegeneratePair {
    pub alpha: ScatteringMomentum,
    pub gamma: ScatteringMomentum,
}

impl DegeneratePair {
    pub fn energy(&self) -> C64 {
        self.alpha.energy
    }
}

/// Finite-size secular solutions close to `e0`, from the emitter coupled to the
/// `near` closest plane waves with the rest folded into a constant shift.
pub fn local_secular_solutions(
    bath: &BathSpec,
    params: &EmitterParams,
    size: usize,
    e0: C64,
    near: usize,
) -> Result<Vec<C64>> {
    let band = bath.finite_band(size);
    let mut order: Vec<usize> = (0..band.len()).collect();
    order.sort_by(|&a, &b| (band[a] - e0).norm().total_cmp(&(band[b] - e0).norm()));
    let near = near.min(band.len());
    let chosen = &order[..near];
    let j2 = params.coupling * params.coupling;
    let l = size as f64;
    let far: C64 = order[near..].iter().map(|&i| 1.0 / (e0 - band[i])).sum::<C64>() * j2 / l;
    let mut a = CMatrix::zeros(near + 1);
    a[(0, 0)] = C64::new(params.detuning, 0.0) + far;
    let c = params.coupling / l.sqrt();
    for (p, &i) in chosen.iter().enumerate() {
        a[(0, p + 1)] = C64::new(c, 0.0);
        a[(p + 1, 0)] = C64::new(c, 0.0);
        a[(p + 1, p + 1)] = band[i];
    }
    let radius = chosen.last().map(|&i| (band[i] - e0).norm()).unwrap_or(1.0);
    let mut out = Vec::new();
    for mut e in eigenvalues(&a)? {
        if (e - e0).norm() > radius {
            continue;
        }
        let mut ok = false;
        for _ in 0..50 {
            let f = match sigma_finite_sum(bath, params.coupling, size, e, 0) {
                Ok(s) => e - params.detuning - s.value,
                Err(_) => break,
            };
            let df = 1.0 - sigma_finite_sum_derivative(bath, params.coupling, size, e)?;
            let step = f / df;
            e -= step;
            if step.norm() <= 1e-13 * e.norm().max(1.0) {
                ok = true;
                break;
            }
        }
        if ok && !out.iter().any(|x: &C64| (x - e).norm() < 1e-12 * e.norm().max(1.0)) {
            out.push(e);
        }
    }
    Ok(out)
}

/// Solves the two-root secular problem at a self-intersection or second-order pole.
pub fn degenerate_momenta(
    bath: &BathSpec,
    params: &EmitterParams,
    size: usize,
    target: &FineTunedTarget,
) -> Result<DegeneratePair> {
    params.require_coupling()?;
    let scale = bath.scale();
    let (e0, bases) = match *target {
        FineTunedTarget::SelfIntersection(si) => {
            let (k1, k2) = si.k_pair;
            if (bath.dispersion(k1) - bath.dispersion(k2)).norm() > 1e-10 * scale || angle_distance(k1, k2) < 1e-6 {
                return Err(Error::NotDegenerate(format!("momenta {k1} and {k2} do not share an energy")));
            }
            (si.energy, (k1, k2))
        }
        FineTunedTarget::SecondOrderPole { k_r, mode } => {
            if bath.dispersion_derivative(k_r, 1).norm() >= 1e-6 * scale {
                return Err(Error::NotDegenerate(format!("h'_k does not vanish at k = {k_r}")));
            }
            if mode == 0 {
                return Err(Error::InvalidParameter("mode index must be positive".into()));
            }
            let d = mode as f64 * PI / size as f64;
            (bath.dispersion(k_r + d), (reduce_angle(k_r - d), reduce_angle(k_r + d)))
        }
    };
    let sols = local_secular_solutions(bath, params, size, e0, 24)?;
    let e = sols
        .into_iter()
        .min_by(|a, b| (a - e0).norm().total_cmp(&(b - e0).norm()))
        .ok_or(Error::NoConvergence { steps: 50, trace: vec![] })?;
    let residual = e - params.detuning - sigma_finite_sum(bath, params.coupling, size, e, 0)?.value;
    let slope = 1.0 - sigma_finite_sum_derivative(bath, params.coupling, size, e)?;
    if (residual / slope).norm() > 1e-12 * e.norm().max(1.0) {
        return Err(Error::NoConvergence { steps: 50, trace: vec![residual.norm()] });
    }
    let roots = bath.symbol_roots(e)?;
    let mut near: Vec<C64> = roots
        .roots
        .iter()
        .flat_map(|r| std::iter::repeat_n(r.y, r.multiplicity))
        .collect();
    near.sort_by(|a, b| a.norm().ln().abs().total_cmp(&b.norm().ln().abs()));
    if near.len() < 2 {
        return Err(Error::NotDegenerate("fewer than two roots near the unit circle".into()));
    }
    let mut ks: Vec<C64> = near[..2].iter().map(|y| {
        let k = -I * y.ln();
        C64::new(reduce_angle(k.re), k.im)
    }).collect();
    // pair each root with the closer base momentum
    if angle_distance(ks[0].re, bases.1) + angle_distance(ks[1].re, bases.0)
        < angle_distance(ks[0].re, bases.0) + angle_distance(ks[1].re, bases.1)
    {
        ks.swap(0, 1);
    }
    let weight = emitter_weight(bath, params, size, e);
    let mk = |k_base: f64, k_tilde: C64| ScatteringMomentum {
        k_base,
        k_tilde,
        energy: e,
        size,
        residual,
        branch_used: None,
        emitter_weight: weight,
    };
    Ok(DegeneratePair { alpha: mk(bases.0, ks[0]), gamma: mk(bases.1, ks[1]) })
}
