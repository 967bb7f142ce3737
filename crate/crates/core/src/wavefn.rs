//! Photon wavefunctions on the finite ring.
//!
//! Amplitudes follow `psi(x) = L^{-1/2} sum_k c_k e^{ikx}` with `c_k = J c_e / (E - h_k)`,
//! so the normalized state vector is `(c_e, psi / sqrt(L))`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64 as C64;

use crate::bath::{angle_distance, BathSpec};
use crate::error::{Error, Result};
use crate::selfenergy::{reduce_site, window, Branch, FiniteResidue, ThermoEvaluator};
use crate::solver::{
    emitter_green_at_momentum, secular_scale, DegeneratePair, EmitterParams, FineTunedPoints,
    FINE_TUNED_RADIUS,
};

const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Clone, Debug, PartialEq)]
pub struct WaveFunction {
    /// `psi(x)` for `x` in the lattice window, starting at `-floor(L/2)`.
    pub amplitudes: Vec<C64>,
    pub c_e: C64,
    pub size: usize,
    pub normalized: bool,
    pub energy: C64,
    pub k_tilde: Option<C64>,
    pub branch: Option<Branch>,
    /// Plane-wave coefficients `(k, c_k)` of an emitter-free superposition.
    pub plane_waves: Vec<(f64, C64)>,
}

impl WaveFunction {
    fn new(amplitudes: Vec<C64>, c_e: C64, energy: C64) -> Self {
        let size = amplitudes.len();
        Self {
            amplitudes,
            c_e,
            size,
            normalized: false,
            energy,
            k_tilde: None,
            branch: None,
            plane_waves: Vec::new(),
        }
    }

    fn from_fn(size: usize, c_e: C64, energy: C64, mut f: impl FnMut(i64) -> Result<C64>) -> Result<Self> {
        let (lo, hi) = window(size);
        let amps = (lo..=hi).map(&mut f).collect::<Result<Vec<_>>>()?;
        Ok(Self::new(amps, c_e, energy))
    }

    pub fn sites(&self) -> impl Iterator<Item = i64> {
        let (lo, hi) = window(self.size);
        lo..=hi
    }

    /// `psi(x)` with `x` taken mod `L`.
    pub fn at(&self, x: i64) -> C64 {
        let (lo, _) = window(self.size);
        self.amplitudes[(reduce_site(x, self.size) - lo) as usize]
    }

    /// `|c_e|^2 + L^{-1} sum_x |psi(x)|^2`.
    pub fn weight(&self) -> f64 {
        let s: f64 = self.amplitudes.iter().map(|a| a.norm_sqr()).sum();
        self.c_e.norm_sqr() + s / self.size as f64
    }

    /// `(c_e, psi / sqrt(L))` in the emitter-then-sites basis.
    pub fn state_vector(&self) -> Vec<C64> {
        let r = 1.0 / (self.size as f64).sqrt();
        std::iter::once(self.c_e).chain(self.amplitudes.iter().map(|a| a * r)).collect()
    }

    /// `psi / (sqrt(L) c_e)`, independent of the overall scale of the state.
    pub fn profile(&self) -> Result<Vec<C64>> {
        if self.c_e.norm() == 0.0 {
            return Err(Error::ZeroState);
        }
        let d = self.c_e * (self.size as f64).sqrt();
        Ok(self.amplitudes.iter().map(|a| a / d).collect())
    }

    pub fn write_csv<W: Write>(&self, out: &mut W, meta: &[(&str, String)]) -> std::io::Result<()> {
        for (k, v) in meta {
            writeln!(out, "# {k} = {v}")?;
        }
        writeln!(out, "# L = {}", self.size)?;
        writeln!(out, "# E = {:.16e},{:.16e}", self.energy.re, self.energy.im)?;
        if let Some(k) = self.k_tilde {
            writeln!(out, "# k_tilde = {:.16e},{:.16e}", k.re, k.im)?;
        }
        if let Some(b) = self.branch {
            writeln!(out, "# branch = {b}")?;
        }
        writeln!(out, "# c_e = {:.16e},{:.16e}", self.c_e.re, self.c_e.im)?;
        writeln!(out, "# normalized = {}", self.normalized)?;
        writeln!(out, "x,re_psi,im_psi,abs_psi")?;
        for (x, a) in self.sites().zip(&self.amplitudes) {
            writeln!(out, "{x},{:.16e},{:.16e},{:.16e}", a.re, a.im, a.norm())?;
        }
        Ok(())
    }
}

/// Rescales by a positive factor so that `|c_e|^2 + L^{-1} sum_x |psi|^2 = 1`.
pub fn normalize(wf: &WaveFunction) -> Result<WaveFunction> {
    let w = wf.weight();
    if !(w.is_finite() && w > 0.0) {
        return Err(Error::ZeroState);
    }
    let s = 1.0 / w.sqrt();
    let mut out = wf.clone();
    out.amplitudes.iter_mut().for_each(|a| *a *= s);
    out.c_e *= s;
    out.plane_waves.iter_mut().for_each(|p| p.1 *= s);
    out.normalized = true;
    Ok(out)
}

/// Exact finite-size eigenstate `psi(x) = sqrt(L) c_e Sigma_x^(L)(E) / J`.
pub fn formal_wavefunction(
    bath: &BathSpec,
    params: &EmitterParams,
    size: usize,
    energy: C64,
    c_e: C64,
) -> Result<WaveFunction> {
    params.require_coupling()?;
    let fr = FiniteResidue::new(bath, params.coupling, size, energy)?;
    let f = energy - params.detuning - fr.at(0)?.value;
    if f.norm() > 1e-8 * secular_scale(bath, params, energy) {
        return Err(Error::InvalidParameter(format!(
            "E = {energy} does not solve the finite-size secular equation (residual {:.3e})",
            f.norm()
        )));
    }
    let pre = c_e * (size as f64).sqrt() / params.coupling;
    WaveFunction::from_fn(size, c_e, energy, |x| Ok(pre * fr.at(x)?.value))
}

fn check_generic(bath: &BathSpec, k: C64) -> Result<()> {
    if FineTunedPoints::of(bath).near(k.re, FINE_TUNED_RADIUS) {
        return Err(Error::FineTunedInput { k: k.re });
    }
    Ok(())
}

fn tag(mut wf: WaveFunction, k: C64, branch: Branch) -> WaveFunction {
    wf.k_tilde = Some(k);
    wf.branch = Some(branch);
    wf
}

/// Lippmann-Schwinger form `e^{ik x} + G_e Sigma_x` built from the chosen branch,
/// with `c_e = J G_e / sqrt(L)`.
pub fn ls_wavefunction(
    bath: &BathSpec,
    params: &EmitterParams,
    size: usize,
    k_tilde: C64,
    branch: Branch,
) -> Result<WaveFunction> {
    check_generic(bath, k_tilde)?;
    let ev = ThermoEvaluator::at_momentum(bath, params.coupling, k_tilde, branch)?;
    let g = emitter_green_at_momentum(bath, params, k_tilde, branch, None)?;
    let c_e = params.coupling * g / (size as f64).sqrt();
    let wf = WaveFunction::from_fn(size, c_e, ev.energy(), |x| {
        Ok((I * k_tilde * x as f64).exp() + g * ev.at(x)?.value)
    })?;
    Ok(tag(wf, k_tilde, branch))
}

fn log_power(base: C64, e: f64) -> C64 {
    (base.ln() * e).exp()
}

/// Largest `e^{-(L/2) |ln|y||}` over the roots of `E = h(y)` other than `e^{ik}`.
/// The closed forms drop the terms of these roots, whose relative size peaks at the
/// window edge `|x| = L/2`, so their error is of this size.
pub fn neglected_root_weight(bath: &BathSpec, k_tilde: C64, energy: C64, size: usize) -> Result<f64> {
    let y0 = (I * k_tilde).exp();
    let mut ys: Vec<C64> = bath
        .symbol_roots(energy)?
        .roots
        .iter()
        .flat_map(|r| std::iter::repeat_n(r.y, r.multiplicity))
        .collect();
    let i = (0..ys.len())
        .min_by(|&a, &b| (ys[a] - y0).norm().total_cmp(&(ys[b] - y0).norm()))
        .ok_or(Error::DegenerateBath)?;
    ys.remove(i);
    Ok(ys.iter().map(|y| (-(size as f64) / 2.0 * y.norm().ln().abs()).exp()).fold(0.0, f64::max))
}

/// Closed-form scattering state of the Hatano-Nelson bath
/// `h_{-1} = -(u - kappa/2)`, `h_1 = -(u + kappa/2)`.
pub fn hn_closed_form(
    u: f64,
    kappa: f64,
    params: &EmitterParams,
    size: usize,
    k_tilde: C64,
    branch: Branch,
) -> Result<WaveFunction> {
    if kappa == 0.0 {
        return Err(Error::HermitianLimit);
    }
    let a = u - kappa / 2.0;
    let b = u + kappa / 2.0;
    if a == 0.0 || b == 0.0 {
        return Err(Error::InvalidParameter("unidirectional Hatano-Nelson bath".into()));
    }
    let (j2, delta_e) = (params.coupling * params.coupling, params.detuning);
    let e1 = (I * k_tilde).exp();
    let delta = a * e1 - b / e1;
    let h = -a * e1 - b / e1;
    let r = C64::new(a / b, 0.0);
    let t = j2 / delta;
    let wave = |x: i64| (I * k_tilde * x as f64).exp();
    let back = |x: i64| log_power(r, -(x as f64)) * (-I * k_tilde * x as f64).exp();
    let (g, amps): (C64, Box<dyn Fn(i64) -> C64>) = match branch {
        Branch::Greater => {
            let g = green(h - delta_e - t)?;
            (g, Box::new(move |x| if x >= 0 { wave(x) * (1.0 + g * t) } else { wave(x) + g * t * back(x) }))
        }
        Branch::Less => {
            let g = green(h - delta_e)?;
            (g, Box::new(move |x| if x >= 0 { wave(x) } else { wave(x) + g * t * (back(x) - wave(x)) }))
        }
    };
    let c_e = params.coupling * g / (size as f64).sqrt();
    let wf = WaveFunction::from_fn(size, c_e, h, |x| Ok(amps(x)))?;
    Ok(tag(wf, k_tilde, branch))
}

fn green(d: C64) -> Result<C64> {
    if d.norm() == 0.0 {
        return Err(Error::AtPole { z: d });
    }
    Ok(1.0 / d)
}

/// Momentum region of the next-nearest-neighbour bath: `K1` for
/// `|Re k| < arccos(-kappa / 2 kappa')`, where the off-circle root lies inside.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    K1,
    K2,
}

impl Region {
    pub fn name(self) -> &'static str {
        match self {
            Region::K1 => "k1",
            Region::K2 => "k2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "k1" => Some(Region::K1),
            "k2" => Some(Region::K2),
            _ => None,
        }
    }

    /// Region containing `Re k`, or `None` within the exclusion radius of `k_SI`.
    pub fn of(kappa: f64, kappa_p: f64, re_k: f64) -> Option<Self> {
        let c = -kappa / (2.0 * kappa_p);
        if c.abs() < 1.0 {
            let ksi = c.acos();
            if angle_distance(re_k.abs(), ksi) < FINE_TUNED_RADIUS {
                return None;
            }
        }
        let w = kappa + kappa_p * C64::from_polar(1.0, -re_k);
        Some(if kappa_p.abs() < w.norm() { Region::K1 } else { Region::K2 })
    }
}

/// Closed-form scattering state of the bath `h_1 = -kappa`, `h_2 = -kappa'`.
pub fn nnn_closed_form(
    kappa: f64,
    kappa_p: f64,
    params: &EmitterParams,
    size: usize,
    k_tilde: C64,
    region: Region,
    branch: Branch,
) -> Result<WaveFunction> {
    if kappa_p == 0.0 {
        return Err(Error::InvalidParameter("kappa' must be nonzero".into()));
    }
    let actual = Region::of(kappa, kappa_p, k_tilde.re).ok_or(Error::FineTunedInput { k: k_tilde.re })?;
    if actual != region {
        return Err(Error::RegionMismatch { given: region.name().into(), re_k: k_tilde.re });
    }
    let (j2, delta_e) = (params.coupling * params.coupling, params.detuning);
    let em = (-I * k_tilde).exp();
    let e1 = 1.0 / em;
    let delta = kappa + 2.0 * kappa_p * em;
    let w = kappa + kappa_p * em;
    let y = -kappa_p / w;
    let h = -kappa * em - kappa_p * em * em;
    let t = j2 / delta;
    let wave = |x: i64| (I * k_tilde * x as f64).exp();
    let shifted = move |x: i64| (I * k_tilde * (x + 1) as f64).exp();
    let ev = move |x: i64| log_power(y, (x + 1) as f64);
    let (g, amps): (C64, Box<dyn Fn(i64) -> C64>) = match (region, branch) {
        (Region::K1, Branch::Greater) => {
            let g = green(h - delta_e + j2 * e1 / w)?;
            (g, Box::new(move |x| if x >= 0 { wave(x) + g * t * (ev(x) - shifted(x)) } else { wave(x) }))
        }
        (Region::K1, Branch::Less) => {
            let g = green(h - delta_e + j2 * kappa_p / (delta * w))?;
            (g, Box::new(move |x| if x >= 0 { wave(x) + g * t * ev(x) } else { wave(x) + g * t * shifted(x) }))
        }
        (Region::K2, Branch::Greater) => {
            let g = green(h - delta_e + j2 * e1 / delta)?;
            (g, Box::new(move |x| if x >= 0 { wave(x) - g * t * shifted(x) } else { wave(x) - g * t * ev(x) }))
        }
        (Region::K2, Branch::Less) => {
            let g = green(h - delta_e)?;
            (g, Box::new(move |x| if x >= 0 { wave(x) } else { wave(x) + g * t * (shifted(x) - ev(x)) }))
        }
    };
    let c_e = params.coupling * g / (size as f64).sqrt();
    let wf = WaveFunction::from_fn(size, c_e, h, |x| Ok(amps(x)))?;
    Ok(tag(wf, k_tilde, branch))
}

// y^x / (1 - y^L) for x >= 0 and y^x / (y^{-L} - 1) for x < 0, without overflow.
fn ring_weight(y: C64, x: i64, size: usize) -> C64 {
    let l = size as f64;
    let ln = y.ln();
    if ln.re <= 0.0 {
        let tail = (ln * l).exp();
        if x >= 0 {
            (ln * x as f64).exp() / (1.0 - tail)
        } else {
            (ln * (x as f64 + l)).exp() / (1.0 - tail)
        }
    } else {
        let tail = (-ln * l).exp();
        if x >= 0 {
            -(ln * (x as f64 - l)).exp() / (1.0 - tail)
        } else {
            -(ln * x as f64).exp() / (1.0 - tail)
        }
    }
}

/// Superposition of the two near-circle momenta of a fine-tuned state,
/// plus the evanescent contributions of any remaining roots of `E = h(y)`.
/// The emitter amplitude is fixed to one before normalization.
pub fn degenerate_wavefunction(
    bath: &BathSpec,
    params: &EmitterParams,
    size: usize,
    pair: &DegeneratePair,
) -> Result<WaveFunction> {
    params.require_coupling()?;
    let energy = pair.energy();
    let roots = bath.symbol_roots(energy)?;
    let ya = (I * pair.alpha.k_tilde).exp();
    let yg = (I * pair.gamma.k_tilde).exp();
    let mut ys = vec![ya, yg];
    let mut rest: Vec<C64> = roots
        .roots
        .iter()
        .flat_map(|r| std::iter::repeat_n(r.y, r.multiplicity))
        .collect();
    for y in [ya, yg] {
        if let Some(i) = rest.iter().enumerate().min_by(|a, b| (a.1 - y).norm().total_cmp(&(b.1 - y).norm())).map(|p| p.0) {
            rest.swap_remove(i);
        }
    }
    if roots.roots.iter().any(|r| r.multiplicity > 1) {
        return Err(Error::FineTunedInput { k: pair.alpha.k_tilde.re });
    }
    ys.extend(rest);
    let j = params.coupling;
    let sl = (size as f64).sqrt();
    // J / (i h'_k) with h'_k = i y h'(y)
    let weights: Vec<C64> = ys.iter().map(|&y| -j / (y * bath.symbol_derivative(y))).collect();
    let mut wf = WaveFunction::from_fn(size, C64::new(1.0, 0.0), energy, |x| {
        Ok(sl * ys.iter().zip(&weights).map(|(&y, &w)| w * ring_weight(y, x, size)).sum::<C64>())
    })?;
    wf.k_tilde = Some(pair.alpha.k_tilde);
    Ok(wf)
}

/// Emitter-free states spanned by plane waves degenerate at `E`, one per
/// vector of an orthonormal basis of the hyperplane `sum c_k = 0`.
pub fn plane_wave_superposition(bath: &BathSpec, size: usize, energy: C64) -> Result<Vec<WaveFunction>> {
    let band = bath.finite_band(size);
    let tol = 1e-12 * bath.scale().max(energy.norm());
    let ks: Vec<f64> = band
        .iter()
        .enumerate()
        .filter(|(_, h)| (*h - energy).norm() <= tol)
        .map(|(i, _)| 2.0 * PI * (i + 1) as f64 / size as f64)
        .collect();
    if ks.len() < 2 {
        return Err(Error::NotDegenerate(format!("{} momenta share E = {energy}", ks.len())));
    }
    let l = size as f64;
    let mut out = Vec::new();
    for n in 1..ks.len() {
        // Helmert basis vector: n entries of 1, then -n, scaled to unit norm
        let s = 1.0 / ((n * (n + 1)) as f64).sqrt();
        let coeffs: Vec<(f64, C64)> = ks[..=n]
            .iter()
            .enumerate()
            .map(|(i, &k)| (k, C64::new(if i < n { s } else { -(n as f64) * s }, 0.0)))
            .collect();
        let mut wf = WaveFunction::from_fn(size, C64::new(0.0, 0.0), energy, |x| {
            Ok(coeffs.iter().map(|(k, c)| c * C64::from_polar(1.0, k * x as f64)).sum::<C64>() / l.sqrt())
        })?;
        wf.plane_waves = coeffs;
        out.push(wf);
    }
    Ok(out)
}
