//! Exact diagonalization of the single-excitation Hamiltonian.
//!
//! Basis index 0 is the emitter; site `x` of the window sits at `1 + x + floor(L/2)`.

use std::io::Write;

use num_complex::Complex64 as C64;

use crate::bath::BathSpec;
use crate::error::{Error, Result};
use crate::linalg::{dot, eig, norm2, CMatrix};
use crate::selfenergy::window;
use crate::solver::{EmitterParams, FineTunedPoints};
use crate::wavefn::WaveFunction;

pub const DEFAULT_MAX_DIM: usize = 2048;
pub const BAND_SAMPLES: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Pbc,
    Obc,
}

impl Boundary {
    pub fn name(self) -> &'static str {
        match self {
            Boundary::Pbc => "pbc",
            Boundary::Obc => "obc",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pbc" => Some(Boundary::Pbc),
            "obc" => Some(Boundary::Obc),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LatticeHamiltonian {
    pub matrix: CMatrix,
    pub boundary: Boundary,
    pub bath: BathSpec,
    pub params: EmitterParams,
    pub size: usize,
}

impl LatticeHamiltonian {
    pub fn dimension(&self) -> usize {
        self.size + 1
    }
}

pub fn site_index(x: i64, size: usize) -> usize {
    (1 + x + (size / 2) as i64) as usize
}

pub fn build_hamiltonian(
    bath: &BathSpec,
    params: &EmitterParams,
    size: usize,
    boundary: Boundary,
) -> Result<LatticeHamiltonian> {
    if size < bath.left_range() + bath.right_range() + 1 {
        return Err(Error::InvalidParameter(format!("L = {size} is smaller than p + q + 1")));
    }
    let mut m = CMatrix::zeros(size + 1);
    m[(0, 0)] = C64::new(params.detuning, 0.0);
    let origin = site_index(0, size);
    m[(0, origin)] = C64::new(params.coupling, 0.0);
    m[(origin, 0)] = C64::new(params.coupling, 0.0);
    let l = size as i64;
    for a in 0..l {
        for (n, h) in bath.hoppings() {
            let b = a - n;
            let b = match boundary {
                Boundary::Pbc => b.rem_euclid(l),
                Boundary::Obc if (0..l).contains(&b) => b,
                Boundary::Obc => continue,
            };
            m[(1 + a as usize, 1 + b as usize)] += h;
        }
    }
    Ok(LatticeHamiltonian { matrix: m, boundary, bath: bath.clone(), params: *params, size })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateClass {
    Scattering,
    Bound,
    DegenerateFamily,
}

impl StateClass {
    pub fn name(self) -> &'static str {
        match self {
            StateClass::Scattering => "scattering",
            StateClass::Bound => "bound",
            StateClass::DegenerateFamily => "degenerate_family",
        }
    }
}

#[derive(Clone, Debug)]
pub struct EDResult {
    pub eigenvalues: Vec<C64>,
    /// Unit-norm right eigenvectors in the emitter-then-sites basis.
    pub vectors: Vec<Vec<C64>>,
    pub residuals: Vec<f64>,
    pub classes: Vec<StateClass>,
    /// Participation number `(sum |v|^2)^2 / sum |v|^4` of each eigenvector.
    pub loc_lengths: Vec<f64>,
    pub band_distances: Vec<f64>,
    pub size: usize,
}

impl EDResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn count(&self, class: StateClass) -> usize {
        self.classes.iter().filter(|c| **c == class).count()
    }

    /// Index of the eigenvalue closest to `z`.
    pub fn nearest(&self, z: C64) -> usize {
        (0..self.len())
            .min_by(|&a, &b| (self.eigenvalues[a] - z).norm().total_cmp(&(self.eigenvalues[b] - z).norm()))
            .unwrap_or(0)
    }

    /// Eigenvector `i` as a wavefunction with the same scaling as the state vector.
    pub fn wavefunction(&self, i: usize) -> WaveFunction {
        let v = &self.vectors[i];
        let sl = (self.size as f64).sqrt();
        WaveFunction {
            amplitudes: v[1..].iter().map(|a| a * sl).collect(),
            c_e: v[0],
            size: self.size,
            normalized: true,
            energy: self.eigenvalues[i],
            k_tilde: None,
            branch: None,
            plane_waves: Vec::new(),
        }
    }

    pub fn write_spectrum_csv<W: Write>(&self, out: &mut W, meta: &[(&str, String)]) -> std::io::Result<()> {
        for (k, v) in meta {
            writeln!(out, "# {k} = {v}")?;
        }
        writeln!(out, "re_E,im_E,class,loc_length")?;
        for i in 0..self.len() {
            let e = self.eigenvalues[i];
            writeln!(out, "{:.16e},{:.16e},{},{:.16e}", e.re, e.im, self.classes[i].name(), self.loc_lengths[i])?;
        }
        Ok(())
    }
}

pub fn eigenpairs(h: &LatticeHamiltonian) -> Result<EDResult> {
    eigenpairs_with_max(h, DEFAULT_MAX_DIM)
}

pub fn eigenpairs_with_max(h: &LatticeHamiltonian, max_dim: usize) -> Result<EDResult> {
    let dim = h.dimension();
    if dim > max_dim {
        return Err(Error::DimensionTooLarge { dim, max: max_dim });
    }
    let e = eig(&h.matrix)?;
    let residuals = e
        .values
        .iter()
        .zip(&e.vectors)
        .map(|(lam, v)| {
            let hv = h.matrix.matvec(v);
            let r: Vec<C64> = hv.iter().zip(v).map(|(a, b)| a - lam * b).collect();
            norm2(&r) / norm2(v)
        })
        .collect();
    let loc_lengths = e.vectors.iter().map(|v| participation(v)).collect();
    let band_distances = e.values.iter().map(|z| h.bath.band_distance(*z, BAND_SAMPLES)).collect();
    Ok(EDResult {
        classes: vec![StateClass::Scattering; dim],
        eigenvalues: e.values,
        vectors: e.vectors,
        residuals,
        loc_lengths,
        band_distances,
        size: h.size,
    })
}

fn participation(v: &[C64]) -> f64 {
    let s2: f64 = v.iter().map(|a| a.norm_sqr()).sum();
    let s4: f64 = v.iter().map(|a| a.norm_sqr() * a.norm_sqr()).sum();
    if s4 == 0.0 { 0.0 } else { s2 * s2 / s4 }
}

/// Median distance between consecutive points of the finite band.
pub fn median_spacing(bath: &BathSpec, size: usize) -> f64 {
    let band = bath.finite_band(size);
    let mut d: Vec<f64> = (0..band.len()).map(|i| (band[(i + 1) % band.len()] - band[i]).norm()).collect();
    d.sort_by(f64::total_cmp);
    d[d.len() / 2]
}

/// Flags states far from the band curve and spatially compact as bound, and
/// non-bound states at the energy of a fine-tuned point as a degenerate family.
pub fn classify_states(ed: &EDResult, bath: &BathSpec) -> EDResult {
    let spacing = median_spacing(bath, ed.size);
    let fine = FineTunedPoints::of(bath).energies(bath);
    let mut out = ed.clone();
    for i in 0..ed.len() {
        let e = ed.eigenvalues[i];
        out.classes[i] = if ed.band_distances[i] > 10.0 * spacing && ed.loc_lengths[i] < ed.size as f64 / 10.0 {
            StateClass::Bound
        } else if fine.iter().any(|f| (f - e).norm() < spacing) {
            StateClass::DegenerateFamily
        } else {
            StateClass::Scattering
        };
    }
    out
}

/// Complex `alpha` minimizing `|alpha v_ed - v|` and the relative error `|alpha v_ed - v| / |v|`.
pub fn align(v_ed: &[C64], v: &[C64]) -> Result<(C64, f64)> {
    if v_ed.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: v_ed.len(), got: v.len() });
    }
    let nn = dot(v_ed, v_ed);
    if nn.norm() == 0.0 || norm2(v) == 0.0 {
        return Err(Error::ZeroState);
    }
    let alpha = dot(v_ed, v) / nn;
    let r: Vec<C64> = v_ed.iter().zip(v).map(|(a, b)| alpha * a - b).collect();
    Ok((alpha, norm2(&r) / norm2(v)))
}

pub fn match_state(ed: &EDResult, index: usize, wf: &WaveFunction) -> Result<(C64, f64)> {
    if index >= ed.len() {
        return Err(Error::InvalidParameter(format!("state index {index} out of range")));
    }
    align(&ed.vectors[index], &wf.state_vector())
}

/// `|(H - E) v| / |v|` for the state vector of `wf`.
pub fn eigen_residual(h: &LatticeHamiltonian, wf: &WaveFunction) -> Result<f64> {
    let v = wf.state_vector();
    if v.len() != h.dimension() {
        return Err(Error::DimensionMismatch { expected: h.dimension(), got: v.len() });
    }
    let hv = h.matrix.matvec(&v);
    let r: Vec<C64> = hv.iter().zip(&v).map(|(a, b)| a - wf.energy * b).collect();
    Ok(norm2(&r) / norm2(&v))
}

/// Mean `|x|` of the site weight of a unit vector, ignoring the emitter.
pub fn mean_abs_position(v: &[C64], size: usize) -> f64 {
    let (lo, hi) = window(size);
    let w: f64 = v[1..].iter().map(|a| a.norm_sqr()).sum();
    (lo..=hi).zip(&v[1..]).map(|(x, a)| x.abs() as f64 * a.norm_sqr()).sum::<f64>() / w
}
