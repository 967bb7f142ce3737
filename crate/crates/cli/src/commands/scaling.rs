use nhscatter::selfenergy::{sigma_finite_residue, sigma_thermo};
use nhscatter::solver::{imk_leading, scattering_momentum};
use nhscatter::C64;
use rayon::prelude::*;
use serde_json::json;

use super::state::mode_for_momentum;
use super::{fit_line, Outcome};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{complex_json, fmt_complex, Table};

/// Sizes of the off-band convergence series.
pub fn offband_sizes() -> Vec<usize> {
    (1..=20).map(|i| 32 * i).collect()
}

/// Sizes of the on-band series.
pub fn onband_sizes() -> Vec<usize> {
    (1..=20).map(|i| 100 * i).collect()
}

/// Differences below this fraction of `|Sigma|` are roundoff and excluded from the monotonicity check.
pub const ROUNDOFF_FLOOR: f64 = 1e-12;

pub fn scaling(cfg: &RunConfig) -> CliResult<Outcome> {
    let bath = cfg.model().bath();
    let p = &cfg.params;
    let k = cfg.scaling_k;

    let rows = cfg
        .sizes
        .par_iter()
        .map(|&size| {
            let m = mode_for_momentum(k, size);
            let s = scattering_momentum(&bath, p, size, m)?;
            let lead = imk_leading(&bath, p, size, s.k_base)?;
            Ok((size, m, s.k_tilde, lead, (s.k_tilde.im - lead).abs()))
        })
        .collect::<Result<Vec<_>, nhscatter::error::Error>>()?;
    let mut table = Table::new("scaling", &["L", "m", "re_k", "im_k", "imk_leading", "abs_diff"]);
    table.meta("k", k);
    for &(size, m, kt, lead, d) in &rows {
        table.push(vec![size.into(), m.into(), kt.re.into(), kt.im.into(), lead.into(), d.into()]);
    }
    let usable: Vec<_> = rows.iter().filter(|r| r.4 > 0.0).collect();
    if usable.len() < 2 {
        return Err(CliError::numerical("Im k equals its leading order exactly; no slope to fit"));
    }
    let xs: Vec<f64> = usable.iter().map(|r| (r.0 as f64).ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|r| r.4.ln()).collect();
    let (slope, r2) = fit_line(&xs, &ys);
    table.meta("slope", slope).meta("r2", r2);

    let e_off = match cfg.energy {
        Some(e) => e,
        None => bath.dispersion(k) + C64::new(0.0, 0.25 * bath.scale()),
    };
    if bath.band_distance(e_off, 1 << 14) < 1e-6 * bath.scale() {
        return Err(CliError::input(format!("scaling energy {e_off} lies on the band curve")));
    }
    let thermo = sigma_thermo(&bath, p.coupling, e_off, 0, None)?.value;
    let off: Vec<C64> = offband_sizes()
        .par_iter()
        .map(|&size| sigma_finite_residue(&bath, p.coupling, size, e_off, 0).map(|s| s.value))
        .collect::<Result<_, _>>()?;
    let errors: Vec<f64> = off.iter().map(|s| (s - thermo).norm()).collect();
    let floor = ROUNDOFF_FLOOR * thermo.norm();
    let above: Vec<f64> = errors.iter().copied().take_while(|&e| e > floor).collect();
    let monotone = above.windows(2).all(|w| w[1] < w[0]);
    let mut offband = Table::new("sigma_offband", &["L", "re_sigma", "im_sigma", "abs_error"]);
    offband.meta("E", fmt_complex(e_off)).meta("sigma_thermo", fmt_complex(thermo));
    for ((size, s), e) in offband_sizes().into_iter().zip(&off).zip(&errors) {
        offband.push(vec![size.into(), s.re.into(), s.im.into(), (*e).into()]);
    }

    let e_on = bath.dispersion(k);
    let on: Vec<C64> = onband_sizes()
        .par_iter()
        .map(|&size| sigma_finite_residue(&bath, p.coupling, size, e_on, 0).map(|s| s.value))
        .collect::<Result<_, _>>()?;
    let mags: Vec<f64> = on.iter().map(|s| s.norm()).collect();
    let mean = mags.iter().sum::<f64>() / mags.len() as f64;
    let sd = (mags.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / mags.len() as f64).sqrt();
    let cv = sd / mean;
    let mut onband = Table::new("sigma_onband", &["L", "re_sigma", "im_sigma", "abs_sigma"]);
    onband.meta("E", fmt_complex(e_on)).meta("coefficient_of_variation", cv);
    for (size, s) in onband_sizes().into_iter().zip(&on) {
        onband.push(vec![size.into(), s.re.into(), s.im.into(), s.norm().into()]);
    }

    let results = json!({
        "k": k,
        "slope": slope,
        "r2": r2,
        "offband": {
            "energy": complex_json(e_off),
            "sigma_thermo": complex_json(thermo),
            "points_above_roundoff": above.len(),
            "strictly_decreasing": monotone,
        },
        "onband": {"energy": complex_json(e_on), "coefficient_of_variation": cv},
    });
    Ok(Outcome { tables: vec![table, offband, onband], results, passed: true })
}
