use std::f64::consts::PI;

use nhscatter::oracle::StateClass;
use nhscatter::solver::bound_states;
use serde_json::json;

use super::{diagonalize, Outcome};
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::output::{complex_json, Cell, Table};

pub const BAND_SAMPLES: usize = 2048;

pub fn spectrum(cfg: &RunConfig) -> CliResult<Outcome> {
    let bath = cfg.model().bath();
    let size = cfg.size();
    let ed = diagonalize(cfg, &bath, size)?;

    let mut spec = Table::new(
        "spectrum",
        &["index", "re_E", "im_E", "class", "loc_length", "band_distance", "residual"],
    );
    spec.meta("L", size).meta("boundary", cfg.boundary.name());
    for i in 0..ed.len() {
        let e = ed.eigenvalues[i];
        spec.push(vec![
            i.into(),
            e.re.into(),
            e.im.into(),
            ed.classes[i].name().into(),
            ed.loc_lengths[i].into(),
            ed.band_distances[i].into(),
            ed.residuals[i].into(),
        ]);
    }

    let mut band = Table::new("band", &["k", "re_h", "im_h"]);
    band.meta("samples", BAND_SAMPLES);
    for j in 0..BAND_SAMPLES {
        let k = -PI + 2.0 * PI * j as f64 / BAND_SAMPLES as f64;
        let h = bath.dispersion(k);
        band.push(vec![k.into(), h.re.into(), h.im.into()]);
    }

    let bound = bound_states(&bath, &cfg.params);
    let mut markers = Table::new(
        "bound_markers",
        &["re_E", "im_E", "re_k", "im_k", "kind", "ed_index", "ed_distance"],
    );
    for b in &bound {
        let i = ed.nearest(b.energy);
        markers.push(vec![
            b.energy.re.into(),
            b.energy.im.into(),
            b.k_tilde.re.into(),
            b.k_tilde.im.into(),
            b.kind.name().into(),
            i.into(),
            Cell::from((ed.eigenvalues[i] - b.energy).norm()),
        ]);
    }

    let max_residual = ed.residuals.iter().fold(0.0f64, |a, &b| a.max(b));
    let results = json!({
        "eigenvalues": ed.len(),
        "counts": {
            "scattering": ed.count(StateClass::Scattering),
            "bound": ed.count(StateClass::Bound),
            "degenerate_family": ed.count(StateClass::DegenerateFamily),
        },
        "solver_bound_states": bound.len(),
        "bound_energies": bound.iter().map(|b| complex_json(b.energy)).collect::<Vec<_>>(),
        "max_residual": max_residual,
        "band_samples": BAND_SAMPLES,
    });
    Ok(Outcome { tables: vec![spec, band, markers], results, passed: true })
}
