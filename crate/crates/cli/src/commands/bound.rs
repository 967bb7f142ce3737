use nhscatter::solver::bound_states;
use serde_json::json;

use super::{diagonalize, Outcome};
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::output::{complex_json, Table};

pub fn bound(cfg: &RunConfig) -> CliResult<Outcome> {
    let bath = cfg.model().bath();
    let size = cfg.size();
    let states = bound_states(&bath, &cfg.params);
    let ed = diagonalize(cfg, &bath, size)?;

    let mut table = Table::new(
        "bound",
        &[
            "re_k", "im_k", "re_E", "im_E", "branch", "branches", "winding", "kind", "re_E_ed", "im_E_ed",
            "ed_distance",
        ],
    );
    table.meta("L", size).meta("boundary", cfg.boundary.name());
    let mut rows = Vec::new();
    for b in &states {
        let e_ed = ed.eigenvalues[ed.nearest(b.energy)];
        let branches: Vec<&str> = b.pole_branches.iter().map(|br| br.symbol()).collect();
        table.push(vec![
            b.k_tilde.re.into(),
            b.k_tilde.im.into(),
            b.energy.re.into(),
            b.energy.im.into(),
            b.pole_branch.symbol().into(),
            branches.join("|").into(),
            b.region_winding.into(),
            b.kind.name().into(),
            e_ed.re.into(),
            e_ed.im.into(),
            (e_ed - b.energy).norm().into(),
        ]);
        rows.push(json!({
            "k_tilde": complex_json(b.k_tilde),
            "energy": complex_json(b.energy),
            "branch": b.pole_branch.symbol(),
            "winding": b.region_winding,
            "kind": b.kind.name(),
            "ed_energy": complex_json(e_ed),
            "ed_distance": (e_ed - b.energy).norm(),
        }));
    }
    let results = json!({"count": states.len(), "states": rows});
    Ok(Outcome { tables: vec![table], results, passed: true })
}
