use std::f64::consts::PI;

use nhscatter::bath::reduce_angle;
use nhscatter::oracle::{match_state, Boundary};
use nhscatter::selfenergy::window;
use nhscatter::solver::{degenerate_momenta, scattering_momentum, FineTunedTarget};
use nhscatter::wavefn::{
    degenerate_wavefunction, formal_wavefunction, hn_closed_form, ls_wavefunction, nnn_closed_form, normalize,
    Region, WaveFunction,
};
use nhscatter::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::{correlation, diagonalize, Outcome};
use crate::config::{Form, Model, RunConfig, StateMode};
use crate::error::{CliError, CliResult};
use crate::output::{complex_json, fmt_complex, Table};

/// Mode index in `1..=L` whose base momentum `2 pi m / L` is closest to `k`.
pub fn mode_for_momentum(k: f64, size: usize) -> usize {
    let m = (reduce_angle(k) * size as f64 / (2.0 * PI)).round() as i64;
    let m = m.rem_euclid(size as i64) as usize;
    if m == 0 {
        size
    } else {
        m
    }
}

/// Rejects models without closed forms before any solve is attempted.
pub fn closed_form_applies(model: &Model) -> CliResult<()> {
    match model {
        Model::HatanoNelson { kappa, .. } if *kappa == 0.0 => Err(nhscatter::error::Error::HermitianLimit.into()),
        Model::Custom { .. } => Err(CliError::input("closed forms exist only for the hn and nnn models")),
        _ => Ok(()),
    }
}

struct Analytic {
    wf: WaveFunction,
    label: String,
    extra: Value,
    /// Reference profile on the ring, compared by correlation.
    template: Option<Vec<C64>>,
}

fn scattering(cfg: &RunConfig, m: usize) -> CliResult<Analytic> {
    let bath = cfg.model().bath();
    let size = cfg.size();
    let p = &cfg.params;
    let form = cfg.form.unwrap_or(match cfg.model() {
        Model::Custom { .. } => Form::Ls,
        _ => Form::Closed,
    });
    if form == Form::Closed {
        closed_form_applies(cfg.model())?;
    }
    let s = scattering_momentum(&bath, p, size, m)?;
    let wf = match form {
        Form::Closed => match cfg.model() {
            Model::HatanoNelson { u, kappa } => hn_closed_form(*u, *kappa, p, size, s.k_tilde, cfg.branch)?,
            Model::Nnn { kappa, kappa_p } => {
                let region = Region::of(*kappa, *kappa_p, s.k_tilde.re)
                    .ok_or(nhscatter::error::Error::FineTunedInput { k: s.k_tilde.re })?;
                nnn_closed_form(*kappa, *kappa_p, p, size, s.k_tilde, region, cfg.branch)?
            }
            Model::Custom { .. } => {
                return Err(CliError::input("closed forms exist only for the hn and nnn models"));
            }
        },
        Form::Ls => ls_wavefunction(&bath, p, size, s.k_tilde, cfg.branch)?,
        Form::Formal => formal_wavefunction(&bath, p, size, s.energy, C64::new(1.0, 0.0))?,
    };
    Ok(Analytic {
        wf,
        label: format!("{} (m = {m})", form.name()),
        extra: json!({
            "m": m,
            "form": form.name(),
            "branch": cfg.branch.symbol(),
            "k_tilde": complex_json(s.k_tilde),
            "k_base": s.k_base,
            "secular_residual": s.residual.norm(),
        }),
        template: None,
    })
}

fn degenerate(cfg: &RunConfig, target: FineTunedTarget) -> CliResult<Analytic> {
    let bath = cfg.model().bath();
    let size = cfg.size();
    let pair = degenerate_momenta(&bath, &cfg.params, size, &target)?;
    let wf = degenerate_wavefunction(&bath, &cfg.params, size, &pair)?;
    let mut extra = json!({
        "k_alpha": complex_json(pair.alpha.k_tilde),
        "k_gamma": complex_json(pair.gamma.k_tilde),
    });
    let (label, template) = match target {
        FineTunedTarget::SelfIntersection(si) => {
            extra["self_intersection"] = json!({"k1": si.k_pair.0, "k2": si.k_pair.1, "energy": complex_json(si.energy)});
            ("self-intersection".to_string(), None)
        }
        FineTunedTarget::SecondOrderPole { k_r, mode } => {
            extra["k_r"] = json!(k_r);
            extra["mode"] = json!(mode);
            let (lo, hi) = window(size);
            // e^{i k_r x} sin(m pi x / L) on the ring coordinate x mod L
            let f: Vec<C64> = (lo..=hi)
                .map(|x| x.rem_euclid(size as i64) as f64)
                .map(|x| C64::from_polar(1.0, k_r * x) * (mode as f64 * PI * x / size as f64).sin())
                .collect();
            (format!("second-order pole mode {mode}"), Some(f))
        }
    };
    Ok(Analytic { wf, label, extra, template })
}

pub fn state(cfg: &RunConfig) -> CliResult<Outcome> {
    if cfg.boundary != Boundary::Pbc {
        return Err(CliError::input("state comparison needs periodic boundaries"));
    }
    let bath = cfg.model().bath();
    let size = cfg.size();
    let analytic = match cfg.mode {
        StateMode::Index(m) if m > size => return Err(CliError::input(format!("mode {m} outside 1..={size}"))),
        StateMode::Index(m) => scattering(cfg, m)?,
        StateMode::Momentum(k) => scattering(cfg, mode_for_momentum(k, size))?,
        StateMode::Random => scattering(cfg, ChaCha8Rng::seed_from_u64(cfg.seed).gen_range(1..=size))?,
        StateMode::SelfIntersection(n) => {
            let sis = bath.self_intersections();
            let si = *sis.get(n).ok_or_else(|| {
                CliError::input(format!("self-intersection {n} requested, band curve has {}", sis.len()))
            })?;
            degenerate(cfg, FineTunedTarget::SelfIntersection(si))?
        }
        StateMode::SecondOrder { mode, k_r } => {
            let k_r = match k_r {
                Some(k) => k,
                None => *bath
                    .stationary_points()
                    .first()
                    .ok_or_else(|| CliError::input("band has no point of vanishing group velocity"))?,
            };
            degenerate(cfg, FineTunedTarget::SecondOrderPole { k_r, mode })?
        }
    };

    let wf = normalize(&analytic.wf)?;
    let ed = diagonalize(cfg, &bath, size)?;
    let idx = ed.nearest(wf.energy);
    let (alpha, rel_err) = match_state(&ed, idx, &wf)?;
    let aligned: Vec<C64> = ed.vectors[idx].iter().map(|a| alpha * a).collect();
    let exact = wf.state_vector();

    let mut table = Table::new(
        "state",
        &["x", "re_ed", "im_ed", "re_analytic", "im_analytic", "abs_deviation"],
    );
    table
        .meta("L", size)
        .meta("analytic", &analytic.label)
        .meta("E", fmt_complex(wf.energy))
        .meta("E_ed", fmt_complex(ed.eigenvalues[idx]))
        .meta("alpha", fmt_complex(alpha))
        .meta("c_e_ed", fmt_complex(aligned[0]))
        .meta("c_e_analytic", fmt_complex(exact[0]))
        .meta("relative_error", format!("{rel_err:.16e}"))
        .meta("normalization", "|c_e|^2 + sum_x |v_x|^2 = 1 with v_x = psi(x)/sqrt(L)");
    let (lo, _) = window(size);
    for (i, (a, b)) in aligned[1..].iter().zip(&exact[1..]).enumerate() {
        table.push(vec![
            (lo + i as i64).into(),
            a.re.into(),
            a.im.into(),
            b.re.into(),
            b.im.into(),
            (a - b).norm().into(),
        ]);
    }

    let mut results = json!({
        "analytic": analytic.label,
        "energy": complex_json(wf.energy),
        "ed_energy": complex_json(ed.eigenvalues[idx]),
        "ed_index": idx,
        "alpha": complex_json(alpha),
        "relative_error": rel_err,
        "details": analytic.extra,
    });
    if let Some(f) = &analytic.template {
        results["correlation_ed"] = json!(correlation(f, &ed.vectors[idx][1..]));
        results["correlation_analytic"] = json!(correlation(f, &exact[1..]));
    }
    Ok(Outcome { tables: vec![table], results, passed: true })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn momentum_maps_to_nearest_mode() {
        assert_eq!(mode_for_momentum(0.0, 10), 10);
        assert_eq!(mode_for_momentum(2.0 * PI * 3.0 / 10.0 + 0.01, 10), 3);
        assert_eq!(mode_for_momentum(-2.0 * PI / 10.0, 10), 9);
        assert_eq!(mode_for_momentum(2.0 * PI * 6.0 / 11.0, 11), 6);
    }
}
