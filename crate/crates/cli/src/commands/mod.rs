mod bound;
mod scaling;
mod spectrum;
mod state;
mod verify;

pub use bound::bound;
pub use scaling::scaling;
pub use spectrum::spectrum;
pub use state::state;
pub use verify::verify;

use nhscatter::bath::BathSpec;
use nhscatter::oracle::{build_hamiltonian, classify_states, eigenpairs_with_max, EDResult};
use nhscatter::C64;
use serde_json::Value;

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::output::Table;

/// Data tables and summary results of one command.
#[derive(Debug)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub results: Value,
    /// False when a verification check failed.
    pub passed: bool,
}

pub(crate) fn diagonalize(cfg: &RunConfig, bath: &BathSpec, size: usize) -> CliResult<EDResult> {
    let h = build_hamiltonian(bath, &cfg.params, size, cfg.boundary)?;
    Ok(classify_states(&eigenpairs_with_max(&h, cfg.max_dim)?, bath))
}

/// `|<f, v>| / (|f| |v|)`.
pub(crate) fn correlation(f: &[C64], v: &[C64]) -> f64 {
    let ov: C64 = f.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
    let nf = f.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    ov.norm() / (nf * nv)
}

/// Least-squares slope and coefficient of determination.
pub(crate) fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    (sxy / sxx, if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) })
}
