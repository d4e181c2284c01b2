//! Metrics over a grid of diversity values and decoder modes.

use alloc::vec::Vec;

use super::metrics::{evaluate_run, GenerationRun, MetricsReport};
use crate::exec::Executor;
use crate::model::{Cdn, DecoderMode, DiversityConfig, ModelError};

/// Generates one run per prototype.
pub fn generate_runs<S, E>(model: &Cdn, prototypes: &[S], cfg: &DiversityConfig, exec: &E) -> Result<Vec<GenerationRun>, ModelError>
where
    S: AsRef<str> + Sync,
    E: Executor,
{
    model
        .generate_many(prototypes, cfg, exec)
        .into_iter()
        .zip(prototypes)
        .map(|(r, p)| r.map(|candidates| GenerationRun { prototype: p.as_ref().trim().into(), candidates, cfg: *cfg }))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub diversity: f32,
    pub mode: DecoderMode,
    pub k: usize,
    /// Mean of the per-prototype reports.
    pub report: MetricsReport,
}

/// One row per `(D, mode)` pair, in input order with `D` outermost.
pub fn diversity_sweep<S, E>(
    model: &Cdn,
    prototypes: &[S],
    diversities: &[f32],
    modes: &[DecoderMode],
    k: usize,
    seed: u64,
    exec: &E,
) -> Result<Vec<SweepRow>, ModelError>
where
    S: AsRef<str> + Sync,
    E: Executor,
{
    let mut rows = Vec::with_capacity(diversities.len() * modes.len());
    for &diversity in diversities {
        for &mode in modes {
            let cfg = DiversityConfig { diversity, k, mode, seed };
            let runs = generate_runs(model, prototypes, &cfg, exec)?;
            let reports: Vec<MetricsReport> = runs.iter().map(evaluate_run).collect();
            rows.push(SweepRow { diversity, mode, k, report: MetricsReport::mean(&reports) });
        }
    }
    Ok(rows)
}
