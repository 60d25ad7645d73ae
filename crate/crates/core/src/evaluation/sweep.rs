use serde::{Deserialize, Serialize};

use super::metrics::Metric;
use super::{evaluate_model, ModelEvaluation};
use crate::error::{Error, Result};
use crate::geo::UptakeDataset;
use crate::models::{fit, HsgpSpec, ModelConfig, ModelKind};
use crate::sampler::SamplerConfig;

/// One line of the basis-sweep table: test metrics for one class plus the
/// model's LOO-ELPD, for one basis size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_basis: usize,
    pub duc: String,
    pub aemed: f64,
    pub aemed_pct: f64,
    pub semean: f64,
    pub semean_pct: f64,
    pub crps: f64,
    pub crps_pct: f64,
    pub elpd_loo: f64,
    pub elpd_se: f64,
}

pub const SWEEP_BASES: [usize; 4] = [4, 8, 16, 32];

fn rows_for(n_basis: usize, eval: &ModelEvaluation) -> Vec<SweepRow> {
    let mut out: Vec<SweepRow> = Vec::new();
    for r in &eval.metrics {
        let idx = match out.iter().position(|s| s.duc == r.duc) {
            Some(i) => i,
            None => {
                out.push(SweepRow {
                    n_basis,
                    duc: r.duc.clone(),
                    aemed: f64::NAN,
                    aemed_pct: f64::NAN,
                    semean: f64::NAN,
                    semean_pct: f64::NAN,
                    crps: f64::NAN,
                    crps_pct: f64::NAN,
                    elpd_loo: eval.loo.elpd,
                    elpd_se: eval.loo.se(),
                });
                out.len() - 1
            }
        };
        let row = &mut out[idx];
        match r.metric {
            Metric::Aemed => (row.aemed, row.aemed_pct) = (r.value, r.value_pct),
            Metric::Semean => (row.semean, row.semean_pct) = (r.value, r.value_pct),
            Metric::Crps => (row.crps, row.crps_pct) = (r.value, r.value_pct),
        }
    }
    out
}

/// Fits the spatial model once per basis size and tabulates test metrics
/// and LOO-ELPD.
pub fn basis_sweep(
    data: &UptakeDataset,
    bases: &[usize],
    hsgp: HsgpSpec,
    sampler: &SamplerConfig,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if bases.is_empty() {
        return Err(Error::invalid("basis sweep needs at least one basis size"));
    }
    let mut rows = Vec::new();
    for &n_basis in bases {
        log::info!("basis sweep: n_b = {n_basis}");
        let spec = HsgpSpec { n_basis, ..hsgp };
        let config = ModelConfig::for_dataset(ModelKind::Full, spec, data)?;
        let draws = fit(&config, data, sampler)?;
        let eval = evaluate_model(&config, &draws, data, seed)?;
        rows.extend(rows_for(n_basis, &eval));
    }
    Ok(rows)
}
