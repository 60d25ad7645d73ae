//! Held-out accuracy metrics, PSIS-LOO model comparison and the basis sweep.

pub mod loo;
pub mod metrics;
pub mod sweep;

use crate::error::Result;
use crate::geo::{Split, UptakeDataset};
use crate::models::{pointwise_loglik, posterior_predict, ModelConfig, PredictiveSamples};
use crate::sampler::PosteriorDraws;

pub use loo::{compare, gpd_fit, psis_loo, psis_smooth, LooComparison, LooPoint, LooResult};
pub use metrics::{aemed, aggregate, crps, report, semean, unit_scores, Metric, MetricRow, UnitScore};
pub use sweep::{basis_sweep, SweepRow, SWEEP_BASES};

/// Test-set predictions, their metrics, and LOO on the training units.
#[derive(Clone, Debug)]
pub struct ModelEvaluation {
    pub predictions: PredictiveSamples,
    pub metrics: Vec<MetricRow>,
    pub loo: LooResult,
}

pub fn evaluate_model(
    config: &ModelConfig,
    draws: &PosteriorDraws,
    data: &UptakeDataset,
    seed: u64,
) -> Result<ModelEvaluation> {
    let test = data.subset(Split::Test);
    let train = data.subset(Split::Train);
    let predictions = posterior_predict(config, draws, &test, seed)?;
    let metrics = report(std::slice::from_ref(&predictions), &test)?;
    let ll = pointwise_loglik(config, draws, &train)?;
    let ids: Vec<String> = train.iter().map(|u| u.unit_id.clone()).collect();
    let loo = psis_loo(&ll, &ids)?;
    Ok(ModelEvaluation {
        predictions,
        metrics,
        loo,
    })
}
