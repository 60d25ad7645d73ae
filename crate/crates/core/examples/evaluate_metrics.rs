//! Scores binomial and beta-binomial fits on held-out units and compares
//! them by PSIS-LOO.

use socialpop::evaluation::{compare, crps, evaluate_model, report};
use socialpop::geo::Split;
use socialpop::models::{fit, HsgpSpec, ModelConfig, ModelKind};
use socialpop::sampler::SamplerConfig;
use socialpop::simulate::{simulate_units, TruthParams, UnitSimConfig};

fn main() -> socialpop::Result<()> {
    println!("CRPS of {{0, 2}} against 1: {}", crps(&[0.0, 2.0], 1.0)?);
    let (data, _) = simulate_units(&UnitSimConfig {
        n_units: 250,
        truth: TruthParams {
            sigma: 0.0,
            ..Default::default()
        },
        ..Default::default()
    })?;
    let sampler = SamplerConfig {
        warmup_iters: 500,
        sampling_iters: 500,
        ..Default::default()
    };
    let mut preds = Vec::new();
    let mut loos = Vec::new();
    for kind in [ModelKind::Bin, ModelKind::BetaBin] {
        let cfg = ModelConfig::for_dataset(kind, HsgpSpec::default(), &data)?;
        let draws = fit(&cfg, &data, &sampler)?;
        let eval = evaluate_model(&cfg, &draws, &data, 1)?;
        preds.push(eval.predictions);
        loos.push((kind, eval.loo));
    }
    for r in report(&preds, &data.subset(Split::Test))? {
        println!("{:<10} {:<6} {:<8} {:.5} ({:.1}%)", r.duc, r.metric, r.model, r.value, r.value_pct);
    }
    for c in compare(&loos)? {
        println!(
            "{:<8} elpd_loo {:9.2} ± {:6.2}  diff {:8.2} ± {:6.2}  k>0.7: {}",
            c.model, c.elpd_loo, c.se, c.elpd_diff, c.se_diff, c.k_above_07
        );
    }
    Ok(())
}
