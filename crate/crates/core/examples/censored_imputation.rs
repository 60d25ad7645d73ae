//! Fits the hierarchical censored-Poisson model to simulated tile histories
//! and checks how often the true rate lands in its 95% interval.

use socialpop::imputation::{imputation_ppc, ImputationModel, ImputationSpec};
use socialpop::sampler::{sample, SamplerConfig};
use socialpop::simulate::{simulate_tiles, TileSimConfig};
use socialpop::special::quantile_sorted;

fn main() -> socialpop::Result<()> {
    let sims = simulate_tiles(&TileSimConfig {
        n_tiles: 60,
        ..Default::default()
    })?;
    let histories: Vec<_> = sims.iter().map(|s| s.history.clone()).collect();
    let model = ImputationModel::new(&histories, ImputationSpec::default())?;
    println!("{} tiles, {} rate slots, {} all-censored groups", sims.len(), model.n_rates(), model.n_groups());
    let draws = sample(&model, &SamplerConfig::default())?;
    let mut covered = 0;
    for s in &sims {
        let slot = model.slot_of(&s.history.tile_id).expect("every tile has a slot");
        let mut x = draws.pooled(model.rate_column(slot.index()));
        x.sort_by(f64::total_cmp);
        if (quantile_sorted(&x, 0.025)..=quantile_sorted(&x, 0.975)).contains(&s.lambda) {
            covered += 1;
        }
    }
    println!("95% interval coverage: {covered}/{}", sims.len());
    let ppc = imputation_ppc(&draws, &model, &histories, 1)?;
    for r in ppc.iter().filter(|r| r.observed_median.is_some()).take(8) {
        println!(
            "{}: {} of {} observed, predictive median {}, observed median {:?}",
            r.tile_id, r.n_observed, r.n_entries, r.predictive_median, r.observed_median
        );
    }
    Ok(())
}
