//! Simulates units from known parameters and fits the three uptake models.

use socialpop::models::{fit, main_parameter_names, HsgpSpec, ModelConfig, ModelKind};
use socialpop::sampler::{summarize, SamplerConfig};
use socialpop::simulate::{simulate_units, UnitSimConfig};

fn main() -> socialpop::Result<()> {
    let (data, truth) = simulate_units(&UnitSimConfig {
        n_units: 200,
        ..Default::default()
    })?;
    let sampler = SamplerConfig {
        warmup_iters: 500,
        sampling_iters: 500,
        ..Default::default()
    };
    println!("truth: a = {:?}, rho = {:?}", truth.params.a, truth.params.rho);
    for kind in ModelKind::ALL {
        let cfg = ModelConfig::for_dataset(kind, HsgpSpec { n_basis: 8, ..Default::default() }, &data)?;
        let draws = fit(&cfg, &data, &sampler)?;
        let keep = main_parameter_names(kind);
        println!("\n{kind}: {} divergences", draws.divergences());
        for p in summarize(&draws).into_iter().filter(|p| keep.contains(&p.name)) {
            println!("  {:<10} {:8.3} ± {:.3}  rhat {:.3}", p.name, p.mean, p.sd, p.rhat);
        }
    }
    Ok(())
}
