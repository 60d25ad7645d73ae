//! Command-line driver. Every subcommand reads and writes files under the
//! configured output directory and leaves a manifest behind.

pub mod config;
pub mod manifest;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{basis_sweep, compare, evaluate_model, report, LooResult};
use crate::geo::harmonize::{apportion_tile_counts, harmonize_unit};
use crate::geo::io::{read_observations, read_tiles, read_units};
use crate::geo::{build_dataset, RasterGrid, Split, SplitOptions, UptakeDataset};
use crate::imputation::impute::{reference_counts, ImputeOptions};
use crate::imputation::{build_histories, impute, imputation_ppc, ImputationModel, ImputedCounts, Provenance};
use crate::models::{self, ModelConfig, ModelKind, PredictiveSamples};
use crate::sampler::output::{read_draws, write_draws, write_sampler_stats, DrawSummary};
use crate::sampler::{sample, summarize, ParameterSummary};
use crate::simulate::{simulate_world, WorldConfig};
use crate::table;

pub use config::{Layout, PipelineConfig};
use manifest::Tracker;

#[derive(Debug, Parser)]
#[command(name = "socialpop", version, about = "Censored-count imputation and uptake models for small-area population estimates")]
pub struct Cli {
    /// TOML config file; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Overrides the config output directory.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic region in the raw input formats, plus its truth.
    Simulate,
    /// Fit the censored-count model and impute censored reference counts.
    Impute {
        /// Number of imputed count sets to write.
        #[arg(long)]
        imputations: Option<usize>,
    },
    /// Harmonize units with rasters, apportion tile counts, build the dataset.
    Ingest,
    /// Sample one uptake model's posterior.
    Fit {
        #[arg(long)]
        model: Option<ModelKind>,
        /// Basis functions per dimension for the spatial model.
        #[arg(long)]
        basis: Option<usize>,
    },
    /// Score fitted models on the test units and compare them by PSIS-LOO.
    Evaluate,
    /// Convergence and imputation diagnostics for everything fitted so far.
    Diagnose,
    /// simulate, impute, ingest, fit each model, evaluate, diagnose.
    Pipeline,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Impute { .. } => "impute",
            Command::Ingest => "ingest",
            Command::Fit { .. } => "fit",
            Command::Evaluate => "evaluate",
            Command::Diagnose => "diagnose",
            Command::Pipeline => "pipeline",
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return EXIT_USAGE;
        }
    };
    match pool.install(|| execute(&cli.command, &cfg, cli.config.as_deref())) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run_from_env() -> i32 {
    run_from(std::env::args_os())
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    if let Some(d) = &cli.output_dir {
        cfg.output_dir = d.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one subcommand against a loaded config.
pub fn execute(cmd: &Command, cfg: &PipelineConfig, config_path: Option<&Path>) -> Result<()> {
    let layout = cfg.layout();
    let mut t = Tracker::default();
    match cmd {
        Command::Simulate => simulate(cfg, &mut t)?,
        Command::Impute { imputations } => run_impute(cfg, *imputations, &mut t)?,
        Command::Ingest => ingest(cfg, &mut t)?,
        Command::Fit { model, basis } => {
            fit_model(cfg, model.unwrap_or(cfg.model.kind), *basis, &mut t)?;
        }
        Command::Evaluate => evaluate(cfg, &mut t)?,
        Command::Diagnose => diagnose(cfg, &mut t)?,
        Command::Pipeline => {
            simulate(cfg, &mut t)?;
            run_impute(cfg, None, &mut t)?;
            ingest(cfg, &mut t)?;
            for &kind in &cfg.model.compare {
                fit_model(cfg, kind, None, &mut t)?;
            }
            evaluate(cfg, &mut t)?;
            diagnose(cfg, &mut t)?;
        }
    }
    let m = t.write(&layout.root, cmd.name(), cfg.seed, config_path)?;
    println!("manifest: {}", m.display());
    Ok(())
}

fn simulate(cfg: &PipelineConfig, t: &mut Tracker) -> Result<()> {
    let layout = cfg.layout();
    let mut world_cfg: WorldConfig = cfg.simulate.clone();
    world_cfg.units.seed = cfg.seed;
    world_cfg.units.split_seed = cfg.seed;
    println!("simulate: {} units", world_cfg.units.n_units);
    let world = simulate_world(&world_cfg)?;
    let f = world.write(&layout.world)?;
    for p in [
        f.units_geojson,
        f.unit_attributes,
        f.duc_raster,
        f.pop_raster,
        f.radiance_raster,
        f.tiles,
        f.observations,
        f.truth,
    ] {
        t.output(p);
    }
    println!("simulate: wrote {}", layout.world.display());
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct ImputationDiagnostics {
    n_tiles: usize,
    n_rates: usize,
    n_groups: usize,
    divergences: usize,
    max_rhat: f64,
    min_ess: f64,
    imputations: usize,
    imputed_tiles: usize,
    individual_posterior: usize,
    group_posterior: usize,
}

fn run_impute(cfg: &PipelineConfig, imputations: Option<usize>, t: &mut Tracker) -> Result<()> {
    let layout = cfg.layout();
    let files = cfg.input_files();
    let ic = &cfg.imputation;
    let spec = ic.spec();
    let obs = read_observations(&files.observations, spec.censor_threshold)?;
    let tiles = read_tiles(&files.tiles)?;
    t.input(&files.observations);
    t.input(&files.tiles);
    if !obs.iter().any(|o| o.date == ic.reference_date && o.window == ic.window) {
        log::warn!("no observations at the reference date {}; every tile is imputed", ic.reference_date);
    }
    let histories = build_histories(&obs, ic.filter(), spec.censor_threshold)?;
    let model = ImputationModel::new(&histories, spec)?;
    println!(
        "impute: {} tile histories, {} rates ({} all-censored groups)",
        histories.len(),
        model.n_rates(),
        model.n_groups()
    );
    let draws = sample(&model, &cfg.sampler.config(cfg.seed))?;
    let opts = ImputeOptions {
        reference_date: ic.reference_date,
        window: ic.window,
        weight: ic.land_weight,
        seed: cfg.seed,
        imputations: imputations.unwrap_or(ic.imputations),
    };
    if opts.imputations == 0 {
        return Err(Error::invalid("--imputations must be >= 1"));
    }
    let runs = impute(&draws, &model, &tiles, &obs, &opts)?;
    table::ensure_dir(&layout.imputation)?;
    for (m, run) in runs.iter().enumerate() {
        let p = if m == 0 {
            layout.imputed_counts()
        } else {
            layout.imputation.join(format!("imputed_counts_{}.csv", m + 1))
        };
        run.write(&p)?;
        t.output(p);
    }
    let ppc = imputation_ppc(&draws, &model, &histories, cfg.seed)?;
    let ppc_path = layout.imputation.join("ppc.csv");
    table::write_csv(&ppc_path, &ppc)?;
    let summary = summarize(&draws);
    let summary_path = layout.imputation.join("posterior_summary.csv");
    table::write_csv(&summary_path, &summary)?;
    let first = &runs[0].rows;
    let diag = ImputationDiagnostics {
        n_tiles: histories.len(),
        n_rates: model.n_rates(),
        n_groups: model.n_groups(),
        divergences: draws.divergences(),
        max_rhat: summary.iter().map(|p| p.rhat).fold(f64::NEG_INFINITY, f64::max),
        min_ess: summary.iter().map(|p| p.ess).fold(f64::INFINITY, f64::min),
        imputations: runs.len(),
        imputed_tiles: first.len(),
        individual_posterior: first.iter().filter(|r| r.provenance == Provenance::Individual).count(),
        group_posterior: first.iter().filter(|r| r.provenance == Provenance::Group).count(),
    };
    let diag_path = layout.imputation.join("diagnostics.json");
    table::write_json(&diag_path, &diag)?;
    t.output(ppc_path);
    t.output(summary_path);
    t.output(diag_path);
    println!(
        "impute: {} censored tiles imputed, max R-hat {:.4}, {} divergences",
        diag.imputed_tiles, diag.max_rhat, diag.divergences
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct UnitCountRow<'a> {
    unit_id: &'a str,
    user_count: f64,
}

fn ingest(cfg: &PipelineConfig, t: &mut Tracker) -> Result<()> {
    let layout = cfg.layout();
    let files = cfg.input_files();
    let shapes = read_units(&files.units_geojson, &files.unit_attributes)?;
    let duc = RasterGrid::read_ascii(&files.duc_raster)?;
    let pop = RasterGrid::read_ascii(&files.pop_raster)?;
    let radiance = RasterGrid::read_ascii(&files.radiance_raster)?;
    let tiles = read_tiles(&files.tiles)?;
    let obs = read_observations(&files.observations, cfg.imputation.censor_threshold)?;
    let imputed_path = layout.imputed_counts();
    let imputed: BTreeMap<String, f64> = if imputed_path.exists() {
        t.input(&imputed_path);
        ImputedCounts::read(&imputed_path)?
            .into_iter()
            .map(|r| (r.tile_id, r.imputed_count))
            .collect()
    } else {
        log::warn!("{} not found; only observed reference counts are used", imputed_path.display());
        BTreeMap::new()
    };
    for p in [
        &files.units_geojson,
        &files.unit_attributes,
        &files.duc_raster,
        &files.pop_raster,
        &files.radiance_raster,
        &files.tiles,
        &files.observations,
    ] {
        t.input(p);
    }
    let units = shapes
        .iter()
        .map(|s| harmonize_unit(s, &duc, &pop, &radiance))
        .collect::<Result<Vec<_>>>()?;
    println!("ingest: {} units harmonized", units.len());
    let counts = reference_counts(&tiles, &obs, &imputed, cfg.imputation.reference_date, cfg.imputation.window)?;
    let app = apportion_tile_counts(&tiles, &counts, &units)?;
    if !app.orphans.is_empty() {
        log::warn!("{} tiles overlap no unit; {} users dropped", app.orphans.len(), app.total_orphaned());
    }
    let data = build_dataset(
        &units,
        &app.unit_counts,
        SplitOptions {
            train_fraction: cfg.split.train_fraction,
            seed: cfg.seed,
        },
    )?;
    table::ensure_dir(&layout.dataset)?;
    data.write(&layout.dataset_csv(), &layout.standardization_json())?;
    let rows: Vec<UnitCountRow> = app
        .unit_counts
        .iter()
        .map(|(id, c)| UnitCountRow { unit_id: id, user_count: *c })
        .collect();
    let counts_path = layout.dataset.join("unit_counts.csv");
    table::write_csv(&counts_path, &rows)?;
    t.output(layout.dataset_csv());
    t.output(layout.standardization_json());
    t.output(counts_path);
    println!(
        "ingest: {} units ({} train, {} test)",
        data.records.len(),
        data.train().count(),
        data.test().count()
    );
    Ok(())
}

fn read_dataset(layout: &Layout, t: &mut Tracker) -> Result<UptakeDataset> {
    let (csv, side) = (layout.dataset_csv(), layout.standardization_json());
    let data = UptakeDataset::read(&csv, Some(&side))?;
    t.input(csv);
    t.input(side);
    Ok(data)
}

fn fit_model(cfg: &PipelineConfig, kind: ModelKind, basis: Option<usize>, t: &mut Tracker) -> Result<()> {
    let layout = cfg.layout();
    let data = read_dataset(&layout, t)?;
    let hsgp = cfg.model.hsgp(basis);
    let config = ModelConfig::for_dataset(kind, hsgp, &data)?;
    let sampler = cfg.sampler.config(cfg.seed);
    println!(
        "fit {kind}: {} train units, {} parameters, {} chains x {} draws",
        data.train().count(),
        config.parameter_names().len(),
        sampler.chains,
        sampler.sampling_iters
    );
    let draws = models::fit(&config, &data, &sampler)?;
    let dir = layout.fit_dir(kind);
    table::ensure_dir(&dir)?;
    let summary = DrawSummary::from_draws(&draws);
    let paths = [
        dir.join("draws.csv"),
        dir.join("sampler.csv"),
        dir.join("summary.json"),
        dir.join("model.json"),
    ];
    write_draws(&paths[0], &draws)?;
    write_sampler_stats(&paths[1], &draws)?;
    summary.write(&paths[2])?;
    table::write_json(&paths[3], &config)?;
    let (rhat, ess) = extremes(&summary.parameters);
    println!(
        "fit {kind}: max R-hat {rhat:.4}, min ESS {ess:.0}, {} divergences",
        summary.divergences
    );
    for p in paths {
        t.output(p);
    }
    Ok(())
}

fn extremes(params: &[ParameterSummary]) -> (f64, f64) {
    (
        params.iter().map(|p| p.rhat).fold(f64::NEG_INFINITY, f64::max),
        params.iter().map(|p| p.ess).fold(f64::INFINITY, f64::min),
    )
}

/// Fitted models found under the output directory, in config order.
fn fitted_models(cfg: &PipelineConfig) -> Vec<ModelKind> {
    let layout = cfg.layout();
    let mut kinds: Vec<ModelKind> = cfg.model.compare.clone();
    if !kinds.contains(&cfg.model.kind) {
        kinds.push(cfg.model.kind);
    }
    kinds
        .into_iter()
        .filter(|k| layout.fit_dir(*k).join("draws.csv").exists())
        .collect()
}

#[derive(Debug, Serialize)]
struct LooRow<'a> {
    unit_id: &'a str,
    elpd_i: f64,
    pareto_k: f64,
}

#[derive(Debug, Serialize)]
struct DensityRow<'a> {
    model: ModelKind,
    unit_id: &'a str,
    duc: &'static str,
    draw: usize,
    rate: f64,
}

fn evaluate(cfg: &PipelineConfig, t: &mut Tracker) -> Result<()> {
    let layout = cfg.layout();
    let data = read_dataset(&layout, t)?;
    let kinds = fitted_models(cfg);
    if kinds.is_empty() {
        return Err(Error::invalid(format!(
            "no fitted models under {}; run `fit` first",
            layout.fit.display()
        )));
    }
    let test = data.subset(Split::Test);
    table::ensure_dir(&layout.evaluation)?;
    let mut predictions: Vec<PredictiveSamples> = Vec::new();
    let mut loos: Vec<(ModelKind, LooResult)> = Vec::new();
    let mut summaries = Vec::new();
    for &kind in &kinds {
        let dir = layout.fit_dir(kind);
        let config: ModelConfig = table::read_json(&dir.join("model.json"))?;
        if config.kind != kind {
            return Err(Error::invalid(format!("{} describes a {} model", dir.display(), config.kind)));
        }
        let draws = read_draws(&dir.join("draws.csv"))?;
        t.input(dir.join("model.json"));
        t.input(dir.join("draws.csv"));
        let eval = evaluate_model(&config, &draws, &data, cfg.seed)?;
        println!(
            "evaluate {kind}: elpd_loo {:.2} (se {:.2}), {} units with k > 0.7",
            eval.loo.elpd,
            eval.loo.se(),
            eval.loo.n_bad()
        );
        let loo_path = layout.evaluation.join(format!("loo_{}.csv", kind.name()));
        let rows: Vec<LooRow> = eval
            .loo
            .points
            .iter()
            .map(|p| LooRow {
                unit_id: &p.unit_id,
                elpd_i: p.elpd_i,
                pareto_k: p.pareto_k,
            })
            .collect();
        table::write_csv(&loo_path, &rows)?;
        t.output(loo_path);
        summaries.extend(eval.predictions.summarize(&test, cfg.evaluation.hdi_prob));
        loos.push((kind, eval.loo));
        predictions.push(eval.predictions);
    }
    let metrics = report(&predictions, &test)?;
    let comparison = compare(&loos)?;
    let density: Vec<DensityRow> = predictions
        .iter()
        .flat_map(|p| {
            p.unit_ids.iter().zip(&p.rates).zip(&test).flat_map(move |((id, r), u)| {
                r.iter().take(cfg.evaluation.density_samples).enumerate().map(move |(k, v)| DensityRow {
                    model: p.kind,
                    unit_id: id,
                    duc: u.duc.name(),
                    draw: k + 1,
                    rate: *v,
                })
            })
        })
        .collect();
    let out = [
        layout.evaluation.join("metrics.csv"),
        layout.evaluation.join("loo_comparison.csv"),
        layout.evaluation.join("predictive_summary.csv"),
        layout.evaluation.join("predictive_samples.csv"),
    ];
    table::write_csv(&out[0], &metrics)?;
    table::write_csv(&out[1], &comparison)?;
    table::write_csv(&out[2], &summaries)?;
    table::write_csv(&out[3], &density)?;
    for p in out {
        t.output(p);
    }
    if !cfg.evaluation.sweep.is_empty() {
        println!("evaluate: basis sweep over {:?}", cfg.evaluation.sweep);
        let rows = basis_sweep(
            &data,
            &cfg.evaluation.sweep,
            cfg.model.hsgp(None),
            &cfg.sampler.config(cfg.seed),
            cfg.seed,
        )?;
        let p = layout.evaluation.join("sweep.csv");
        table::write_csv(&p, &rows)?;
        t.output(p);
    }
    println!("evaluate: wrote {}", layout.evaluation.display());
    Ok(())
}

#[derive(Debug, Deserialize)]
struct SamplerRow {
    tree_depth: usize,
    divergent: u8,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelDiagnostics {
    pub model: ModelKind,
    pub parameters: usize,
    pub draws: usize,
    pub max_rhat: f64,
    pub min_ess: f64,
    pub divergences: usize,
    pub max_tree_depth_hits: usize,
    pub rhat_ok: bool,
    pub ess_ok: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct Diagnostics {
    models: Vec<ModelDiagnostics>,
    imputation: Option<ImputationDiagnostics>,
}

/// R-hat and ESS thresholds reported as ok/not ok.
const RHAT_LIMIT: f64 = 1.01;
const ESS_LIMIT: f64 = 400.0;

fn diagnose(cfg: &PipelineConfig, t: &mut Tracker) -> Result<()> {
    let layout = cfg.layout();
    table::ensure_dir(&layout.diagnostics)?;
    let max_depth = cfg.sampler.max_tree_depth;
    let mut models_out = Vec::new();
    for kind in fitted_models(cfg) {
        let dir = layout.fit_dir(kind);
        let draws = read_draws(&dir.join("draws.csv"))?;
        let stats: Vec<SamplerRow> = table::read_csv(&dir.join("sampler.csv"))?;
        t.input(dir.join("draws.csv"));
        t.input(dir.join("sampler.csv"));
        let summary = summarize(&draws);
        let (max_rhat, min_ess) = extremes(&summary);
        let p = layout.diagnostics.join(format!("{}_summary.csv", kind.name()));
        table::write_csv(&p, &summary)?;
        t.output(p);
        let d = ModelDiagnostics {
            model: kind,
            parameters: draws.n_params(),
            draws: draws.n_draws(),
            max_rhat,
            min_ess,
            divergences: stats.iter().filter(|s| s.divergent != 0).count(),
            max_tree_depth_hits: stats.iter().filter(|s| s.tree_depth >= max_depth).count(),
            rhat_ok: max_rhat < RHAT_LIMIT,
            ess_ok: min_ess > ESS_LIMIT,
        };
        println!(
            "diagnose {kind}: max R-hat {:.4} ({}), min ESS {:.0} ({}), {} divergences",
            d.max_rhat,
            if d.rhat_ok { "ok" } else { "high" },
            d.min_ess,
            if d.ess_ok { "ok" } else { "low" },
            d.divergences
        );
        models_out.push(d);
    }
    let imp_path = layout.imputation.join("diagnostics.json");
    let imputation = if imp_path.exists() {
        t.input(&imp_path);
        Some(table::read_json(&imp_path)?)
    } else {
        None
    };
    if models_out.is_empty() && imputation.is_none() {
        return Err(Error::invalid("nothing to diagnose; run `impute` or `fit` first"));
    }
    let p = layout.diagnostics.join("diagnostics.json");
    table::write_json(
        &p,
        &Diagnostics {
            models: models_out,
            imputation,
        },
    )?;
    t.output(p);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_from(["socialpop", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run_from(["socialpop"]), EXIT_USAGE);
        assert_eq!(run_from(["socialpop", "fit", "--model", "poisson"]), EXIT_USAGE);
        assert_eq!(run_from(["socialpop", "--help"]), EXIT_OK);
    }

    #[test]
    fn missing_inputs_exit_1() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        assert_eq!(run_from(["socialpop", "ingest", "--output-dir", out]), EXIT_DATA);
        assert_eq!(run_from(["socialpop", "evaluate", "--output-dir", out]), EXIT_DATA);
    }
}
