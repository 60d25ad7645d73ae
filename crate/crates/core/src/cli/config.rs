//! TOML pipeline configuration.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imputation::{HistoryFilter, ImputationSpec, LandWeight, Pooling};
use crate::models::{HsgpSpec, ModelKind};
use crate::sampler::SamplerConfig;
use crate::simulate::{WorldConfig, WorldFiles};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Drives every random step: simulation, split, samplers, predictions.
    pub seed: u64,
    /// Worker threads; 0 lets the runtime decide. Results do not depend on it.
    pub threads: usize,
    /// Root of all outputs. Relative paths resolve against the config file.
    pub output_dir: PathBuf,
    pub inputs: InputPaths,
    pub simulate: WorldConfig,
    pub imputation: ImputationConfig,
    pub split: SplitConfig,
    pub sampler: SamplerSection,
    pub model: ModelSection,
    pub evaluation: EvaluationConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 2020,
            threads: 0,
            output_dir: PathBuf::from("output"),
            inputs: InputPaths::default(),
            simulate: WorldConfig::default(),
            imputation: ImputationConfig::default(),
            split: SplitConfig::default(),
            sampler: SamplerSection::default(),
            model: ModelSection::default(),
            evaluation: EvaluationConfig::default(),
        }
    }
}

/// Raw inputs for `ingest` and `impute`. Unset entries point at the files
/// `simulate` writes under `<output_dir>/world`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputPaths {
    pub units_geojson: Option<PathBuf>,
    pub unit_attributes: Option<PathBuf>,
    pub duc_raster: Option<PathBuf>,
    pub population_raster: Option<PathBuf>,
    pub radiance_raster: Option<PathBuf>,
    pub tiles: Option<PathBuf>,
    pub observations: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImputationConfig {
    pub reference_date: NaiveDate,
    /// 8-hour window index: 0 = 00-08, 1 = 08-16, 2 = 16-24 UTC.
    pub window: u8,
    pub weekdays_only: bool,
    pub censor_threshold: u32,
    pub hyperprior_scale: f64,
    pub pooling: Pooling,
    pub land_weight: LandWeight,
    /// Number of imputed count sets; the first feeds `ingest`.
    pub imputations: usize,
}

impl Default for ImputationConfig {
    fn default() -> Self {
        ImputationConfig {
            reference_date: NaiveDate::from_ymd_opt(2020, 5, 4).expect("valid date"),
            window: 2,
            weekdays_only: true,
            censor_threshold: 10,
            hyperprior_scale: 5.0,
            pooling: Pooling::Hierarchical,
            land_weight: LandWeight::Inhabited,
            imputations: 1,
        }
    }
}

impl ImputationConfig {
    pub fn spec(&self) -> ImputationSpec {
        ImputationSpec {
            censor_threshold: self.censor_threshold,
            hyperprior_scale: self.hyperprior_scale,
            pooling: self.pooling,
        }
    }

    pub fn filter(&self) -> HistoryFilter {
        HistoryFilter {
            window: self.window,
            weekdays_only: self.weekdays_only,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { train_fraction: 0.8 }
    }
}

/// Sampler settings; the seed comes from the top-level `seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSection {
    pub chains: usize,
    pub warmup: usize,
    pub samples: usize,
    pub target_accept: f64,
    pub max_tree_depth: usize,
}

impl Default for SamplerSection {
    fn default() -> Self {
        let d = SamplerConfig::default();
        SamplerSection {
            chains: d.chains,
            warmup: d.warmup_iters,
            samples: d.sampling_iters,
            target_accept: d.target_accept,
            max_tree_depth: d.max_tree_depth,
        }
    }
}

impl SamplerSection {
    pub fn config(&self, seed: u64) -> SamplerConfig {
        SamplerConfig {
            chains: self.chains,
            warmup_iters: self.warmup,
            sampling_iters: self.samples,
            seed,
            target_accept: self.target_accept,
            max_tree_depth: self.max_tree_depth,
            ..SamplerConfig::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    /// Model fitted by `fit` when `--model` is absent.
    pub kind: ModelKind,
    /// Basis functions per dimension for the spatial model.
    pub basis: usize,
    pub boundary_factor: f64,
    /// Models fitted by `pipeline` and scored by `evaluate`.
    pub compare: Vec<ModelKind>,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            kind: ModelKind::Full,
            basis: 16,
            boundary_factor: 2.5,
            compare: ModelKind::ALL.to_vec(),
        }
    }
}

impl ModelSection {
    pub fn hsgp(&self, basis: Option<usize>) -> HsgpSpec {
        HsgpSpec {
            n_basis: basis.unwrap_or(self.basis),
            boundary_factor: self.boundary_factor,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    /// Probability mass of the reported predictive intervals.
    pub hdi_prob: f64,
    /// Predictive draws kept per test unit in `predictive_samples.csv`.
    pub density_samples: usize,
    /// Basis sizes for the optional sweep; empty skips it.
    pub sweep: Vec<usize>,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            hdi_prob: 0.87,
            density_samples: 200,
            sweep: Vec::new(),
        }
    }
}

impl PipelineConfig {
    /// Reads a config file; relative paths inside it become relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: PipelineConfig = toml::from_str(&text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() as u64 + 1)
                .unwrap_or(0);
            Error::schema(path, line, e.message().to_string())
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.rebase(base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        let i = &mut self.inputs;
        for p in [
            &mut i.units_geojson,
            &mut i.unit_attributes,
            &mut i.duc_raster,
            &mut i.population_raster,
            &mut i.radiance_raster,
            &mut i.tiles,
            &mut i.observations,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.split.train_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::invalid(format!("split.train_fraction {f} must lie in (0, 1)")));
        }
        if self.imputation.window > 2 {
            return Err(Error::invalid("imputation.window must be 0, 1 or 2"));
        }
        if self.imputation.imputations == 0 {
            return Err(Error::invalid("imputation.imputations must be >= 1"));
        }
        if !(self.evaluation.hdi_prob > 0.0 && self.evaluation.hdi_prob < 1.0) {
            return Err(Error::invalid("evaluation.hdi_prob must lie in (0, 1)"));
        }
        if self.model.compare.is_empty() {
            return Err(Error::invalid("model.compare must list at least one model"));
        }
        self.imputation.spec().validate()?;
        self.model.hsgp(None).validate()?;
        self.sampler.config(self.seed).validate()
    }

    pub fn layout(&self) -> Layout {
        Layout::new(&self.output_dir)
    }

    /// Input files, falling back to the simulated world.
    pub fn input_files(&self) -> WorldFiles {
        let w = WorldFiles::in_dir(&self.layout().world);
        let i = &self.inputs;
        let pick = |p: &Option<PathBuf>, d: PathBuf| p.clone().unwrap_or(d);
        WorldFiles {
            units_geojson: pick(&i.units_geojson, w.units_geojson),
            unit_attributes: pick(&i.unit_attributes, w.unit_attributes),
            duc_raster: pick(&i.duc_raster, w.duc_raster),
            pop_raster: pick(&i.population_raster, w.pop_raster),
            radiance_raster: pick(&i.radiance_raster, w.radiance_raster),
            tiles: pick(&i.tiles, w.tiles),
            observations: pick(&i.observations, w.observations),
            truth: w.truth,
        }
    }
}

/// Output directory structure.
#[derive(Clone, Debug)]
pub struct Layout {
    pub root: PathBuf,
    pub world: PathBuf,
    pub imputation: PathBuf,
    pub dataset: PathBuf,
    pub fit: PathBuf,
    pub evaluation: PathBuf,
    pub diagnostics: PathBuf,
}

impl Layout {
    pub fn new(root: &Path) -> Self {
        Layout {
            root: root.to_path_buf(),
            world: root.join("world"),
            imputation: root.join("imputation"),
            dataset: root.join("dataset"),
            fit: root.join("fit"),
            evaluation: root.join("evaluation"),
            diagnostics: root.join("diagnostics"),
        }
    }

    pub fn dataset_csv(&self) -> PathBuf {
        self.dataset.join("dataset.csv")
    }

    pub fn standardization_json(&self) -> PathBuf {
        self.dataset.join("standardization.json")
    }

    pub fn imputed_counts(&self) -> PathBuf {
        self.imputation.join("imputed_counts.csv")
    }

    pub fn fit_dir(&self, kind: ModelKind) -> PathBuf {
        self.fit.join(kind.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg: PipelineConfig = toml::from_str("").unwrap();
        assert_eq!(cfg, PipelineConfig::default());
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, "seed = 1\n\n[split]\ntrain_fraction = 0.5\nbogus = 3\n").unwrap();
        let err = PipelineConfig::load(&p).unwrap_err();
        assert!(matches!(err, Error::Schema { line: 5, .. }), "{err}");
    }

    #[test]
    fn fraction_out_of_range_is_rejected() {
        let cfg = PipelineConfig {
            split: SplitConfig { train_fraction: 1.0 },
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn nested_sections_parse() {
        let cfg: PipelineConfig = toml::from_str(
            "[model]\nkind = \"betabin\"\ncompare = [\"bin\", \"betabin\"]\n[simulate.units]\nn_units = 12\nlayout = { type = \"grid\", cols = 2, rows = 6 }\n",
        )
        .unwrap();
        assert_eq!(cfg.model.kind, ModelKind::BetaBin);
        assert_eq!(cfg.simulate.units.n_units, 12);
    }
}
