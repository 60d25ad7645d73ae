use std::collections::BTreeMap;
use std::fmt;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{Duc, UnitRecord};
use crate::models::{ModelKind, PredictiveSamples};
use crate::special::{mean, median};

/// Absolute error of the predictive median.
pub fn aemed(samples: &[f64], observed: f64) -> Result<f64> {
    let m = median(samples).ok_or_else(|| Error::invalid("aemed needs at least one sample"))?;
    Ok((observed - m).abs())
}

/// Squared error of the predictive mean.
pub fn semean(samples: &[f64], observed: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("semean needs at least one sample"));
    }
    Ok((observed - mean(samples)).powi(2))
}

/// Sample CRPS, `E|X - y| - E|X - X'| / 2` over all ordered sample pairs,
/// evaluated in O(m log m) from the sorted samples.
pub fn crps(samples: &[f64], observed: f64) -> Result<f64> {
    let m = samples.len();
    if m < 2 {
        return Err(Error::invalid("crps needs at least two samples"));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let mf = m as f64;
    let abs_err = s.iter().map(|x| (x - observed).abs()).sum::<f64>() / mf;
    // Σ_{i,j} |x_i - x_j| = 2 Σ_i (2i - m + 1) x_(i) with 0-based i
    let pair: f64 = s
        .iter()
        .enumerate()
        .map(|(i, x)| (2.0 * i as f64 - mf + 1.0) * x)
        .sum::<f64>()
        * 2.0;
    Ok((abs_err - 0.5 * pair / (mf * mf)).max(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Aemed,
    /// Root of the mean squared error of the predictive mean.
    Semean,
    Crps,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Aemed, Metric::Semean, Metric::Crps];
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Aemed => "aemed",
            Metric::Semean => "semean",
            Metric::Crps => "crps",
        })
    }
}

/// One line of the metrics CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub duc: String,
    pub metric: Metric,
    pub model: ModelKind,
    pub value: f64,
    pub value_pct: f64,
}

/// Per-unit scores of one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitScore {
    pub unit_id: String,
    pub model: ModelKind,
    pub duc: Duc,
    pub observed: f64,
    pub aemed: f64,
    pub semean: f64,
    pub crps: f64,
}

pub fn unit_scores(pred: &PredictiveSamples, test: &[UnitRecord]) -> Result<Vec<UnitScore>> {
    let by_id: BTreeMap<&str, &UnitRecord> = test.iter().map(|u| (u.unit_id.as_str(), u)).collect();
    if by_id.len() != pred.unit_ids.len() || pred.unit_ids.iter().any(|id| !by_id.contains_key(id.as_str())) {
        return Err(Error::invalid(format!(
            "{} predictions do not cover the same test units",
            pred.kind
        )));
    }
    pred.unit_ids
        .iter()
        .zip(&pred.rates)
        .map(|(id, s)| {
            let u = by_id[id.as_str()];
            let y = u.rate();
            Ok(UnitScore {
                unit_id: id.clone(),
                model: pred.kind,
                duc: u.duc,
                observed: y,
                aemed: aemed(s, y)?,
                semean: semean(s, y)?,
                crps: crps(s, y)?,
            })
        })
        .collect()
}

/// Per-class averages: mean AEMed, root of mean SEMean, mean CRPS, each
/// also as a percentage of the class's mean observed test rate. Units are
/// aggregated in id order, so input order does not matter.
pub fn aggregate(scores: &[UnitScore]) -> Vec<MetricRow> {
    let mut sorted: Vec<&UnitScore> = scores.iter().collect();
    sorted.sort_by(|a, b| (a.model, a.duc, &a.unit_id).cmp(&(b.model, b.duc, &b.unit_id)));
    let mut rows = Vec::new();
    let models: Vec<ModelKind> = {
        let mut m: Vec<ModelKind> = sorted.iter().map(|s| s.model).collect();
        m.dedup();
        m
    };
    for duc in Duc::ALL {
        for &model in &models {
            let group: Vec<&&UnitScore> = sorted.iter().filter(|s| s.duc == duc && s.model == model).collect();
            if group.is_empty() {
                warn!("no {} test units for the {model} model; class omitted", duc.name());
                continue;
            }
            let n = group.len() as f64;
            let rate = group.iter().map(|s| s.observed).sum::<f64>() / n;
            let values = [
                (Metric::Aemed, group.iter().map(|s| s.aemed).sum::<f64>() / n),
                (Metric::Semean, (group.iter().map(|s| s.semean).sum::<f64>() / n).sqrt()),
                (Metric::Crps, group.iter().map(|s| s.crps).sum::<f64>() / n),
            ];
            for (metric, value) in values {
                rows.push(MetricRow {
                    duc: duc.name().to_string(),
                    metric,
                    model,
                    value,
                    value_pct: if rate > 0.0 { 100.0 * value / rate } else { f64::NAN },
                });
            }
        }
    }
    rows.sort_by(|a, b| {
        (Duc::ALL.iter().position(|d| d.name() == a.duc), a.metric, a.model)
            .cmp(&(Duc::ALL.iter().position(|d| d.name() == b.duc), b.metric, b.model))
    });
    rows
}

/// Scores every model's predictions on the shared test units.
pub fn report(predictions: &[PredictiveSamples], test: &[UnitRecord]) -> Result<Vec<MetricRow>> {
    let mut all = Vec::new();
    for p in predictions {
        all.extend(unit_scores(p, test)?);
    }
    Ok(aggregate(&all))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::oracles::{crps_integral, crps_pairs};

    #[test]
    fn fixtures() {
        assert_eq!(aemed(&[1.0, 2.0, 3.0], 2.0).unwrap(), 0.0);
        assert!((aemed(&[0.01, 0.02, 0.03], 0.05).unwrap() - 0.03).abs() < 1e-12);
        assert_eq!(aemed(&[1.0, 2.0, 3.0, 4.0], 0.0).unwrap(), 2.5);
        assert_eq!(semean(&[2.0, 2.0, 2.0], 2.0).unwrap(), 0.0);
        assert_eq!(semean(&[0.0, 2.0], 2.0).unwrap(), 1.0);
        assert_eq!(crps(&[0.0, 2.0], 1.0).unwrap(), 0.5);
        assert_eq!(crps(&[3.0, 3.0, 3.0], 3.0).unwrap(), 0.0);
        assert!(aemed(&[], 1.0).is_err());
        assert!(crps(&[1.0], 1.0).is_err());
    }

    #[test]
    fn crps_matches_pair_and_integral_oracles() {
        let s = [0.3, -1.2, 2.5, 0.3, 7.0, -0.4];
        for y in [-2.0, 0.3, 1.0, 9.0] {
            let c = crps(&s, y).unwrap();
            assert!((c - crps_pairs(&s, y)).abs() < 1e-12);
            assert!((c - crps_integral(&s, y)).abs() < 1e-12);
        }
    }

    #[test]
    fn percentage_rule() {
        let mk = |id: &str, obs: f64, err: f64| UnitScore {
            unit_id: id.into(),
            model: ModelKind::Bin,
            duc: Duc::Urban,
            observed: obs,
            aemed: err,
            semean: 0.0,
            crps: 0.0,
        };
        let rows = aggregate(&[mk("a", 0.01, 0.001), mk("b", 0.03, 0.003)]);
        let ae = rows.iter().find(|r| r.metric == Metric::Aemed).unwrap();
        assert!((ae.value - 0.002).abs() < 1e-15);
        assert!((ae.value_pct - 10.0).abs() < 1e-9);
        assert_eq!(rows.len(), 3);
    }
}
