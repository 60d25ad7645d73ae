//! Draw and summary files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::diagnostics::{summarize, ParameterSummary};
use super::PosteriorDraws;
use crate::error::{Error, Result};
use crate::table;

/// Writes `chain,iteration,<params...>`, both indices 1-based.
pub fn write_draws(path: &Path, draws: &PosteriorDraws) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let mut header = vec!["chain".to_string(), "iteration".to_string()];
    header.extend(draws.names.iter().cloned());
    w.write_record(&header)?;
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for c in 0..draws.chains {
        for i in 0..draws.iters {
            row.clear();
            row.push((c + 1).to_string());
            row.push((i + 1).to_string());
            row.extend(draws.draw(c, i).iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_draws(path: &Path) -> Result<PosteriorDraws> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let headers = r
        .headers()
        .map_err(|e| Error::schema(path, 1, e.to_string()))?
        .clone();
    if headers.len() < 3 || &headers[0] != "chain" || &headers[1] != "iteration" {
        return Err(Error::schema(path, 1, "expected header chain,iteration,<parameters>"));
    }
    let names: Vec<String> = headers.iter().skip(2).map(String::from).collect();
    let mut values = Vec::new();
    let mut per_chain: Vec<usize> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| {
            Error::schema(path, e.position().map_or(0, |p| p.line()), e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let chain: usize = rec[0]
            .parse()
            .map_err(|_| Error::schema(path, line, format!("bad chain index `{}`", &rec[0])))?;
        if chain == 0 || chain > per_chain.len() + 1 || chain < per_chain.len() {
            return Err(Error::schema(path, line, "chains must be numbered 1.. in order"));
        }
        if chain > per_chain.len() {
            per_chain.push(0);
        }
        per_chain[chain - 1] += 1;
        for field in rec.iter().skip(2) {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::schema(path, line, format!("bad number `{field}`")))?;
            values.push(v);
        }
    }
    let iters = per_chain.first().copied().unwrap_or(0);
    if iters == 0 || per_chain.iter().any(|&n| n != iters) {
        return Err(Error::schema(path, 1, "chains must be non-empty and of equal length"));
    }
    PosteriorDraws::new(names, per_chain.len(), iters, values)
}

pub fn write_sampler_stats(path: &Path, draws: &PosteriorDraws) -> Result<()> {
    let per = draws.iters.max(1);
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record([
        "chain",
        "iteration",
        "accept_stat",
        "step_size",
        "tree_depth",
        "n_leapfrog",
        "divergent",
        "energy",
        "lp",
    ])?;
    for (k, s) in draws.stats.iter().enumerate() {
        w.write_record([
            (k / per + 1).to_string(),
            (k % per + 1).to_string(),
            s.accept_stat.to_string(),
            s.step_size.to_string(),
            s.tree_depth.to_string(),
            s.n_leapfrog.to_string(),
            u8::from(s.divergent).to_string(),
            s.energy.to_string(),
            s.lp.to_string(),
        ])?;
    }
    w.into_inner()
        .map_err(|e| Error::invalid(e.to_string()))?
        .flush()
        .map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrawSummary {
    pub chains: usize,
    pub iterations: usize,
    pub divergences: usize,
    pub parameters: Vec<ParameterSummary>,
}

impl DrawSummary {
    pub fn from_draws(draws: &PosteriorDraws) -> Self {
        DrawSummary {
            chains: draws.chains,
            iterations: draws.iters,
            divergences: draws.divergences(),
            parameters: summarize(draws),
        }
    }

    pub fn get(&self, name: &str) -> Option<&ParameterSummary> {
        self.parameters.iter().find(|p| p.name == name)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        table::write_json(path, self)
    }
}
