use super::{derive_seed, document, to_pretty_json, write_file, CsvTable, HarnessError};
use crate::colocation::Candidate;
use crate::miners::{mine_with_ensemble, Method, MinerConfig};
use crate::significance::NullEnsemble;
use crate::synthgen::{generate, PlantedSpec, SynthConfig};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchAxis {
    /// Planted circles per partition.
    ColocationInstances,
    /// Number of partitions (grid cells).
    Regions,
    /// CSR noise instances per feature per partition.
    FeatureInstances,
}

impl std::str::FromStr for BenchAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "colocation_instances" => Ok(BenchAxis::ColocationInstances),
            "regions" => Ok(BenchAxis::Regions),
            "feature_instances" => Ok(BenchAxis::FeatureInstances),
            other => Err(format!(
                "unknown axis `{other}` (expected colocation_instances, regions or feature_instances)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub axis: BenchAxis,
    pub values: Vec<u32>,
    /// Timed repetitions per (value, method); the median is reported.
    pub runs: usize,
    /// Grid used when the axis is not `regions`.
    pub rows: u32,
    pub cols: u32,
    pub cell_size: f64,
    pub candidate: Vec<String>,
    /// Share of the partitions covered by the planted region.
    pub planted_fraction: f64,
    pub instances_per_cell: usize,
    pub noise: usize,
    pub d_g: f64,
    pub d: f64,
    pub miner: MinerConfig,
    pub out_dir: PathBuf,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            axis: BenchAxis::Regions,
            values: vec![4, 16, 36, 64],
            runs: 3,
            rows: 4,
            cols: 4,
            cell_size: 1000.0,
            candidate: vec!["A".into(), "B".into()],
            planted_fraction: 0.25,
            instances_per_cell: 10,
            noise: 10,
            d_g: 50.0,
            d: 50.0,
            miner: MinerConfig::default(),
            out_dir: PathBuf::from("out"),
        }
    }
}

/// `rows x cols == n` with the most square shape.
fn grid_for(n: u32) -> (u32, u32) {
    let mut rows = (n as f64).sqrt().floor() as u32;
    while rows > 1 && !n.is_multiple_of(rows) {
        rows -= 1;
    }
    (rows.max(1), n / rows.max(1))
}

impl BenchmarkConfig {
    fn synth(&self, value: u32, index: usize) -> SynthConfig {
        let (mut rows, mut cols) = (self.rows, self.cols);
        let (mut circles, mut noise) = (self.instances_per_cell, self.noise);
        match self.axis {
            BenchAxis::Regions => (rows, cols) = grid_for(value),
            BenchAxis::ColocationInstances => circles = value as usize,
            BenchAxis::FeatureInstances => noise = value as usize,
        }
        let n = rows * cols;
        let planted = ((n as f64 * self.planted_fraction).round() as u32).clamp(1, n);
        SynthConfig {
            rows,
            cols,
            cell_size: self.cell_size,
            features: self.candidate.clone(),
            l_max: n as usize,
            planted: if circles == 0 {
                Vec::new()
            } else {
                vec![PlantedSpec {
                    region: (0..planted).collect(),
                    candidate: self.candidate.clone(),
                    instances_per_cell: circles,
                }]
            },
            d_g: self.d_g,
            noise,
            seed: derive_seed(self.miner.seed, index as u64),
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if self.values.is_empty() {
            return Err(HarnessError::config(
                "benchmark needs at least one axis value",
            ));
        }
        if self.runs == 0 {
            return Err(HarnessError::config("runs must be at least 1"));
        }
        if self.axis == BenchAxis::Regions && self.values.contains(&0) {
            return Err(HarnessError::config("region counts must be positive"));
        }
        if !(self.planted_fraction > 0.0 && self.planted_fraction <= 1.0) {
            return Err(HarnessError::config("planted_fraction must lie in (0, 1]"));
        }
        if !(self.d.is_finite() && self.d > 0.0) {
            return Err(HarnessError::config(format!(
                "d must be positive, got {}",
                self.d
            )));
        }
        for (i, &v) in self.values.iter().enumerate() {
            let s = self.synth(v, i);
            s.validate()
                .map_err(|e| HarnessError::config(format!("axis value {v}: {e}")))?;
            self.miner
                .effective_replicates(s.partition_count())
                .map_err(|e| HarnessError::config(e.to_string()))?;
        }
        Ok(())
    }
}

/// Runs both miners on identical seeded datasets for every axis value.
/// Writes `benchmark.csv` (with wall-clock medians) and `benchmark.json`
/// (counters only, reproducible).
pub fn run_benchmark(config: &BenchmarkConfig) -> Result<Vec<PathBuf>, HarnessError> {
    config.validate()?;
    let mut csv = CsvTable::new(
        config,
        config.miner.seed,
        &[
            "axis",
            "value",
            "method",
            "partitions",
            "wall_ms_median",
            "significance_tests",
            "pi_computations",
            "threshold_checks",
            "largest_region",
        ],
    );
    let axis = serde_json::to_value(config.axis).expect("axis serializes");
    let axis = axis.as_str().unwrap_or_default().to_string();
    let mut records = Vec::new();
    for (i, &value) in config.values.iter().enumerate() {
        let synth = config.synth(value, i);
        let out = generate(&synth).map_err(|e| HarnessError::config(e.to_string()))?;
        let ids: Vec<_> = config
            .candidate
            .iter()
            .map(|n| out.dataset.feature_id(n).expect("synthetic features"))
            .collect();
        let candidate = Candidate::new(ids).map_err(|e| HarnessError::config(e.to_string()))?;
        let replicates = config
            .miner
            .effective_replicates(out.partitions.len())
            .map_err(|e| HarnessError::config(e.to_string()))?;
        let ensemble =
            NullEnsemble::generate(&out.dataset, &out.partitions, replicates, config.miner.seed)
                .map_err(|e| HarnessError::runtime(e.to_string()))?;
        for method in [Method::Ssrcm, Method::MultComp] {
            let miner = MinerConfig {
                methods: vec![method],
                pcf_check: false,
                ..config.miner.clone()
            };
            let mut times = Vec::with_capacity(config.runs);
            let mut last = None;
            for _ in 0..config.runs {
                let t0 = Instant::now();
                let run = mine_with_ensemble(
                    &out.dataset,
                    &out.partitions,
                    &ensemble,
                    std::slice::from_ref(&candidate),
                    &[config.d],
                    &miner,
                )
                .map_err(|e| HarnessError::runtime(e.to_string()))?;
                times.push(t0.elapsed().as_secs_f64() * 1e3);
                last = Some(run);
            }
            times.sort_by(f64::total_cmp);
            let median = times[times.len() / 2];
            let run = last.expect("runs >= 1");
            let c = run.total_counters(method);
            let largest = run.jobs[0]
                .outcome(method)
                .and_then(|o| o.largest())
                .map_or(0, |p| p.n);
            csv.row(&[
                axis.clone(),
                value.to_string(),
                method.to_string(),
                out.partitions.len().to_string(),
                format!("{median:.3}"),
                c.significance_tests.to_string(),
                c.pi_computations.to_string(),
                c.threshold_checks.to_string(),
                largest.to_string(),
            ]);
            records.push(json!({
                "axis": axis,
                "value": value,
                "method": method,
                "partitions": out.partitions.len(),
                "significance_tests": c.significance_tests,
                "pi_computations": c.pi_computations,
                "threshold_checks": c.threshold_checks,
                "largest_region": largest,
            }));
        }
    }
    let csv_path = config.out_dir.join("benchmark.csv");
    write_file(&csv_path, &csv.finish())?;
    let json_path = config.out_dir.join("benchmark.json");
    let body = json!({ "rows": records });
    write_file(
        &json_path,
        &to_pretty_json(&document("benchmark", config, config.miner.seed, &body)),
    )?;
    Ok(vec![csv_path, json_path])
}
