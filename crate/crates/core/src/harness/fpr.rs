use super::{
    derive_seed, document, parse_candidate, to_pretty_json, write_file, CsvTable, HarnessError,
};
use crate::colocation::Candidate;
use crate::miners::{mine, Method, MinerConfig};
use crate::synthgen::{generate, score_fpr, FprScore, SynthConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

pub const MIN_FPR_TRIALS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FprConfig {
    pub trials: usize,
    pub rows: u32,
    pub cols: u32,
    pub cell_size: f64,
    pub features: Vec<String>,
    /// CSR instances of every feature per partition.
    pub noise: usize,
    pub candidates: Vec<Vec<String>>,
    pub d: f64,
    pub miner: MinerConfig,
    pub out_dir: PathBuf,
}

impl Default for FprConfig {
    fn default() -> Self {
        let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        FprConfig {
            trials: 50,
            rows: 10,
            cols: 10,
            cell_size: 1000.0,
            features: names(&["A", "B", "C"]),
            noise: 20,
            candidates: vec![
                names(&["A", "B", "C"]),
                names(&["A", "B"]),
                names(&["B", "C"]),
                names(&["A", "C"]),
            ],
            d: 100.0,
            miner: MinerConfig::default(),
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Mean false positive rate of both miners for one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FprRow {
    pub candidate: Vec<String>,
    pub fpr_ssrcm: f64,
    pub fpr_multcomp: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, Serialize)]
struct TrialScore {
    trial: usize,
    seed: u64,
    candidate: Vec<String>,
    ssrcm: FprScore,
    multcomp: FprScore,
}

impl FprConfig {
    fn synth(&self, trial: usize) -> SynthConfig {
        SynthConfig {
            rows: self.rows,
            cols: self.cols,
            cell_size: self.cell_size,
            features: self.features.clone(),
            l_max: self.rows as usize * self.cols as usize,
            planted: Vec::new(),
            d_g: self.d.min(self.cell_size / 2.0),
            noise: self.noise,
            seed: derive_seed(self.miner.seed, trial as u64),
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if self.trials < MIN_FPR_TRIALS {
            return Err(HarnessError::config(format!(
                "fpr needs at least {MIN_FPR_TRIALS} trials, got {}",
                self.trials
            )));
        }
        if self.candidates.is_empty() {
            return Err(HarnessError::config("fpr needs at least one candidate"));
        }
        if !(self.d.is_finite() && self.d > 0.0) {
            return Err(HarnessError::config(format!(
                "d must be positive, got {}",
                self.d
            )));
        }
        self.synth(0)
            .validate()
            .map_err(|e| HarnessError::config(e.to_string()))?;
        self.miner
            .effective_replicates(self.rows as usize * self.cols as usize)
            .map_err(|e| HarnessError::config(e.to_string()))?;
        Ok(())
    }
}

/// Mines pure-CSR synthetic data `trials` times and scores both miners.
/// Writes `fpr.csv` and `fpr.json`; returns the table rows and paths.
pub fn run_fpr(config: &FprConfig) -> Result<(Vec<FprRow>, Vec<PathBuf>), HarnessError> {
    config.validate()?;
    let miner = MinerConfig {
        methods: vec![Method::Ssrcm, Method::MultComp],
        pcf_check: false,
        ..config.miner.clone()
    };
    let per_trial: Vec<Vec<TrialScore>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let synth = config.synth(trial);
            let out = generate(&synth).map_err(|e| HarnessError::runtime(e.to_string()))?;
            let candidates: Vec<Candidate> = config
                .candidates
                .iter()
                .map(|names| parse_candidate(&out.dataset, names))
                .collect::<Result<_, _>>()?;
            let miner = MinerConfig {
                seed: derive_seed(synth.seed, 1),
                ..miner.clone()
            };
            let run = mine(
                &out.dataset,
                &out.partitions,
                &candidates,
                &[config.d],
                &miner,
            )
            .map_err(|e| HarnessError::runtime(format!("trial {trial}: {e}")))?;
            let scores = candidates
                .iter()
                .zip(&config.candidates)
                .map(|(c, names)| {
                    let score = |m: Method| {
                        let patterns: Vec<_> = run
                            .jobs
                            .iter()
                            .filter(|j| &j.candidate == c)
                            .filter_map(|j| j.outcome(m))
                            .flat_map(|o| o.patterns.iter().cloned())
                            .collect();
                        score_fpr(
                            &patterns,
                            &out.truth,
                            &out.dataset,
                            &out.partitions,
                            std::slice::from_ref(c),
                        )
                    };
                    TrialScore {
                        trial,
                        seed: synth.seed,
                        candidate: names.clone(),
                        ssrcm: score(Method::Ssrcm),
                        multcomp: score(Method::MultComp),
                    }
                })
                .collect();
            Ok(scores)
        })
        .collect::<Result<_, HarnessError>>()?;

    let rows: Vec<FprRow> = config
        .candidates
        .iter()
        .enumerate()
        .map(|(k, names)| {
            let mean = |f: &dyn Fn(&TrialScore) -> f64| {
                per_trial.iter().map(|t| f(&t[k])).sum::<f64>() / config.trials as f64
            };
            FprRow {
                candidate: names.clone(),
                fpr_ssrcm: mean(&|t| t.ssrcm.fpr().to_f64()),
                fpr_multcomp: mean(&|t| t.multcomp.fpr().to_f64()),
                trials: config.trials,
            }
        })
        .collect();

    let mut csv = CsvTable::new(
        config,
        config.miner.seed,
        &["candidate", "fpr_ssrcm", "fpr_multcomp", "trials"],
    );
    for r in &rows {
        csv.row(&[
            r.candidate.join("+"),
            format!("{:.6}", r.fpr_ssrcm),
            format!("{:.6}", r.fpr_multcomp),
            r.trials.to_string(),
        ]);
    }
    let csv_path = config.out_dir.join("fpr.csv");
    write_file(&csv_path, &csv.finish())?;
    let trials: Vec<&TrialScore> = per_trial.iter().flatten().collect();
    let body = serde_json::json!({ "table": rows, "trials": trials });
    let json_path = config.out_dir.join("fpr.json");
    write_file(
        &json_path,
        &to_pretty_json(&document("fpr", config, config.miner.seed, &body)),
    )?;
    Ok((rows, vec![csv_path, json_path]))
}
