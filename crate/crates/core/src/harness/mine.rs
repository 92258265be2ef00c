use super::{
    candidate_names, decimal, document, parse_candidate, require_file, to_pretty_json, write_file,
    CsvTable, HarnessError,
};
use crate::colocation::Candidate;
use crate::miners::{
    generate_candidates, mine_with_ensemble, DistanceRange, MinerConfig, MiningRun, RegionalPattern,
};
use crate::rational::Rational;
use crate::significance::NullEnsemble;
use crate::spatial::{
    load_instances, load_partitions, ColumnSchema, Dataset, FeatureId, PartitionSet,
    DEFAULT_ADJACENCY_TOLERANCE,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeSet;
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MineConfig {
    pub instances: PathBuf,
    pub partitions: PathBuf,
    pub out_dir: PathBuf,
    pub columns: ColumnSchema,
    pub adjacency_tolerance: f64,
    /// Feature-name lists; empty means every qualifying pair (and triple when
    /// `max_candidate_size` is 3).
    pub candidates: Vec<Vec<String>>,
    pub max_candidate_size: usize,
    pub d_lb: f64,
    pub d_ub: f64,
    pub d_step: f64,
    pub miner: MinerConfig,
    /// Directory for cached null ensembles, keyed by their inputs.
    pub null_cache: Option<PathBuf>,
}

impl Default for MineConfig {
    fn default() -> Self {
        MineConfig {
            instances: PathBuf::new(),
            partitions: PathBuf::new(),
            out_dir: PathBuf::from("out"),
            columns: ColumnSchema::default(),
            adjacency_tolerance: DEFAULT_ADJACENCY_TOLERANCE,
            candidates: Vec::new(),
            max_candidate_size: 2,
            d_lb: 0.0,
            d_ub: 0.0,
            d_step: DistanceRange::DEFAULT_STEP,
            miner: MinerConfig::default(),
            null_cache: None,
        }
    }
}

impl MineConfig {
    pub fn distance_range(&self) -> Result<DistanceRange, HarnessError> {
        DistanceRange::new(self.d_lb, self.d_ub, self.d_step)
            .map_err(|e| HarnessError::config(e.to_string()))
    }

    fn validate(&self) -> Result<(), HarnessError> {
        require_file(&self.instances, "instances")?;
        require_file(&self.partitions, "partitions")?;
        self.distance_range()?;
        if !(2..=3).contains(&self.max_candidate_size) {
            return Err(HarnessError::config("max_candidate_size must be 2 or 3"));
        }
        if self.miner.methods.is_empty() {
            return Err(HarnessError::config("at least one method is required"));
        }
        if !(self.adjacency_tolerance >= 0.0) {
            return Err(HarnessError::config(
                "adjacency_tolerance must be non-negative",
            ));
        }
        Ok(())
    }
}

/// Loaded inputs of a mining run.
pub(crate) struct Inputs {
    pub dataset: Dataset,
    pub partitions: PartitionSet,
    pub warnings: Vec<String>,
}

pub(crate) fn load_inputs(
    instances: &std::path::Path,
    partitions: &std::path::Path,
    columns: &ColumnSchema,
    adjacency_tolerance: f64,
) -> Result<Inputs, HarnessError> {
    let mut dataset = load_instances(instances, columns).map_err(|e| HarnessError::Config {
        message: format!("{}: {e}", instances.display()),
        path: Some(instances.to_path_buf()),
    })?;
    let partitions = load_partitions(partitions, dataset.projection())
        .map_err(|e| HarnessError::Config {
            message: format!("{}: {e}", partitions.display()),
            path: Some(partitions.to_path_buf()),
        })?
        .with_adjacency(adjacency_tolerance);
    partitions.assign(&mut dataset);
    let mut warnings = partitions.validation_warnings();
    let outside = dataset
        .instances
        .iter()
        .filter(|i| i.partition.is_none())
        .count();
    if outside > 0 {
        warnings.push(format!(
            "{outside} instances fall outside every partition and are ignored"
        ));
    }
    Ok(Inputs {
        dataset,
        partitions,
        warnings,
    })
}

/// Runs the miners and writes `patterns.json`, `summary.csv` and
/// `counters.csv` under `out_dir`. Returns the written paths.
pub fn run_mine(config: &MineConfig) -> Result<Vec<PathBuf>, HarnessError> {
    config.validate()?;
    let inputs = load_inputs(
        &config.instances,
        &config.partitions,
        &config.columns,
        config.adjacency_tolerance,
    )?;
    let (dataset, partitions) = (&inputs.dataset, &inputs.partitions);
    let replicates = config
        .miner
        .effective_replicates(partitions.len())
        .map_err(|e| HarnessError::config(e.to_string()))?;

    let candidates: Vec<Candidate> = if config.candidates.is_empty() {
        generate_candidates(
            dataset,
            config.max_candidate_size,
            config.miner.min_instances,
        )
    } else {
        config
            .candidates
            .iter()
            .map(|names| parse_candidate(dataset, names))
            .collect::<Result<_, _>>()?
    };
    let mut warnings = inputs.warnings.clone();
    if candidates.is_empty() {
        warnings
            .push("no candidate pattern meets the minimum instance count in any partition".into());
    }
    let distances = config.distance_range()?.values();

    let features: BTreeSet<FeatureId> = candidates
        .iter()
        .flat_map(|c| c.features().iter().copied())
        .collect();
    let ensemble = load_or_build_ensemble(config, dataset, partitions, replicates, &features)?;
    let run = mine_with_ensemble(
        dataset,
        partitions,
        &ensemble,
        &candidates,
        &distances,
        &config.miner,
    )
    .map_err(|e| HarnessError::runtime(e.to_string()))?;

    let body = result_body(&run, dataset, partitions, &warnings);
    let doc = document("mine", config, config.miner.seed, &body);
    let json_path = config.out_dir.join("patterns.json");
    write_file(&json_path, &to_pretty_json(&doc))?;
    let summary_path = config.out_dir.join("summary.csv");
    write_file(
        &summary_path,
        &summary_csv(config, &run, dataset, partitions),
    )?;
    let counters_path = config.out_dir.join("counters.csv");
    write_file(&counters_path, &counters_csv(config, &run, dataset))?;
    Ok(vec![json_path, summary_path, counters_path])
}

fn load_or_build_ensemble(
    config: &MineConfig,
    dataset: &Dataset,
    partitions: &PartitionSet,
    replicates: usize,
    features: &BTreeSet<FeatureId>,
) -> Result<NullEnsemble, HarnessError> {
    let build = || {
        NullEnsemble::generate_for(dataset, partitions, replicates, config.miner.seed, features)
            .map_err(|e| HarnessError::runtime(e.to_string()))
    };
    let Some(dir) = &config.null_cache else {
        return build();
    };
    let key = NullEnsemble::cache_key(dataset, partitions, replicates, config.miner.seed, features);
    let path = dir.join(format!("nulls-{key}.json"));
    if path.is_file() {
        return NullEnsemble::load(&path).map_err(|e| HarnessError::Runtime {
            message: format!("cannot read null cache {}: {e}", path.display()),
            path: Some(path.clone()),
        });
    }
    let ensemble = build()?;
    std::fs::create_dir_all(dir)
        .and_then(|_| ensemble.save(&path))
        .map_err(|e| HarnessError::Runtime {
            message: format!("cannot write null cache {}: {e}", path.display()),
            path: Some(path.clone()),
        })?;
    Ok(ensemble)
}

fn label(partitions: &PartitionSet, id: crate::spatial::PartitionId) -> &str {
    &partitions.get(id).label
}

fn pattern_json(p: &RegionalPattern, dataset: &Dataset, partitions: &PartitionSet) -> Value {
    json!({
        "method": p.method,
        "candidate": candidate_names(dataset, &p.candidate),
        "d": p.d,
        "largest": p.largest,
        "n": p.n,
        "partitions": p.per_partition.iter().map(|a| json!({
            "partition": label(partitions, a.partition),
            "pi": a.pi,
            "p_value": a.p_value,
        })).collect::<Vec<_>>(),
        "region_pi": p.region_pi,
        "region_p_value": p.region_p_value,
        "final_threshold": p.final_threshold,
        "warnings": p.warnings,
    })
}

fn result_body(
    run: &MiningRun,
    dataset: &Dataset,
    partitions: &PartitionSet,
    warnings: &[String],
) -> Value {
    let mut patterns = Vec::new();
    let mut counters = Vec::new();
    let mut atomic = Vec::new();
    let mut job_warnings: Vec<String> = warnings.to_vec();
    for job in &run.jobs {
        let names = candidate_names(dataset, &job.candidate);
        atomic.push(json!({
            "candidate": names,
            "d": job.d,
            "tests": job.atomic.iter().map(|a| json!({
                "partition": label(partitions, a.partition),
                "pi": a.pi,
                "p_value": a.p_value,
                "exceed_count": a.exceed_count,
                "significant": a.significant,
            })).collect::<Vec<_>>(),
        }));
        job_warnings.extend(job.warnings.iter().cloned());
        for o in &job.outcomes {
            patterns.extend(
                o.patterns
                    .iter()
                    .map(|p| pattern_json(p, dataset, partitions)),
            );
            counters.push(json!({
                "method": o.method,
                "candidate": names,
                "d": job.d,
                "significance_tests": o.counters.significance_tests,
                "pi_computations": o.counters.pi_computations,
                "threshold_checks": o.counters.threshold_checks,
                "threshold_history": o.counters.threshold_history,
            }));
        }
    }
    let methods: BTreeSet<_> = run
        .jobs
        .iter()
        .flat_map(|j| j.outcomes.iter().map(|o| o.method))
        .collect();
    let totals: serde_json::Map<String, Value> = methods
        .into_iter()
        .map(|m| {
            let c = run.total_counters(m);
            (
                m.name().to_string(),
                json!({
                    "significance_tests": c.significance_tests,
                    "pi_computations": c.pi_computations,
                    "threshold_checks": c.threshold_checks,
                }),
            )
        })
        .collect();
    json!({
        "crs": partitions.crs_note,
        "partitions": partitions.partitions().iter().map(|p| json!({
            "id": p.id.0,
            "label": p.label,
            "neighbors": p.neighbors.iter().map(|n| label(partitions, *n)).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "alpha": run.alpha,
        "replicates": run.replicates,
        "patterns": patterns,
        "atomic": atomic,
        "counters": counters,
        "totals": totals,
        "warnings": job_warnings,
    })
}

fn opt_decimal(r: Option<Rational>) -> String {
    r.map(decimal).unwrap_or_default()
}

fn summary_csv(
    config: &MineConfig,
    run: &MiningRun,
    dataset: &Dataset,
    partitions: &PartitionSet,
) -> String {
    let mut t = CsvTable::new(
        config,
        config.miner.seed,
        &[
            "method",
            "candidate",
            "d",
            "largest",
            "n",
            "partitions",
            "partition_pi_p",
            "region_pi",
            "region_p_value",
            "final_threshold",
        ],
    );
    for job in &run.jobs {
        for o in &job.outcomes {
            for p in &o.patterns {
                let labels: Vec<&str> = p.region.iter().map(|g| label(partitions, *g)).collect();
                let pairs: Vec<String> = p
                    .per_partition
                    .iter()
                    .map(|a| {
                        format!(
                            "{}:{}:{}",
                            label(partitions, a.partition),
                            decimal(a.pi),
                            decimal(a.p_value)
                        )
                    })
                    .collect();
                t.row(&[
                    p.method.to_string(),
                    candidate_names(dataset, &p.candidate).join("+"),
                    p.d.to_string(),
                    p.largest.to_string(),
                    p.n.to_string(),
                    labels.join(";"),
                    pairs.join(";"),
                    opt_decimal(p.region_pi),
                    opt_decimal(p.region_p_value),
                    opt_decimal(p.final_threshold),
                ]);
            }
        }
    }
    t.finish()
}

fn counters_csv(config: &MineConfig, run: &MiningRun, dataset: &Dataset) -> String {
    let mut t = CsvTable::new(
        config,
        config.miner.seed,
        &[
            "method",
            "candidate",
            "d",
            "significance_tests",
            "pi_computations",
            "threshold_checks",
            "threshold_history",
        ],
    );
    for job in &run.jobs {
        for o in &job.outcomes {
            let history: Vec<String> = o
                .counters
                .threshold_history
                .iter()
                .map(ToString::to_string)
                .collect();
            t.row(&[
                o.method.to_string(),
                candidate_names(dataset, &job.candidate).join("+"),
                job.d.to_string(),
                o.counters.significance_tests.to_string(),
                o.counters.pi_computations.to_string(),
                o.counters.threshold_checks.to_string(),
                history.join(";"),
            ]);
        }
    }
    t.finish()
}
