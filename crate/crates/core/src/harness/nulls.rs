use super::mine::load_inputs;
use super::{document, require_file, to_pretty_json, write_file, CsvTable, HarnessError};
use crate::significance::{pcf_up_to, NullEnsemble, PCF_CLUSTER_THRESHOLD};
use crate::spatial::{ColumnSchema, FeatureId, Point, DEFAULT_ADJACENCY_TOLERANCE};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::collections::BTreeSet;
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateNullsConfig {
    pub instances: PathBuf,
    pub partitions: PathBuf,
    pub columns: ColumnSchema,
    pub adjacency_tolerance: f64,
    /// Features to check; empty means all.
    pub features: Vec<String>,
    pub d: f64,
    /// Null replicates used to report the CSR reference value.
    pub replicates: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for ValidateNullsConfig {
    fn default() -> Self {
        ValidateNullsConfig {
            instances: PathBuf::new(),
            partitions: PathBuf::new(),
            columns: ColumnSchema::default(),
            adjacency_tolerance: DEFAULT_ADJACENCY_TOLERANCE,
            features: Vec::new(),
            d: 0.0,
            replicates: 19,
            seed: 0,
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Pair correlation of every (partition, feature) up to `d`, next to the mean
/// value over CSR replicates of the same partition and count. Writes
/// `nulls.json` and `nulls.csv`.
pub fn run_validate_nulls(config: &ValidateNullsConfig) -> Result<Vec<PathBuf>, HarnessError> {
    require_file(&config.instances, "instances")?;
    require_file(&config.partitions, "partitions")?;
    if !(config.d.is_finite() && config.d > 0.0) {
        return Err(HarnessError::config(format!(
            "d must be positive, got {}",
            config.d
        )));
    }
    if config.replicates == 0 {
        return Err(HarnessError::config("replicates must be at least 1"));
    }
    let inputs = load_inputs(
        &config.instances,
        &config.partitions,
        &config.columns,
        config.adjacency_tolerance,
    )?;
    let (dataset, partitions) = (&inputs.dataset, &inputs.partitions);
    let features: BTreeSet<FeatureId> = if config.features.is_empty() {
        dataset.features().iter().map(|f| f.id).collect()
    } else {
        config
            .features
            .iter()
            .map(|n| {
                dataset.feature_id(n).ok_or_else(|| {
                    HarnessError::config(format!(
                        "feature `{n}` does not occur in the instances file"
                    ))
                })
            })
            .collect::<Result<_, _>>()?
    };
    let ensemble = NullEnsemble::generate_for(
        dataset,
        partitions,
        config.replicates,
        config.seed,
        &features,
    )
    .map_err(|e| HarnessError::runtime(e.to_string()))?;

    let mut rows = Vec::new();
    let mut warnings = inputs.warnings.clone();
    let mut csv = CsvTable::new(
        config,
        config.seed,
        &[
            "partition",
            "feature",
            "count",
            "pcf",
            "null_mean_pcf",
            "clustered",
        ],
    );
    for part in partitions.partitions() {
        let area = part.shape.area();
        for &f in &features {
            let pts: Vec<Point> = dataset
                .instances
                .iter()
                .filter(|i| i.partition == Some(part.id) && i.feature == f)
                .map(|i| i.location)
                .collect();
            if pts.len() < 2 {
                continue;
            }
            let g = pcf_up_to(&pts, area, config.d)
                .map_err(|e| HarnessError::runtime(e.to_string()))?;
            let mut null_sum = 0.0;
            for i in 0..ensemble.replicates() {
                let sim: Vec<Point> = ensemble
                    .simulation(part.id, i)
                    .unwrap_or(&[])
                    .iter()
                    .filter(|x| x.feature == f)
                    .map(|x| x.location)
                    .collect();
                null_sum += pcf_up_to(&sim, area, config.d)
                    .map_err(|e| HarnessError::runtime(e.to_string()))?;
            }
            let null_mean = null_sum / ensemble.replicates() as f64;
            let clustered = g > PCF_CLUSTER_THRESHOLD;
            let name = dataset.feature_name(f);
            if clustered {
                warnings.push(format!(
                    "feature {name} in partition {} looks clustered at d={} (pcf {g:.3} > {PCF_CLUSTER_THRESHOLD})",
                    part.label, config.d
                ));
            }
            csv.row(&[
                part.label.clone(),
                name.to_string(),
                pts.len().to_string(),
                format!("{g:.6}"),
                format!("{null_mean:.6}"),
                clustered.to_string(),
            ]);
            rows.push(json!({
                "partition": part.label,
                "feature": name,
                "count": pts.len(),
                "pcf": g,
                "null_mean_pcf": null_mean,
                "clustered": clustered,
            }));
        }
    }
    let body = json!({ "d": config.d, "threshold": PCF_CLUSTER_THRESHOLD, "rows": rows, "warnings": warnings });
    let json_path = config.out_dir.join("nulls.json");
    write_file(
        &json_path,
        &to_pretty_json(&document("validate-nulls", config, config.seed, &body)),
    )?;
    let csv_path = config.out_dir.join("nulls.csv");
    write_file(&csv_path, &csv.finish())?;
    Ok(vec![json_path, csv_path])
}
