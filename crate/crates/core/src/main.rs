use clap::{Args, Parser, Subcommand};
use regcoloc::harness::{
    run_benchmark, run_fpr, run_mine, run_synth, run_validate_nulls, BenchAxis, BenchmarkConfig,
    FprConfig, HarnessError, MineConfig, SynthCommandConfig, ValidateNullsConfig,
};
use regcoloc::miners::{Method, MinerConfig};
use regcoloc::rational::Rational;
use regcoloc::spatial::{ColumnSchema, CoordMode};
use regcoloc::synthgen::PlantedSpec;
use serde::de::DeserializeOwned;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "regcoloc",
    version,
    about = "Regional colocation mining with Monte Carlo significance tests"
)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine regional colocations from an instances CSV and a partitions GeoJSON.
    Mine(MineArgs),
    /// Time both miners over a sweep of synthetic datasets.
    Benchmark(BenchArgs),
    /// False positive rates of both miners on pure-CSR synthetic data.
    Fpr(FprArgs),
    /// Write a synthetic dataset with planted patterns.
    Synth(SynthArgs),
    /// Pair correlation diagnostics of the observed features against CSR.
    ValidateNulls(NullsArgs),
}

#[derive(Args, Default)]
struct MinerArgs {
    /// Significance level, e.g. 0.05 or 1/20.
    #[arg(long)]
    alpha: Option<Rational>,
    /// Monte Carlo replicates R.
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Minimum instances of every candidate feature for a partition to be tested.
    #[arg(long)]
    min_instances: Option<usize>,
    /// ssrcm, multcomp or both.
    #[arg(long)]
    method: Option<String>,
    /// Raise R so that alpha divided by the partition count stays attainable.
    #[arg(long)]
    auto_scale_replicates: bool,
}

impl MinerArgs {
    fn apply(&self, m: &mut MinerConfig) -> Result<(), HarnessError> {
        set(&mut m.alpha, self.alpha);
        set(&mut m.replicates, self.replicates);
        set(&mut m.seed, self.seed);
        set(&mut m.min_instances, self.min_instances);
        if let Some(method) = &self.method {
            m.methods = match method.as_str() {
                "both" => vec![Method::Ssrcm, Method::MultComp],
                other => vec![other.parse().map_err(HarnessError::config)?],
            };
        }
        if self.auto_scale_replicates {
            m.auto_scale_replicates = true;
        }
        Ok(())
    }
}

#[derive(Args, Default)]
struct InputArgs {
    #[arg(long)]
    instances: Option<PathBuf>,
    #[arg(long)]
    partitions: Option<PathBuf>,
    /// `planar` (meters) or `lonlat` (degrees, projected locally).
    #[arg(long)]
    coords: Option<String>,
    /// Reference latitude for `lonlat`; defaults to the mean latitude.
    #[arg(long)]
    ref_lat: Option<f64>,
    #[arg(long)]
    feature_col: Option<String>,
    #[arg(long)]
    x_col: Option<String>,
    #[arg(long)]
    y_col: Option<String>,
    /// Minimum shared boundary length for two partitions to be adjacent.
    #[arg(long)]
    adjacency_tolerance: Option<f64>,
}

impl InputArgs {
    fn apply(
        &self,
        instances: &mut PathBuf,
        partitions: &mut PathBuf,
        columns: &mut ColumnSchema,
        tolerance: &mut f64,
    ) -> Result<(), HarnessError> {
        set(instances, self.instances.clone());
        set(partitions, self.partitions.clone());
        set(&mut columns.feature, self.feature_col.clone());
        set(&mut columns.x, self.x_col.clone());
        set(&mut columns.y, self.y_col.clone());
        set(tolerance, self.adjacency_tolerance);
        match self.coords.as_deref() {
            None if self.ref_lat.is_some() => {
                columns.coords = CoordMode::LonLat {
                    ref_lat_deg: self.ref_lat,
                };
            }
            None => {}
            Some("planar") => columns.coords = CoordMode::Planar,
            Some("lonlat") => {
                columns.coords = CoordMode::LonLat {
                    ref_lat_deg: self.ref_lat,
                }
            }
            Some(other) => {
                return Err(HarnessError::config(format!(
                    "unknown coords `{other}` (planar or lonlat)"
                )))
            }
        }
        Ok(())
    }
}

#[derive(Args)]
struct MineArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Comma-separated feature names; repeat for several candidates.
    #[arg(long = "candidate")]
    candidates: Vec<String>,
    /// Largest generated candidate size when none is given (2 or 3).
    #[arg(long)]
    max_size: Option<usize>,
    /// Single neighbor distance (sets both bounds).
    #[arg(long)]
    d: Option<f64>,
    #[arg(long)]
    d_lb: Option<f64>,
    #[arg(long)]
    d_ub: Option<f64>,
    #[arg(long)]
    d_step: Option<f64>,
    #[command(flatten)]
    miner: MinerArgs,
    /// Skip the pair correlation clustering check.
    #[arg(long)]
    no_pcf_check: bool,
    /// Directory caching null ensembles between runs.
    #[arg(long)]
    null_cache: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// colocation_instances, regions or feature_instances.
    #[arg(long)]
    axis: Option<BenchAxis>,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',')]
    values: Vec<u32>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    d: Option<f64>,
    #[arg(long)]
    d_g: Option<f64>,
    #[command(flatten)]
    miner: MinerArgs,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct FprArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    rows: Option<u32>,
    #[arg(long)]
    cols: Option<u32>,
    #[arg(long)]
    noise: Option<usize>,
    #[arg(long = "candidate")]
    candidates: Vec<String>,
    #[arg(long)]
    d: Option<f64>,
    #[command(flatten)]
    miner: MinerArgs,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    rows: Option<u32>,
    #[arg(long)]
    cols: Option<u32>,
    #[arg(long)]
    cell_size: Option<f64>,
    /// Comma-separated feature names.
    #[arg(long)]
    features: Option<String>,
    #[arg(long)]
    l_max: Option<usize>,
    /// Planted pattern as `REGION:FEATURES:COUNT`, e.g. `0,1,3:A,B:4`.
    #[arg(long = "plant")]
    planted: Vec<String>,
    #[arg(long)]
    d_g: Option<f64>,
    #[arg(long)]
    noise: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    stem: Option<String>,
}

#[derive(Args)]
struct NullsArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    features: Option<String>,
    #[arg(long)]
    d: Option<f64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn names(list: &str) -> Vec<String> {
    list.split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, HarnessError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config {
        message: format!("cannot read config {}: {e}", path.display()),
        path: Some(path.to_path_buf()),
    })?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Config {
        message: format!("invalid config {}: {e}", path.display()),
        path: Some(path.to_path_buf()),
    })
}

fn parse_plant(arg: &str) -> Result<PlantedSpec, HarnessError> {
    let bad = || {
        HarnessError::config(format!(
            "bad --plant `{arg}`, expected REGION:FEATURES:COUNT"
        ))
    };
    let parts: Vec<&str> = arg.split(':').collect();
    let [region, features, count] = parts[..] else {
        return Err(bad());
    };
    let region = region
        .split(',')
        .map(|s| s.trim().parse::<u32>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| bad())?;
    Ok(PlantedSpec {
        region,
        candidate: names(features),
        instances_per_cell: count.trim().parse().map_err(|_| bad())?,
    })
}

fn mine(a: MineArgs) -> Result<Vec<PathBuf>, HarnessError> {
    let mut c: MineConfig = load_config(a.config.as_deref())?;
    a.input.apply(
        &mut c.instances,
        &mut c.partitions,
        &mut c.columns,
        &mut c.adjacency_tolerance,
    )?;
    set(&mut c.out_dir, a.out_dir);
    if !a.candidates.is_empty() {
        c.candidates = a.candidates.iter().map(|s| names(s)).collect();
    }
    set(&mut c.max_candidate_size, a.max_size);
    if let Some(d) = a.d {
        c.d_lb = d;
        c.d_ub = d;
    }
    set(&mut c.d_lb, a.d_lb);
    set(&mut c.d_ub, a.d_ub);
    set(&mut c.d_step, a.d_step);
    a.miner.apply(&mut c.miner)?;
    if a.no_pcf_check {
        c.miner.pcf_check = false;
    }
    if a.null_cache.is_some() {
        c.null_cache = a.null_cache;
    }
    run_mine(&c)
}

fn benchmark(a: BenchArgs) -> Result<Vec<PathBuf>, HarnessError> {
    let mut c: BenchmarkConfig = load_config(a.config.as_deref())?;
    set(&mut c.axis, a.axis);
    if !a.values.is_empty() {
        c.values = a.values;
    }
    set(&mut c.runs, a.runs);
    set(&mut c.d, a.d);
    set(&mut c.d_g, a.d_g);
    a.miner.apply(&mut c.miner)?;
    set(&mut c.out_dir, a.out_dir);
    run_benchmark(&c)
}

fn fpr(a: FprArgs) -> Result<Vec<PathBuf>, HarnessError> {
    let mut c: FprConfig = load_config(a.config.as_deref())?;
    set(&mut c.trials, a.trials);
    set(&mut c.rows, a.rows);
    set(&mut c.cols, a.cols);
    set(&mut c.noise, a.noise);
    if !a.candidates.is_empty() {
        c.candidates = a.candidates.iter().map(|s| names(s)).collect();
    }
    set(&mut c.d, a.d);
    a.miner.apply(&mut c.miner)?;
    set(&mut c.out_dir, a.out_dir);
    run_fpr(&c).map(|(_, files)| files)
}

fn synth(a: SynthArgs) -> Result<Vec<PathBuf>, HarnessError> {
    let mut c: SynthCommandConfig = load_config(a.config.as_deref())?;
    let s = &mut c.synth;
    set(&mut s.rows, a.rows);
    set(&mut s.cols, a.cols);
    set(&mut s.cell_size, a.cell_size);
    set(&mut s.features, a.features.as_deref().map(names));
    set(&mut s.l_max, a.l_max);
    if !a.planted.is_empty() {
        s.planted = a
            .planted
            .iter()
            .map(|p| parse_plant(p))
            .collect::<Result<_, _>>()?;
    }
    set(&mut s.d_g, a.d_g);
    set(&mut s.noise, a.noise);
    set(&mut s.seed, a.seed);
    set(&mut c.out_dir, a.out_dir);
    set(&mut c.stem, a.stem);
    run_synth(&c)
}

fn validate_nulls(a: NullsArgs) -> Result<Vec<PathBuf>, HarnessError> {
    let mut c: ValidateNullsConfig = load_config(a.config.as_deref())?;
    a.input.apply(
        &mut c.instances,
        &mut c.partitions,
        &mut c.columns,
        &mut c.adjacency_tolerance,
    )?;
    set(&mut c.features, a.features.as_deref().map(names));
    set(&mut c.d, a.d);
    set(&mut c.replicates, a.replicates);
    set(&mut c.seed, a.seed);
    set(&mut c.out_dir, a.out_dir);
    run_validate_nulls(&c)
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, HarnessError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(HarnessError::config("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| HarnessError::runtime(e.to_string()))?;
    }
    match cli.command {
        Command::Mine(a) => mine(a),
        Command::Benchmark(a) => benchmark(a),
        Command::Fpr(a) => fpr(a),
        Command::Synth(a) => synth(a),
        Command::ValidateNulls(a) => validate_nulls(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = serde_json::json!({ "error": { "kind": "usage", "message": e.to_string().trim_end() } });
            eprintln!("{err}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(files) => {
            println!("{}", serde_json::json!({ "status": "ok", "files": files }));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
