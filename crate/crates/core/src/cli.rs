//! `dmh` command line: generate, noise, train and evaluate.
//!
//! Exit codes: 0 success, 1 validation, 2 I/O, 3 divergence.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::es::{EsConfig, EsError, GenerationLog, Trainer};
use crate::harness::{
    evaluate_policies, generate_instances, noise_instances, GenParams, HarnessError, NamedPolicy,
};
use crate::policy::{Checkpoint, PolicyError};
use crate::rules::BaselineKind;
use crate::sim::{load_instance, Instance, SimError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Divergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
            CliError::Divergence(_) => 3,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<PolicyError> for CliError {
    fn from(e: PolicyError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Io(_) => CliError::Io(e.to_string()),
            HarnessError::Sim(s) => s.into(),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<EsError> for CliError {
    fn from(e: EsError) -> Self {
        if e.is_divergence() {
            CliError::Divergence(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub trials: usize,
    pub seeds: Vec<u64>,
    pub xi: f64,
    /// Baseline names or checkpoint paths.
    pub policies: Vec<String>,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            trials: 30,
            seeds: vec![0, 1, 2, 3, 4],
            xi: 50.0,
            policies: BaselineKind::ALL
                .iter()
                .map(|k| k.name().to_string())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateSettings {
    pub count: usize,
    #[serde(flatten)]
    pub params: GenParams,
}

impl Default for GenerateSettings {
    fn default() -> Self {
        Self {
            count: 8,
            params: GenParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSettings {
    pub delta: f64,
}

impl Default for NoiseSettings {
    fn default() -> Self {
        Self { delta: 5.0 }
    }
}

/// Everything a run needs, read from a JSON file and patched by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub instance_dir: PathBuf,
    pub out_dir: PathBuf,
    /// Final checkpoint path; defaults to `<out_dir>/checkpoint.json`.
    pub checkpoint: Option<PathBuf>,
    /// Master seed for every command. Overrides `es.seed`.
    pub seed: u64,
    pub es: EsConfig,
    pub eval: EvalSettings,
    pub generate: GenerateSettings,
    pub noise: NoiseSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            instance_dir: PathBuf::from("instances"),
            out_dir: PathBuf::from("out"),
            checkpoint: None,
            seed: 0,
            es: EsConfig::default(),
            eval: EvalSettings::default(),
            generate: GenerateSettings::default(),
            noise: NoiseSettings::default(),
        }
    }
}

#[derive(Serialize)]
struct HashedContent<'a> {
    seed: u64,
    es: &'a EsConfig,
    eval: &'a EvalSettings,
    generate: &'a GenerateSettings,
    noise: &'a NoiseSettings,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    /// SHA-256 over the experiment-defining fields. Paths are left out so the
    /// same experiment hashes identically wherever it is written.
    pub fn content_hash(&self) -> String {
        // the master seed always wins over es.seed, so hash the effective value
        let es = EsConfig {
            seed: self.seed,
            ..self.es.clone()
        };
        let content = HashedContent {
            seed: self.seed,
            es: &es,
            eval: &self.eval,
            generate: &self.generate,
            noise: &self.noise,
        };
        let bytes = serde_json::to_vec(&content).expect("config serialization is infallible");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.checkpoint
            .clone()
            .unwrap_or_else(|| self.out_dir.join("checkpoint.json"))
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "dmh",
    version,
    about = "AGV dispatching: instance generation, training and evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write procedurally generated instance files and a manifest.
    Generate(CommonArgs),
    /// Perturb task arrival times of every instance by up to +-delta.
    Noise(CommonArgs),
    /// Train a policy with constrained evolution strategies.
    Train(CommonArgs),
    /// Compare baselines and checkpoints on the instance set.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON run configuration; defaults are used when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides `seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overwrite existing output files.
    #[arg(long)]
    pub force: bool,
    /// Output directory (overrides `out_dir`; for `generate`, the instance directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Instance directory (overrides `instance_dir`).
    #[arg(long)]
    pub instances: Option<PathBuf>,
    /// Worker threads for episode evaluation.
    #[arg(long, env = "DMH_JOBS")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Baseline name (FCFS, EDD, NVF, STD, MIX, Random) or checkpoint path; repeatable.
    #[arg(long = "policy")]
    pub policies: Vec<String>,
}

fn effective_config(args: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut config = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(dir) = &args.instances {
        config.instance_dir = dir.clone();
    }
    if let Some(out) = &args.out {
        config.out_dir = out.clone();
    }
    config.es.seed = config.seed;
    Ok(config)
}

fn with_jobs<T>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError>
where
    T: Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn refuse_overwrite(paths: &[PathBuf], force: bool) -> Result<(), CliError> {
    if force {
        return Ok(());
    }
    match paths.iter().find(|p| p.exists()) {
        Some(p) => Err(CliError::Io(format!(
            "{} exists; pass --force to overwrite",
            p.display()
        ))),
        None => Ok(()),
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

/// Every `*.json` in `dir` except `manifest.json`, sorted by file name.
pub fn load_instance_dir(dir: &Path) -> Result<Vec<Instance>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| io_err(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|x| x == "json")
                && p.file_name().is_some_and(|n| n != "manifest.json")
        })
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| load_instance(p).map_err(|e| CliError::from(e).with_path(p)))
        .collect()
}

impl CliError {
    fn with_path(self, path: &Path) -> Self {
        match self {
            CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
            CliError::Io(m) => CliError::Io(m),
            CliError::Divergence(m) => CliError::Divergence(m),
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    ids: Vec<&'a str>,
    seed: u64,
    config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    generator: Option<&'a GenParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
}

fn write_instances(
    dir: &Path,
    instances: &[Instance],
    manifest: &Manifest,
    force: bool,
) -> Result<(), CliError> {
    ensure_dir(dir)?;
    let mut targets: Vec<PathBuf> = instances
        .iter()
        .map(|i| dir.join(format!("{}.json", i.id())))
        .collect();
    targets.push(dir.join("manifest.json"));
    refuse_overwrite(&targets, force)?;
    for (inst, path) in instances.iter().zip(&targets) {
        write_file(path, inst.to_json())?;
    }
    let text =
        serde_json::to_string_pretty(manifest).expect("manifest serialization is infallible");
    write_file(&targets[instances.len()], text)
}

pub fn cmd_generate(args: &CommonArgs) -> Result<(), CliError> {
    let config = effective_config(args)?;
    let dir = args
        .out
        .clone()
        .unwrap_or_else(|| config.instance_dir.clone());
    let instances =
        generate_instances(config.generate.count, &config.generate.params, config.seed)?;
    let manifest = Manifest {
        ids: instances.iter().map(Instance::id).collect(),
        seed: config.seed,
        config_hash: config.content_hash(),
        generator: Some(&config.generate.params),
        delta: None,
    };
    write_instances(&dir, &instances, &manifest, args.force)
}

pub fn cmd_noise(args: &CommonArgs) -> Result<(), CliError> {
    let config = effective_config(args)?;
    let instances = load_instance_dir(&config.instance_dir)?;
    let noised = noise_instances(&instances, config.noise.delta, config.seed)?;
    let manifest = Manifest {
        ids: noised.iter().map(Instance::id).collect(),
        seed: config.seed,
        config_hash: config.content_hash(),
        generator: None,
        delta: Some(config.noise.delta),
    };
    if config.out_dir == config.instance_dir && !args.force {
        return Err(CliError::Io(format!(
            "{} is the input directory; pass --force to overwrite",
            config.out_dir.display()
        )));
    }
    write_instances(&config.out_dir, &noised, &manifest, args.force)
}

fn log_header(instances: &[Instance]) -> Vec<String> {
    let mut header = vec!["generation".to_string(), "wall_ms".to_string()];
    for inst in instances {
        header.push(format!("mean_JR[{}]", inst.id()));
        header.push(format!("mean_JC[{}]", inst.id()));
        header.push(format!("N[{}]", inst.id()));
    }
    header.push("update_l2".into());
    header.push("feasible_fraction".into());
    header
}

fn log_row(log: &GenerationLog) -> Vec<String> {
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    let mut row = vec![log.generation.to_string(), log.wall_ms.to_string()];
    for k in 0..log.counts.len() {
        row.push(opt(log.mean_reward[k]));
        row.push(opt(log.mean_cost[k]));
        row.push(log.counts[k].to_string());
    }
    row.push(log.update_l2.to_string());
    row.push(log.feasible_fraction.to_string());
    row
}

pub fn cmd_train(args: &CommonArgs) -> Result<(), CliError> {
    let config = effective_config(args)?;
    let instances = load_instance_dir(&config.instance_dir)?;
    if instances.is_empty() {
        return Err(CliError::Validation(format!(
            "no instance files in {}",
            config.instance_dir.display()
        )));
    }
    ensure_dir(&config.out_dir)?;
    let final_path = config.checkpoint_path();
    let log_path = config.out_dir.join("train_log.csv");
    refuse_overwrite(&[final_path.clone(), log_path.clone()], args.force)?;

    let hash = config.content_hash();
    let mut trainer = Trainer::new(&instances, config.es.clone())?;
    let checkpoint = |t: &Trainer| {
        Checkpoint::new(
            t.arch().clone(),
            t.params().clone(),
            hash.clone(),
            config.seed,
        )
    };

    let log_file = fs::File::create(&log_path).map_err(|e| io_err(&log_path, e))?;
    let mut log = csv::Writer::from_writer(log_file);
    log.write_record(log_header(&instances))
        .map_err(|e| io_err(&log_path, e))?;

    let every = config.es.checkpoint_every;
    let outcome = with_jobs(args.jobs, || -> Result<(), CliError> {
        while !trainer.is_done() {
            let row = match trainer.step() {
                Ok(row) => row,
                Err(e) => {
                    // keep the last finite parameters on disk
                    checkpoint(&trainer)?
                        .save(&final_path)
                        .map_err(|io| io_err(&final_path, io))?;
                    return Err(e.into());
                }
            };
            log.write_record(log_row(&row))
                .map_err(|e| io_err(&log_path, e))?;
            if every > 0 && trainer.generation() % every == 0 && !trainer.is_done() {
                let path = config
                    .out_dir
                    .join(format!("checkpoint-g{:04}.json", trainer.generation()));
                checkpoint(&trainer)?
                    .save(&path)
                    .map_err(|e| io_err(&path, e))?;
            }
        }
        Ok(())
    })?;
    log.flush().map_err(|e| io_err(&log_path, e))?;
    outcome?;
    checkpoint(&trainer)?
        .save(&final_path)
        .map_err(|e| io_err(&final_path, e))
}

fn resolve_policy(spec: &str) -> Result<NamedPolicy, CliError> {
    if let Ok(kind) = spec.parse::<BaselineKind>() {
        return Ok(NamedPolicy::baseline(kind));
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(CliError::Validation(format!(
            "policy {spec:?} is neither a baseline name nor an existing checkpoint"
        )));
    }
    let ck = Checkpoint::load(path)?;
    let name = path
        .file_stem()
        .map_or_else(|| spec.to_string(), |s| s.to_string_lossy().into_owned());
    Ok(NamedPolicy::network(name, ck.arch, ck.theta))
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let config = effective_config(&args.common)?;
    let instances = load_instance_dir(&config.instance_dir)?;
    let specs = if args.policies.is_empty() {
        &config.eval.policies
    } else {
        &args.policies
    };
    let policies: Vec<NamedPolicy> = specs
        .iter()
        .map(|s| resolve_policy(s))
        .collect::<Result<_, _>>()?;
    let mut report = with_jobs(args.common.jobs, || {
        evaluate_policies(
            &policies,
            &instances,
            config.eval.trials,
            &config.eval.seeds,
            config.eval.xi,
        )
    })??;
    report.summary.config_hash = Some(config.content_hash());
    report.summary.seed = Some(config.seed);

    ensure_dir(&config.out_dir)?;
    let csv_path = config.out_dir.join("report.csv");
    let json_path = config.out_dir.join("summary.json");
    refuse_overwrite(&[csv_path.clone(), json_path.clone()], args.common.force)?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    write_file(&csv_path, buf)?;
    write_file(&json_path, report.summary_json())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Noise(a) => cmd_noise(a),
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
    }
}

/// Parse `args`, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "dmh: {e}");
            e.exit_code()
        }
    }
}
