//! Command-line front end. Subcommands mirror the pipeline stages:
//!
//! * `bench gen`  — write a benchmark model file;
//! * `check`      — verify a strategy or controller file against a spec;
//! * `sample`     — solve the underlying MDP and sample trajectories;
//! * `train`      — train the recurrent policy on a trajectory file;
//! * `extract`    — turn a policy checkpoint into a strategy or controller;
//! * `synth`      — run the full refinement loop, logging one CSV row per
//!                  iteration and writing every iterate's strategy file.
//!
//! Every run writes a JSON manifest next to its outputs with enough detail
//! (arguments, seeds, model hash, spec text) to reproduce it. Exit codes:
//! 0 success, 1 threshold specification violated, 2 usage or input errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::fsc::{self, memory_update, MemoryUpdateKind};
use crate::learner::{
    self, policy_from_text, policy_to_text, RecurrentPolicy, TrainConfig, TrajectoryDataset,
};
use crate::mc;
use crate::model::{self, generate_benchmark, Family, GridConfig, Pomdp};
use crate::refine::{self, CriticalityRule, SynthesisConfig, SynthesizedStrategy};
use crate::spec::{parse_spec, Specification};
use crate::strategy::ObservationStrategy;

#[derive(Parser)]
#[command(
    name = "pomdp-synth",
    version,
    about = "Strategy synthesis for POMDPs with exact verification and counterexample-guided repair"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Benchmark model generation.
    Bench {
        #[command(subcommand)]
        command: BenchCommand,
    },
    /// Verify a strategy file against a specification.
    Check(CheckArgs),
    /// Sample observation-action trajectories from the solved underlying MDP.
    Sample(SampleArgs),
    /// Train the recurrent policy on a trajectory file.
    Train(TrainArgs),
    /// Extract a strategy or controller from a policy checkpoint.
    Extract(ExtractArgs),
    /// Run the counterexample-guided synthesis loop.
    Synth(SynthArgs),
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Generate a benchmark model and write it as a model file.
    Gen(BenchGenArgs),
}

#[derive(Args)]
struct BenchGenArgs {
    /// Family: navigation, delivery, slippery, maze, grid, rocksample.
    #[arg(long)]
    family: String,
    /// Grid edge length (board size for rocksample).
    #[arg(long)]
    size: usize,
    /// Number of rocks (rocksample only; defaults to the board size).
    #[arg(long)]
    rocks: Option<usize>,
    /// Perpendicular slip probability (slippery only).
    #[arg(long)]
    slip: Option<f64>,
    /// Static obstacle cell as `x,y`; repeatable, overrides the default.
    #[arg(long = "obstacle", value_parser = parse_cell)]
    obstacles: Vec<(usize, usize)>,
    /// Landmark A cell as `x,y`.
    #[arg(long, value_parser = parse_cell)]
    landmark_a: Option<(usize, usize)>,
    /// Landmark B cell as `x,y`.
    #[arg(long, value_parser = parse_cell)]
    landmark_b: Option<(usize, usize)>,
    /// Output path; defaults to `<family><size>.pomdp`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    model: PathBuf,
    /// Specification text, e.g. `Pmax [ !X U A ]`.
    #[arg(long, conflicts_with = "spec_file")]
    spec: Option<String>,
    /// File holding the specification text.
    #[arg(long)]
    spec_file: Option<PathBuf>,
    /// Observation strategy file.
    #[arg(long, required_unless_present = "fsc")]
    strategy: Option<PathBuf>,
    /// Finite-state controller file (evaluated via the memory product).
    #[arg(long, conflicts_with = "strategy")]
    fsc: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, conflicts_with = "spec_file")]
    spec: Option<String>,
    #[arg(long)]
    spec_file: Option<PathBuf>,
    /// Number of trajectories.
    #[arg(long, default_value_t = 5000)]
    count: usize,
    /// Maximum steps per trajectory.
    #[arg(long, default_value_t = 32)]
    max_len: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Sample from this smaller model instead; its observation and action
    /// alphabets must equal the target model's.
    #[arg(long)]
    donor: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    model: PathBuf,
    /// Trajectory file produced by `sample`.
    #[arg(long)]
    data: PathBuf,
    /// Resume from an existing checkpoint instead of a fresh policy.
    #[arg(long)]
    init: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    hidden: usize,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    learning_rate: f64,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 5.0)]
    clip_norm: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    model: PathBuf,
    /// Policy checkpoint from `train`.
    #[arg(long)]
    policy: PathBuf,
    /// Memory node count; with a rule this extracts a controller.
    #[arg(long)]
    fsc_k: Option<usize>,
    /// Memory update rule: `obs-repeat` or `spec:<AP1>,<AP2>`.
    #[arg(long)]
    memory: Option<String>,
    /// Query the policy this many times and verify the predictions agree
    /// before using the first one.
    #[arg(long, default_value_t = 1)]
    predictions: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, conflicts_with = "spec_file")]
    spec: Option<String>,
    #[arg(long)]
    spec_file: Option<PathBuf>,
    /// Memory node count for finite-memory synthesis.
    #[arg(long)]
    fsc_k: Option<usize>,
    /// Memory update rule: `obs-repeat` or `spec:<AP1>,<AP2>`.
    #[arg(long)]
    memory: Option<String>,
    #[arg(long, default_value_t = 10)]
    iters: usize,
    /// Stop as soon as the specification is satisfied (or the MDP bound is
    /// reached for open queries).
    #[arg(long, default_value_t = false)]
    early_stop: bool,
    /// Stop when the value changes less than this between iterations.
    #[arg(long, default_value_t = 0.0)]
    eps_progress: f64,
    /// Criticality relaxation for open queries (see docs).
    #[arg(long, default_value_t = refine::DEFAULT_MDP_SCALED_THETA)]
    theta: f64,
    #[arg(long, default_value_t = 5000)]
    samples: usize,
    #[arg(long, default_value_t = 32)]
    max_len: usize,
    #[arg(long, default_value_t = 2000)]
    resamples: usize,
    #[arg(long, default_value_t = 32)]
    hidden: usize,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    learning_rate: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// CSV log path: iter,value,critical_states,critical_decisions,train_loss,seconds.
    #[arg(long)]
    log: PathBuf,
    /// Directory for per-iteration strategy files and the best strategy.
    #[arg(long, default_value = "synth-out")]
    out_dir: PathBuf,
}

#[derive(Debug, Serialize)]
struct RunManifest {
    tool: &'static str,
    version: &'static str,
    command: String,
    argv: Vec<String>,
    model_hash: Option<String>,
    spec: Option<String>,
    seeds: Vec<u64>,
    config: BTreeMap<String, String>,
    outputs: Vec<String>,
    started_unix: u64,
    finished_unix: u64,
}

impl RunManifest {
    fn new(command: &str, argv: &[String]) -> Self {
        RunManifest {
            tool: "pomdp-synth",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            argv: argv.to_vec(),
            model_hash: None,
            spec: None,
            seeds: Vec::new(),
            config: BTreeMap::new(),
            outputs: Vec::new(),
            started_unix: unix_now(),
            finished_unix: 0,
        }
    }

    fn write_next_to(mut self, output: &Path) -> Result<(), CliError> {
        self.finished_unix = unix_now();
        let path = manifest_path(output);
        let body = serde_json::to_string_pretty(&self).expect("manifest serialization");
        fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
        Ok(())
    }
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn manifest_path(output: &Path) -> PathBuf {
    if output.is_dir() {
        output.join("manifest.json")
    } else {
        let mut name = output.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        output.with_file_name(name)
    }
}

fn parse_cell(s: &str) -> Result<(usize, usize), String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected `x,y`, got `{s}`"))?;
    Ok((
        x.trim().parse().map_err(|_| format!("bad x `{x}`"))?,
        y.trim().parse().map_err(|_| format!("bad y `{y}`"))?,
    ))
}

#[derive(Debug)]
struct CliError {
    message: String,
    code: i32,
}

impl CliError {
    fn new(message: impl Into<String>) -> Self {
        CliError { message: message.into(), code: 2 }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::new(format!("{}: {e}", path.display()))
    }
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::new(e.to_string())
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn run(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own help/version output with code 0.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Bench { command: BenchCommand::Gen(args) } => bench_gen(args, &argv),
        Command::Check(args) => cmd_check(args, &argv),
        Command::Sample(args) => cmd_sample(args, &argv),
        Command::Train(args) => cmd_train(args, &argv),
        Command::Extract(args) => cmd_extract(args, &argv),
        Command::Synth(args) => cmd_synth(args, &argv),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn load_model(path: &Path) -> Result<Pomdp, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(model::parse_model(&text)?)
}

fn load_spec(
    spec: &Option<String>,
    spec_file: &Option<PathBuf>,
) -> Result<(Specification, String), CliError> {
    let text = match (spec, spec_file) {
        (Some(text), None) => text.clone(),
        (None, Some(path)) => {
            fs::read_to_string(path).map_err(|e| CliError::io(path, e))?.trim().to_string()
        }
        _ => return Err(CliError::new("exactly one of --spec and --spec-file is required")),
    };
    Ok((parse_spec(&text)?, text))
}

fn parse_memory_rule(rule: &str) -> Result<MemoryUpdateKind, CliError> {
    if rule == "obs-repeat" {
        return Ok(MemoryUpdateKind::ObservationRepeat);
    }
    if let Some(aps) = rule.strip_prefix("spec:") {
        let (a, b) = aps
            .split_once(',')
            .ok_or_else(|| CliError::new("expected `spec:<AP1>,<AP2>`"))?;
        return Ok(MemoryUpdateKind::SpecDriven {
            first_ap: a.trim().to_string(),
            second_ap: b.trim().to_string(),
        });
    }
    Err(CliError::new(format!("unknown memory rule `{rule}`")))
}

fn bench_gen(args: BenchGenArgs, argv: &[String]) -> Result<i32, CliError> {
    let family: Family = args.family.parse()?;
    let mut cfg = GridConfig::new(family, args.size);
    cfg.rocks = args.rocks;
    if let Some(slip) = args.slip {
        cfg.slip_prob = slip;
    }
    if !args.obstacles.is_empty() {
        cfg.static_obstacles = Some(args.obstacles.clone());
    }
    cfg.landmark_a = args.landmark_a;
    cfg.landmark_b = args.landmark_b;
    let m = generate_benchmark(&cfg)?;
    let out = args
        .out
        .unwrap_or_else(|| PathBuf::from(format!("{}{}.pomdp", args.family, args.size)));
    fs::write(&out, model::model_to_text(&m)).map_err(|e| CliError::io(&out, e))?;
    println!(
        "wrote {} ({} states, {} actions, {} observations)",
        out.display(),
        m.num_states,
        m.num_actions(),
        m.num_observations()
    );
    let mut manifest = RunManifest::new("bench gen", argv);
    manifest.model_hash = Some(m.hash_hex());
    manifest.config.insert("family".into(), args.family.clone());
    manifest.config.insert("size".into(), args.size.to_string());
    manifest.outputs.push(out.display().to_string());
    manifest.write_next_to(&out)?;
    Ok(0)
}

fn cmd_check(args: CheckArgs, argv: &[String]) -> Result<i32, CliError> {
    let m = load_model(&args.model)?;
    let (spec, spec_text) = load_spec(&args.spec, &args.spec_file)?;
    let result = match (&args.strategy, &args.fsc) {
        (Some(path), None) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let sigma = ObservationStrategy::from_text(&text, &m)?;
            mc::check(&m, &sigma, &spec)?
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let fsc = fsc::parse_fsc(&text, &m)?;
            mc::check_fsc(&m, &fsc, &spec)?
        }
        _ => return Err(CliError::new("exactly one of --strategy and --fsc is required")),
    };
    println!("value = {}", result.value_at_initial);
    match result.satisfied {
        Some(v) => println!("satisfied = {v}"),
        None => println!("satisfied = n/a (value query)"),
    }
    println!(
        "chain: {} states, {} transitions, {:.3}s",
        result.dtmc_states,
        result.dtmc_transitions,
        result.wall.as_secs_f64()
    );
    let mut manifest = RunManifest::new("check", argv);
    manifest.model_hash = Some(m.hash_hex());
    manifest.spec = Some(spec_text);
    manifest.config.insert("value".into(), result.value_at_initial.to_string());
    manifest.write_next_to(&args.model)?;
    Ok(if result.satisfied == Some(false) { 1 } else { 0 })
}

fn cmd_sample(args: SampleArgs, argv: &[String]) -> Result<i32, CliError> {
    let target = load_model(&args.model)?;
    let (spec, spec_text) = load_spec(&args.spec, &args.spec_file)?;
    let source = match &args.donor {
        None => target.clone(),
        Some(path) => {
            let donor = load_model(path)?;
            if donor.observations != target.observations || donor.actions != target.actions {
                return Err(CliError::new(
                    "donor model must share the target's observation and action alphabets",
                ));
            }
            donor
        }
    };
    let mdp = model::underlying_mdp(&source);
    let sol = mc::mdp_optimal(&mdp, &spec)?;
    let paths = learner::sample_trajectories(&sol.model, &sol.strategy, args.count, args.max_len, args.seed);
    let projected: Vec<learner::MdpPath> = paths
        .into_iter()
        .map(|p| learner::MdpPath {
            states: p.states.iter().map(|&i| sol.state_map[i].0).collect(),
            actions: p.actions,
        })
        .collect();
    let dataset = learner::to_observation_sequences(&projected, &source, args.seed, args.max_len);
    fs::write(&args.out, dataset.to_text(&source)).map_err(|e| CliError::io(&args.out, e))?;
    println!(
        "wrote {} ({} sequences, {} labeled steps, MDP bound {})",
        args.out.display(),
        dataset.sequences.len(),
        dataset.labeled_steps(),
        sol.value_at_initial()
    );
    let mut manifest = RunManifest::new("sample", argv);
    manifest.model_hash = Some(target.hash_hex());
    manifest.spec = Some(spec_text);
    manifest.seeds.push(args.seed);
    manifest.config.insert("count".into(), args.count.to_string());
    manifest.config.insert("max_len".into(), args.max_len.to_string());
    if let Some(donor) = &args.donor {
        manifest.config.insert("donor".into(), donor.display().to_string());
    }
    manifest.outputs.push(args.out.display().to_string());
    manifest.write_next_to(&args.out)?;
    Ok(0)
}

fn cmd_train(args: TrainArgs, argv: &[String]) -> Result<i32, CliError> {
    let m = load_model(&args.model)?;
    let text = fs::read_to_string(&args.data).map_err(|e| CliError::io(&args.data, e))?;
    let dataset = TrajectoryDataset::from_text(&text, &m)?;
    let mut policy = match &args.init {
        Some(path) => {
            let ckpt = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            policy_from_text(&ckpt)?
        }
        None => RecurrentPolicy::new(m.num_observations(), args.hidden, m.num_actions(), args.seed),
    };
    let cfg = TrainConfig {
        hidden: args.hidden,
        learning_rate: args.learning_rate,
        batch_size: args.batch_size,
        epochs: args.epochs,
        clip_norm: args.clip_norm,
        seed: args.seed,
    };
    let report = learner::train(&mut policy, &dataset, &cfg)?;
    fs::write(&args.out, policy_to_text(&policy)).map_err(|e| CliError::io(&args.out, e))?;
    println!(
        "loss {} -> {} over {} epochs{}",
        report.initial_loss,
        report.final_loss,
        report.epoch_losses.len(),
        if report.regressed { " (regressed)" } else { "" }
    );
    println!("wrote {}", args.out.display());
    let mut manifest = RunManifest::new("train", argv);
    manifest.model_hash = Some(m.hash_hex());
    manifest.seeds.push(args.seed);
    manifest.config.insert("epochs".into(), args.epochs.to_string());
    manifest.config.insert("hidden".into(), args.hidden.to_string());
    manifest.config.insert("final_loss".into(), report.final_loss.to_string());
    manifest.outputs.push(args.out.display().to_string());
    manifest.write_next_to(&args.out)?;
    Ok(0)
}

fn cmd_extract(args: ExtractArgs, argv: &[String]) -> Result<i32, CliError> {
    let m = load_model(&args.model)?;
    let ckpt = fs::read_to_string(&args.policy).map_err(|e| CliError::io(&args.policy, e))?;
    let policy = policy_from_text(&ckpt)?;
    if args.predictions > 1 {
        // Inference is deterministic; honor the repeat-and-average option by
        // verifying all predictions coincide.
        let reference = learner::policy_forward(&policy, &[0])?;
        for _ in 1..args.predictions {
            if learner::policy_forward(&policy, &[0])? != reference {
                return Err(CliError::new("nondeterministic predictions"));
            }
        }
    }
    let body = match (args.fsc_k, &args.memory) {
        (Some(k), Some(rule)) if k > 1 => {
            let kind = parse_memory_rule(rule)?;
            let update = memory_update(&kind, k, &m)?;
            let controller = learner::extract_fsc(&policy, &m, &update)?;
            fsc::fsc_to_text(&controller, &m)
        }
        (None, None) | (Some(1), _) => {
            let sigma = learner::extract_memoryless(&policy, &m)?;
            sigma.to_text(&m)
        }
        _ => return Err(CliError::new("--fsc-k (>= 2) and --memory go together")),
    };
    fs::write(&args.out, body).map_err(|e| CliError::io(&args.out, e))?;
    println!("wrote {}", args.out.display());
    let mut manifest = RunManifest::new("extract", argv);
    manifest.model_hash = Some(m.hash_hex());
    manifest.outputs.push(args.out.display().to_string());
    manifest.write_next_to(&args.out)?;
    Ok(0)
}

fn cmd_synth(args: SynthArgs, argv: &[String]) -> Result<i32, CliError> {
    let m = load_model(&args.model)?;
    let (spec, spec_text) = load_spec(&args.spec, &args.spec_file)?;
    let memory = match (args.fsc_k, &args.memory) {
        (Some(k), Some(rule)) if k >= 2 => Some((parse_memory_rule(rule)?, k)),
        (Some(k), None) if k >= 2 => Some((MemoryUpdateKind::ObservationRepeat, k)),
        (None, None) | (Some(1), None) => None,
        _ => return Err(CliError::new("--memory needs --fsc-k >= 2")),
    };
    let cfg = SynthesisConfig {
        max_iterations: args.iters,
        early_stop: args.early_stop,
        eps_progress: args.eps_progress,
        criticality: match spec.threshold() {
            Some(_) => None,
            None => Some(CriticalityRule::MdpScaled { theta: args.theta }),
        },
        train: TrainConfig {
            hidden: args.hidden,
            epochs: args.epochs,
            learning_rate: args.learning_rate,
            seed: args.seed,
            ..Default::default()
        },
        sample_count: args.samples,
        sample_max_len: args.max_len,
        resample_count: args.resamples,
        seed: args.seed,
        memory,
    };
    let result = refine::synthesize(&m, &spec, &cfg)?;

    fs::create_dir_all(&args.out_dir).map_err(|e| CliError::io(&args.out_dir, e))?;
    let mut csv = String::from("iter,value,critical_states,critical_decisions,train_loss,seconds\n");
    for entry in &result.log {
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            entry.iteration,
            entry.value,
            entry.critical_states,
            entry.critical_decisions,
            entry.train_loss,
            entry.seconds
        )
        .unwrap();
        let path = args.out_dir.join(format!("strategy_iter_{}.strat", entry.iteration));
        fs::write(&path, entry.strategy.to_text(&result.effective_model))
            .map_err(|e| CliError::io(&path, e))?;
        println!(
            "iter {}: value {} ({} critical states, {} critical decisions)",
            entry.iteration, entry.value, entry.critical_states, entry.critical_decisions
        );
    }
    fs::write(&args.log, &csv).map_err(|e| CliError::io(&args.log, e))?;
    let best_path = match &result.best {
        SynthesizedStrategy::Memoryless(sigma) => {
            let path = args.out_dir.join("best.strat");
            fs::write(&path, sigma.to_text(&result.effective_model))
                .map_err(|e| CliError::io(&path, e))?;
            path
        }
        SynthesizedStrategy::Controller(controller) => {
            let path = args.out_dir.join("best.fsc");
            fs::write(&path, fsc::fsc_to_text(controller, &m)).map_err(|e| CliError::io(&path, e))?;
            path
        }
    };
    let best = &result.log[result.best_iteration];
    println!(
        "best: iteration {} with value {} (MDP bound {}); wrote {}",
        best.iteration,
        best.value,
        result.mdp_bound,
        best_path.display()
    );

    let mut manifest = RunManifest::new("synth", argv);
    manifest.model_hash = Some(m.hash_hex());
    manifest.spec = Some(spec_text);
    manifest.seeds.push(args.seed);
    manifest.config.insert("iters".into(), args.iters.to_string());
    manifest.config.insert("samples".into(), args.samples.to_string());
    manifest.config.insert("max_len".into(), args.max_len.to_string());
    manifest.config.insert("hidden".into(), args.hidden.to_string());
    manifest.config.insert("epochs".into(), args.epochs.to_string());
    manifest.config.insert("best_value".into(), best.value.to_string());
    if let Some((_, k)) = &cfg.memory {
        manifest.config.insert("fsc_k".into(), k.to_string());
    }
    manifest.outputs.push(args.log.display().to_string());
    manifest.outputs.push(args.out_dir.display().to_string());
    manifest.write_next_to(&args.out_dir)?;
    Ok(match result.satisfied {
        Some(false) => 1,
        _ => 0,
    })
}
