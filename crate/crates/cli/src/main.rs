//! `subsel`: featurize a corpus, build orderings, draw subsets, drive a
//! refresh schedule.
//!
//! Exit codes: 0 on success, 2 for usage or input errors, 3 when the memory
//! budget cannot hold the kernels.

mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde_json::json;

use subsel::features::{build_tfidf, load_features, save_features, TfidfConfig};
use subsel::partition::{
    build_orderings, default_partitions, make_partition, split_budget, union_sample, write_subset,
    BuildOptions, OrderingArtifact, DEFAULT_WORKERS,
};
use subsel::session::{Session, SessionConfig, SubsetSize};
use subsel::submodular::DEFAULT_EPSILON;

use manifest::Manifest;

const EXIT_USAGE: u8 = 2;
const EXIT_CAPACITY: u8 = 3;
const DEFAULT_MEMORY_BUDGET: u64 = 4 << 30;

#[derive(Parser)]
#[command(name = "subsel", version, about = "Representative subset selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn a one-document-per-line text file into a feature-matrix file.
    Featurize(FeaturizeArgs),
    /// Build per-block greedy orderings and sampling distributions.
    Select(SelectArgs),
    /// Draw a subset from an ordering artifact.
    Sample(SampleArgs),
    /// Advance a subset schedule, emitting a subset file at every refresh.
    Session(SessionArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Tfidf,
}

#[derive(Args)]
struct FeaturizeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "tfidf")]
    method: Method,
    #[arg(long, default_value_t = 1)]
    min_df: usize,
    /// Keep case when tokenizing.
    #[arg(long)]
    no_lowercase: bool,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Block count; defaults to blocks of at most 4096 points.
    #[arg(long)]
    partitions: Option<usize>,
    /// Blocks processed at once; defaults to min(100, logical cores).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long)]
    seed: u64,
    /// Bytes available to concurrently live kernels.
    #[arg(long, default_value_t = DEFAULT_MEMORY_BUDGET)]
    memory_budget: u64,
}

#[derive(Args)]
#[command(group(ArgGroup::new("size").required(true)))]
struct SampleArgs {
    #[arg(long)]
    artifact: PathBuf,
    #[arg(long, group = "size")]
    k: Option<usize>,
    #[arg(long, group = "size")]
    fraction: Option<f64>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct SessionArgs {
    #[arg(long)]
    features: PathBuf,
    /// Session configuration JSON.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    advance_to: u64,
    /// Directory receiving `subset_t<step>.txt` files and the checkpoint.
    #[arg(long)]
    emit_subset: PathBuf,
    /// Continue from the checkpoint in the emit directory.
    #[arg(long)]
    resume: bool,
}

fn default_workers() -> usize {
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    DEFAULT_WORKERS.min(cores)
}

fn distinct(paths: &[&Path]) -> anyhow::Result<()> {
    for (i, a) in paths.iter().enumerate() {
        for b in &paths[i + 1..] {
            if a == b {
                bail!("path {} is used for both input and output", a.display());
            }
        }
    }
    Ok(())
}

fn featurize(args: FeaturizeArgs) -> anyhow::Result<()> {
    distinct(&[&args.input, &args.output])?;
    let text = fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let docs: Vec<&str> = text.lines().collect();
    let config = TfidfConfig {
        lowercase: !args.no_lowercase,
        min_df: args.min_df,
    };
    let sparse = match args.method {
        Method::Tfidf => build_tfidf(&docs, &config)?,
    };
    let dense = sparse.to_dense()?;
    save_features(&dense, &args.output)?;
    println!(
        "n={} d={} degenerate={}",
        dense.n(),
        dense.d(),
        sparse.degenerate_rows().len()
    );
    Manifest::new(
        "featurize",
        None,
        json!({
            "input": subsel::digest::sha256_hex(text.as_bytes()),
            "method": "tfidf",
            "min_df": args.min_df,
            "lowercase": config.lowercase,
        }),
    )
    .write_beside(&args.output)?;
    Ok(())
}

fn select(args: SelectArgs) -> anyhow::Result<()> {
    distinct(&[&args.features, &args.output])?;
    let features = load_features(&args.features, None)
        .with_context(|| format!("loading {}", args.features.display()))?;
    let partitions = args.partitions.unwrap_or_else(|| default_partitions(features.n()));
    let workers = args.workers.unwrap_or_else(default_workers);
    let plan = make_partition(features.n(), partitions, args.seed)?;
    let opts = BuildOptions::new(args.seed)
        .epsilon(args.epsilon)
        .workers(workers)
        .memory_budget(args.memory_budget);
    let artifact = build_orderings(&features, &plan, &opts)?;
    artifact.save(&args.output)?;
    println!(
        "n={} blocks={} max_block={}",
        features.n(),
        plan.num_blocks(),
        plan.max_block_size()
    );
    // Worker count and memory budget do not affect the artifact.
    Manifest::new(
        "select",
        Some(args.seed),
        json!({ "config_fingerprint": artifact.fingerprint() }),
    )
    .write_beside(&args.output)?;
    Ok(())
}

fn sample(args: SampleArgs) -> anyhow::Result<()> {
    distinct(&[&args.artifact, &args.output])?;
    let artifact = OrderingArtifact::load(&args.artifact)
        .with_context(|| format!("loading {}", args.artifact.display()))?;
    let size = match (args.k, args.fraction) {
        (Some(k), None) => SubsetSize::Absolute(k),
        (None, Some(f)) => SubsetSize::Fraction(f),
        _ => bail!("exactly one of --k and --fraction is required"),
    };
    let k = size.resolve(artifact.n())?;
    let split = split_budget(k, artifact.plan())?;
    let subset = union_sample(&artifact, &split, args.seed)?;
    write_subset(&args.output, &subset)?;
    println!("k={} blocks={}", subset.len(), split.per_block.len());
    Manifest::new(
        "sample",
        Some(args.seed),
        json!({ "artifact": artifact.fingerprint(), "k": k }),
    )
    .write_beside(&args.output)?;
    Ok(())
}

fn subset_file(dir: &Path, step: u64) -> PathBuf {
    dir.join(format!("subset_t{step}.txt"))
}

fn session(args: SessionArgs) -> anyhow::Result<()> {
    distinct(&[&args.features, &args.config, &args.emit_subset])?;
    let features = load_features(&args.features, None)
        .with_context(|| format!("loading {}", args.features.display()))?;
    let config: SessionConfig = serde_json::from_str(
        &fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?,
    )
    .with_context(|| format!("parsing {}", args.config.display()))?;
    config.validate()?;
    if args.advance_to > config.total_steps {
        bail!(
            "--advance-to {} is past total_steps {}",
            args.advance_to,
            config.total_steps
        );
    }
    fs::create_dir_all(&args.emit_subset)?;
    let checkpoint = args.emit_subset.join("session.json");
    let digest = subsel::digest::features_digest(&features);

    let mut session = if args.resume {
        let s = Session::load(&checkpoint, features)
            .with_context(|| format!("resuming from {}", checkpoint.display()))?;
        if s.config() != &config {
            bail!("checkpoint was written with a different config");
        }
        s
    } else {
        let s = Session::new(features, config.clone())?;
        if let subsel::session::SubsetQuery::Subset(subset) = s.query_subset() {
            let path = subset_file(&args.emit_subset, 0);
            write_subset(&path, subset)?;
            println!("t=0 {}", path.display());
        }
        s
    };
    if args.advance_to < session.step() {
        bail!(
            "--advance-to {} is before the checkpoint step {}",
            args.advance_to,
            session.step()
        );
    }
    let dir = args.emit_subset.clone();
    session.advance_with(args.advance_to - session.step(), |r| {
        let path = subset_file(&dir, r.step);
        write_subset(&path, r.subset)?;
        println!("t={} {}", r.step, path.display());
        Ok(())
    })?;
    session.save(&checkpoint)?;
    info!("checkpoint at t={} written to {}", session.step(), checkpoint.display());
    Manifest::new(
        "session",
        Some(config.seed),
        json!({ "features": digest, "config": config, "advance_to": args.advance_to }),
    )
    .write_to(&args.emit_subset.join("manifest.json"))?;
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let capacity = err
        .chain()
        .filter_map(|e| e.downcast_ref::<subsel::Error>())
        .any(subsel::Error::is_capacity);
    if capacity {
        EXIT_CAPACITY
    } else {
        EXIT_USAGE
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SUBSEL_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Featurize(a) => featurize(a),
        Command::Select(a) => select(a),
        Command::Sample(a) => sample(a),
        Command::Session(a) => session(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
