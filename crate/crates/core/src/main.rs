use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use interestflow::pipeline::{run_pipeline, RunConfig, Stage};
use interestflow::synth::{write_corpus, PlantedBot, SynthSpec, WriteOptions};

#[derive(Parser)]
#[command(
    name = "interestflow",
    version,
    about = "Interest dynamics and activity concentration in comment dumps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat `key = value` settings file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Drop users flagged as automated before the other analyses.
    #[arg(long, global = true)]
    exclude_bots: bool,
    /// Write into a non-empty output directory.
    #[arg(long, global = true)]
    force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and index the dumps; write only the manifest.
    Ingest(PipelineArgs),
    /// Activity and lifetime distributions with power-law and skewed Gaussian fits.
    Stats(PipelineArgs),
    /// Gini concentration versus activity, against the null model.
    Gini(PipelineArgs),
    /// Interest drifts and shifts with transition matrices.
    Interest(PipelineArgs),
    /// Comment-length entropy and automated-account flags.
    Bots(PipelineArgs),
    /// Generate a seeded synthetic corpus with a ground-truth ledger.
    Synth(SynthArgs),
    /// Every analysis in one pass.
    Run(PipelineArgs),
}

#[derive(Args, Default)]
struct PipelineArgs {
    /// Comment dumps (newline-delimited JSON, optionally zstd).
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    comments: Vec<PathBuf>,
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    posts: Vec<PathBuf>,
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Window start: date, RFC 3339 time or epoch seconds.
    #[arg(long)]
    from: Option<String>,
    /// Window end, inclusive; a bare date covers the whole day.
    #[arg(long)]
    to: Option<String>,
    /// Gini normalisation: corrected or paper-literal.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    bin_size: Option<usize>,
    #[arg(long)]
    threshold_deg: Option<f64>,
    #[arg(long)]
    min_comments: Option<usize>,
    /// Entropy percentile (in percent) below which users are flagged.
    #[arg(long)]
    percentile: Option<f64>,
    #[arg(long)]
    min_comments_for_entropy: Option<usize>,
    #[arg(long)]
    bins_per_decade: Option<usize>,
    #[arg(long)]
    null_repetitions: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 10_000)]
    users: usize,
    #[arg(long, default_value_t = 944)]
    subreddits: usize,
    /// Density exponent of per-user comment totals.
    #[arg(long, default_value_t = 2.0)]
    exponent: f64,
    #[arg(long, default_value_t = 0.5)]
    loyalty: f64,
    #[arg(long, default_value_t = 214.0)]
    days: f64,
    #[arg(long, default_value_t = 100)]
    planted_users: usize,
    /// Excursions per planted user; each yields two events.
    #[arg(long, default_value_t = 3)]
    excursions: usize,
    #[arg(long, default_value_t = 1)]
    planted_bots: usize,
    #[arg(long, default_value_t = 20_000)]
    bot_comments: usize,
    #[arg(long, default_value_t = 100)]
    bot_length: u32,
    #[arg(long, default_value_t = 20)]
    bin_size: usize,
    #[arg(long, default_value_t = 4)]
    shards: usize,
    /// Write plain JSON lines instead of zstd.
    #[arg(long)]
    no_compress: bool,
}

fn overrides(cli: &Cli, a: &PipelineArgs) -> Vec<(&'static str, String)> {
    let join = |v: &[PathBuf]| {
        v.iter()
            .map(|p| p.display().to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    let mut out = Vec::new();
    let mut put = |k: &'static str, v: Option<String>| {
        if let Some(v) = v {
            out.push((k, v));
        }
    };
    put(
        "comments",
        (!a.comments.is_empty()).then(|| join(&a.comments)),
    );
    put("posts", (!a.posts.is_empty()).then(|| join(&a.posts)));
    put(
        "catalog",
        a.catalog.as_ref().map(|p| p.display().to_string()),
    );
    put("from", a.from.clone());
    put("to", a.to.clone());
    put("mode", a.mode.clone());
    put("bin_size", a.bin_size.map(|v| v.to_string()));
    put("threshold_deg", a.threshold_deg.map(|v| v.to_string()));
    put("min_comments", a.min_comments.map(|v| v.to_string()));
    put("percentile", a.percentile.map(|v| v.to_string()));
    put(
        "min_comments_for_entropy",
        a.min_comments_for_entropy.map(|v| v.to_string()),
    );
    put("bins_per_decade", a.bins_per_decade.map(|v| v.to_string()));
    put(
        "null_repetitions",
        a.null_repetitions.map(|v| v.to_string()),
    );
    put("seed", cli.seed.map(|v| v.to_string()));
    put("threads", cli.threads.map(|v| v.to_string()));
    put(
        "output",
        cli.output.as_ref().map(|p| p.display().to_string()),
    );
    if cli.exclude_bots {
        put("exclude_bots", Some("true".into()));
    }
    if cli.force {
        put("force", Some("true".into()));
    }
    out
}

fn pipeline(cli: &Cli, stage: Stage, args: &PipelineArgs) -> Result<()> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.load_file(path)?;
    }
    for (k, v) in overrides(cli, args) {
        cfg.set(k, &v, Path::new(""))?;
    }
    let summary = run_pipeline(&cfg, stage)?;
    for f in &summary.files {
        println!("{}", f.display());
    }
    Ok(())
}

fn synth(cli: &Cli, a: &SynthArgs) -> Result<()> {
    let out = cli.output.clone().context("synth needs --output")?;
    if std::fs::read_dir(&out)
        .map(|mut d| d.next().is_some())
        .unwrap_or(false)
        && !cli.force
    {
        bail!(
            "output directory {} is not empty (use --force)",
            out.display()
        );
    }
    let mut spec = SynthSpec::new(a.users, a.subreddits, cli.seed.unwrap_or(0));
    spec.activity_exponent = a.exponent;
    spec.loyalty = a.loyalty;
    spec.days = a.days;
    spec.bin_size = a.bin_size;
    spec.plant_users(a.planted_users, a.excursions)?;
    let plain: Vec<String> = spec
        .catalog
        .iter()
        .filter(|(_, e)| e.included && !e.exotic_rules)
        .map(|(n, _)| n.to_string())
        .collect();
    for b in 0..a.planted_bots {
        spec.planted_bots.push(PlantedBot {
            author: format!("spambot{b:03}"),
            subreddit: plain[b % plain.len()].clone(),
            fixed_length: a.bot_length,
            n_comments: a.bot_comments,
        });
    }
    let run = |spec: &SynthSpec| {
        write_corpus(
            spec,
            &out,
            WriteOptions {
                shards: a.shards,
                compress: !a.no_compress,
            },
        )
    };
    let written = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()?
            .install(|| run(&spec)),
        None => run(&spec),
    }?;
    println!("records={}", written.records);
    for f in written.comment_files.iter().chain(&written.post_files) {
        println!("{}", f.display());
    }
    println!("{}", written.catalog.display());
    println!("{}", written.ledger_events.display());
    println!("{}", written.ledger_bots.display());
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match &cli.command {
        Command::Ingest(a) => pipeline(&cli, Stage::Ingest, a),
        Command::Stats(a) => pipeline(&cli, Stage::Stats, a),
        Command::Gini(a) => pipeline(&cli, Stage::Gini, a),
        Command::Interest(a) => pipeline(&cli, Stage::Interest, a),
        Command::Bots(a) => pipeline(&cli, Stage::Bots, a),
        Command::Run(a) => pipeline(&cli, Stage::Run, a),
        Command::Synth(a) => synth(&cli, a),
    }
}
