//! End-to-end runs: ingest, then any of the activity statistics, the
//! concentration curve, interest dynamics and the bot heuristics, each
//! written as comma-separated tables next to a run manifest.

mod config;
mod tables;

pub use config::{parse_time, RunConfig};
pub use tables::{histogram_rows, matrix_table, num, Manifest, Table, VOLATILE_KEYS};

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::bots::{self, BotError, BotReport};
use crate::concentration::{
    activity_vector, gini_vs_activity, ActivityVector, ConcentrationError, NullModelConfig,
    SubredditAxis,
};
use crate::ingest::{ingest_files, load_catalog, Corpus, IngestError, SubredditCatalog, UserIndex};
use crate::interest::{
    analyze_population, event_count_distributions, transition_matrix, InterestError, Level,
};
use crate::stats::{
    activity_distribution, fit_double_power_law, fit_power_law, fit_skew_gaussian, post_lifetime,
    subreddit_mean_user_lifetimes, user_lifetime, ActivityMeasure, Histogram, StatsError,
    SECONDS_PER_DAY,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("ingest: {0}")]
    Ingest(#[from] IngestError),
    #[error("gini: {0}")]
    Concentration(#[from] ConcentrationError),
    #[error("interest: {0}")]
    Interest(#[from] InterestError),
    #[error("bots: {0}")]
    Bots(#[from] BotError),
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Which analyses a run performs. Every stage ingests first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Stats,
    Gini,
    Interest,
    Bots,
    Run,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Stats => "stats",
            Stage::Gini => "gini",
            Stage::Interest => "interest",
            Stage::Bots => "bots",
            Stage::Run => "run",
        }
    }

    fn includes(self, s: Stage) -> bool {
        self == s || self == Stage::Run
    }
}

impl FromStr for Stage {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "ingest" => Stage::Ingest,
            "stats" => Stage::Stats,
            "gini" => Stage::Gini,
            "interest" => Stage::Interest,
            "bots" => Stage::Bots,
            "run" => Stage::Run,
            other => return Err(PipelineError::Config(format!("unknown stage `{other}`"))),
        })
    }
}

pub const DISTRIBUTIONS: &str = "distributions.csv";
pub const FITS: &str = "fits.csv";
pub const SUBREDDIT_LIFETIMES: &str = "subreddit_lifetimes.csv";
pub const GINI_CURVE: &str = "gini_curve.csv";
pub const INTEREST_EVENTS: &str = "interest_events.csv";
pub const TRANSITIONS_SUBREDDIT: &str = "transitions_subreddit.csv";
pub const TRANSITIONS_TOPIC: &str = "transitions_topic.csv";
pub const EVENT_COUNTS: &str = "event_counts.csv";
pub const BOTS: &str = "bots.csv";
pub const ENTROPY_PROFILE: &str = "entropy_profile.csv";
pub const MANIFEST: &str = "manifest.txt";

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output: PathBuf,
    pub files: Vec<PathBuf>,
    pub manifest: Manifest,
}

/// Fails unless `dir` is absent, empty, or `force` is set.
fn prepare_output(dir: &Path, force: bool) -> Result<(), PipelineError> {
    let occupied = fs::read_dir(dir)
        .map(|mut d| d.next().is_some())
        .unwrap_or(false);
    if occupied && !force {
        return Err(PipelineError::Config(format!(
            "output directory {} is not empty (use --force)",
            dir.display()
        )));
    }
    fs::create_dir_all(dir).map_err(|source| PipelineError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// Validates `cfg`, then runs `stage` on a dedicated thread pool when a
/// thread count is configured.
pub fn run_pipeline(cfg: &RunConfig, stage: Stage) -> Result<RunSummary, PipelineError> {
    cfg.validate()?;
    prepare_output(&cfg.output, cfg.force)?;
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| PipelineError::Config(format!("thread pool: {e}")))?
            .install(|| execute(cfg, stage)),
        None => execute(cfg, stage),
    }
}

fn observed_days(users: &UserIndex) -> f64 {
    let (lo, hi) = users
        .iter()
        .flat_map(|s| s.events.first().zip(s.events.last()))
        .fold((i64::MAX, i64::MIN), |(lo, hi), (a, b)| {
            (lo.min(a.created_utc), hi.max(b.created_utc))
        });
    if lo > hi {
        return 0.0;
    }
    ((hi - lo).max(1)) as f64 / SECONDS_PER_DAY
}

fn execute(cfg: &RunConfig, stage: Stage) -> Result<RunSummary, PipelineError> {
    let started = chrono::Utc::now();
    let catalog = load_catalog(cfg.catalog.as_ref().expect("validated"))?;
    let mut corpus = ingest_files(&cfg.comments, &cfg.posts, &catalog, cfg.window()?)?;
    let mut manifest = Manifest::default();
    manifest.set("interestflow_version", env!("CARGO_PKG_VERSION"));
    manifest.set("stage", stage.name());
    manifest.set(
        "started_at",
        started.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
    );
    for (k, v) in cfg.echo() {
        manifest.set(format!("config.{k}"), v);
    }
    ingest_manifest(&mut manifest, &corpus);

    let out = &cfg.output;
    let mut files = Vec::new();

    let window_days = match (cfg.from, cfg.to) {
        (Some(a), Some(b)) => (b - a) as f64 / SECONDS_PER_DAY,
        _ => observed_days(&corpus.users),
    };
    if stage.includes(Stage::Bots) || cfg.exclude_bots {
        let (report, reports) = bot_report(&corpus.users, &catalog, window_days, cfg);
        let flagged = report.flagged().count();
        manifest.set("bots.window_days", num(window_days));
        manifest.set("bots.entropy_users", reports.len());
        manifest.set("bots.entropy_threshold", num(report.entropy_threshold));
        manifest.set("bots.flagged", flagged);
        if stage.includes(Stage::Bots) {
            files.push(bots_table(&report).write(out, BOTS)?);
            files.push(entropy_profile_table(&reports).write(out, ENTROPY_PROFILE)?);
        }
        if cfg.exclude_bots {
            corpus.users.retain(|s| !report.is_flagged(&s.author));
            manifest.set("bots.excluded", flagged);
            manifest.set("users.analysed", corpus.users.len());
        }
    }

    if stage.includes(Stage::Stats) {
        let (dist, fits, lifetimes) = stats_tables(&corpus, cfg.bins_per_decade);
        files.push(dist.write(out, DISTRIBUTIONS)?);
        files.push(fits.write(out, FITS)?);
        files.push(lifetimes.write(out, SUBREDDIT_LIFETIMES)?);
    }

    if stage.includes(Stage::Gini) {
        let table = gini_table(&corpus.users, &catalog, cfg, &mut manifest)?;
        files.push(table.write(out, GINI_CURVE)?);
    }

    if stage.includes(Stage::Interest) {
        let pop = analyze_population(&corpus.users, &catalog, &cfg.interest)?;
        let mut events = Table::new(&["author", "bin", "kind", "from", "to", "angle"]);
        for (author, e) in pop.events() {
            events.push(vec![
                author.to_string(),
                e.at_bin.to_string(),
                e.kind.name().to_string(),
                e.from.clone(),
                e.to.clone(),
                num(e.angle),
            ]);
        }
        files.push(events.write(out, INTEREST_EVENTS)?);
        let all: Vec<_> = pop.users.iter().flat_map(|u| &u.events).collect();
        let subs = transition_matrix(all.iter().copied(), Level::Subreddit);
        let topics = transition_matrix(all.iter().copied(), Level::Topic);
        files.push(matrix_table(&subs).write(out, TRANSITIONS_SUBREDDIT)?);
        files.push(matrix_table(&topics).write(out, TRANSITIONS_TOPIC)?);
        let summary = event_count_distributions(&pop.users);
        let mut counts = Table::new(&["kind", "events_per_user", "users"]);
        for (kind, h) in [("drift", &summary.drifts), ("shift", &summary.shifts)] {
            for (k, c) in h.counts.iter().enumerate() {
                counts.push(vec![kind.to_string(), k.to_string(), c.to_string()]);
            }
        }
        files.push(counts.write(out, EVENT_COUNTS)?);
        manifest.set("interest.users", pop.users.len());
        manifest.set("interest.skipped", pop.skipped.len());
        manifest.set("interest.events.drift", subs.total());
        manifest.set("interest.events.shift", topics.total());
        manifest.set(
            "interest.drift_user_fraction",
            num(summary.drift_user_fraction),
        );
        manifest.set(
            "interest.shift_user_fraction",
            num(summary.shift_user_fraction),
        );
        for (author, err) in pop.skipped.iter().take(5) {
            log::warn!("interest: skipped {author}: {err}");
        }
    }

    let manifest_path = out.join(MANIFEST);
    manifest.set(
        "outputs",
        files
            .iter()
            .filter_map(|p| p.file_name())
            .map(|n| n.to_string_lossy().into_owned())
            .collect::<Vec<_>>()
            .join(","),
    );
    fs::write(&manifest_path, manifest.to_text()).map_err(|source| PipelineError::Io {
        path: manifest_path.clone(),
        source,
    })?;
    files.push(manifest_path);
    Ok(RunSummary {
        output: out.clone(),
        files,
        manifest,
    })
}

fn ingest_manifest(m: &mut Manifest, corpus: &Corpus) {
    for (i, d) in corpus.inputs.iter().enumerate() {
        m.set(format!("input.{i}.path"), d.path.display());
        m.set(format!("input.{i}.kind"), d.kind.name());
        m.set(format!("input.{i}.sha256"), &d.sha256);
        m.set(format!("input.{i}.lines_read"), d.counters.lines_read);
        m.set(format!("input.{i}.accepted"), d.counters.accepted);
        m.set(format!("input.{i}.skipped"), d.counters.skipped());
    }
    let c = &corpus.counters;
    m.set("records.read", c.lines_read);
    m.set("records.accepted", c.accepted);
    m.set("records.skipped", c.skipped());
    m.set("records.skipped.malformed", c.malformed);
    m.set("records.skipped.missing_field", c.missing_field);
    m.set("records.skipped.invalid_field", c.invalid_field);
    m.set("records.skipped.deleted_author", c.deleted_author);
    m.set("records.skipped.filtered_out", c.filtered_out);
    m.set("users.indexed", corpus.users.len());
    m.set("posts.indexed", corpus.posts.len());
}

fn bot_report(
    users: &UserIndex,
    catalog: &SubredditCatalog,
    window_days: f64,
    cfg: &RunConfig,
) -> (BotReport, Vec<bots::EntropyReport>) {
    let reports = bots::entropy_reports(users, catalog, cfg.bots.min_comments_for_entropy);
    let report = match bots::flag_automated(&reports, users, window_days, &cfg.bots) {
        Ok(r) => r,
        Err(e) => {
            log::warn!("bots: {e}; entropy flags disabled");
            bots::apply_flags(&reports, users, window_days, &cfg.bots, f64::NEG_INFINITY)
        }
    };
    (report, reports)
}

fn bots_table(report: &BotReport) -> Table {
    let mut t = Table::new(&["author", "entropy_bits", "n_comments", "flagged", "reasons"]);
    for f in &report.flags {
        t.push(vec![
            f.author.clone(),
            f.entropy_bits.map(num).unwrap_or_default(),
            f.n_comments.to_string(),
            f.flagged().to_string(),
            f.reasons.to_string(),
        ]);
    }
    t
}

fn entropy_profile_table(reports: &[bots::EntropyReport]) -> Table {
    let mut t = Table::new(&[
        "entropy_lo",
        "entropy_hi",
        "users",
        "name_pattern_fraction",
        "mean_comments",
    ]);
    for r in bots::entropy_profile(reports, 0.25) {
        t.push(vec![
            num(r.lo),
            num(r.hi),
            r.users.to_string(),
            num(r.name_pattern_fraction),
            num(r.mean_comments),
        ]);
    }
    t
}

fn fit_rows<T>(
    t: &mut Table,
    name: &str,
    fit: Result<T, StatsError>,
    params: impl FnOnce(&T) -> Vec<(&'static str, f64)>,
) {
    match fit {
        Ok(f) => {
            t.push(vec![name.into(), "status".into(), "ok".into()]);
            for (p, v) in params(&f) {
                t.push(vec![name.into(), p.into(), num(v)]);
            }
        }
        Err(e) => t.push(vec![name.into(), "status".into(), e.to_string()]),
    }
}

/// Activity and lifetime distributions, their fits, and mean user lifetime
/// per subreddit.
pub fn stats_tables(corpus: &Corpus, bins_per_decade: usize) -> (Table, Table, Table) {
    let mut dist = Table::new(&[
        "distribution",
        "bin_lo",
        "bin_hi",
        "value",
        "count",
        "density",
    ]);
    let mut fits = Table::new(&["fit", "param", "value"]);
    let mut hists: Vec<(String, Histogram)> = ActivityMeasure::ALL
        .iter()
        .map(|&m| {
            (
                m.name().to_string(),
                activity_distribution(&corpus.users, m, bins_per_decade),
            )
        })
        .collect();

    let post_hours: Vec<f64> = corpus
        .posts
        .iter()
        .filter_map(|(_, ts)| post_lifetime(ts).ok())
        .map(|l| l.hours())
        .collect();
    hists.push((
        "post_lifetime_hours".into(),
        Histogram::logarithmic(&post_hours, bins_per_decade),
    ));

    for (name, h) in &hists {
        histogram_rows(&mut dist, name, h);
        fit_rows(
            &mut fits,
            &format!("{name}.power_law"),
            fit_power_law(h),
            |f| vec![("a", f.a), ("b", f.b), ("residual", f.residual)],
        );
        fit_rows(
            &mut fits,
            &format!("{name}.double_power_law"),
            fit_double_power_law(h),
            |f| {
                vec![
                    ("breakpoint", f.breakpoint),
                    ("lower_a", f.lower.a),
                    ("lower_b", f.lower.b),
                    ("upper_a", f.upper.a),
                    ("upper_b", f.upper.b),
                    ("residual", f.residual),
                    ("improvement", f.improvement()),
                ]
            },
        );
    }

    // single-comment users have no extent and are left out
    let user_days: Vec<f64> = corpus
        .users
        .iter()
        .filter(|s| s.comment_count() >= 2)
        .filter_map(|s| user_lifetime(s, None).ok())
        .map(|l| l.days())
        .collect();
    let max_day = user_days
        .iter()
        .copied()
        .fold(0.0f64, f64::max)
        .ceil()
        .max(1.0);
    let user_hist = Histogram::linear_range(&user_days, 0.0, max_day, max_day as usize);
    histogram_rows(&mut dist, "user_lifetime_days", &user_hist);
    fit_rows(
        &mut fits,
        "user_lifetime_days.skew_gaussian",
        fit_skew_gaussian(&user_hist),
        |f| {
            vec![
                ("location", f.location),
                ("scale", f.scale),
                ("shape", f.shape),
                ("gamma", f.gamma),
                ("mode", f.mode),
                ("residual", f.residual),
            ]
        },
    );

    let mut lifetimes = Table::new(&["subreddit", "mean_lifetime_days", "users"]);
    for (sub, mean, n) in subreddit_mean_user_lifetimes(&corpus.users) {
        lifetimes.push(vec![sub, num(mean), n.to_string()]);
    }
    (dist, fits, lifetimes)
}

fn gini_table(
    users: &UserIndex,
    catalog: &SubredditCatalog,
    cfg: &RunConfig,
    manifest: &mut Manifest,
) -> Result<Table, PipelineError> {
    let axis = SubredditAxis::from_catalog(catalog);
    let vectors: Vec<(&str, ActivityVector)> = users
        .iter()
        .map(|s| (s.author.as_str(), activity_vector(s, &axis)))
        .collect();
    let null = NullModelConfig {
        seed: cfg.seed,
        mode: cfg.gini_mode,
        repetitions: cfg.null_repetitions,
        bins_per_decade: cfg.gini_bins_per_decade,
    };
    let mut t = Table::new(&[
        "bin_lo",
        "bin_hi",
        "mean_subreddits",
        "median_subreddits",
        "mean_gini",
        "null_mean_gini",
        "users",
        "gini_users",
    ]);
    manifest.set("gini.subreddits", axis.len());
    let curve = match gini_vs_activity(&vectors, &null) {
        Ok(c) => c,
        Err(ConcentrationError::EmptyPopulation) => {
            log::warn!("gini: no users with activity; empty curve");
            return Ok(t);
        }
        Err(e) => return Err(e.into()),
    };
    for b in &curve.bins {
        t.push(vec![
            num(b.lo),
            num(b.hi),
            num(b.mean_subreddits),
            num(b.median_subreddits),
            num(b.mean_gini),
            num(b.null_mean_gini),
            b.users.to_string(),
            b.gini_users.to_string(),
        ]);
    }
    manifest.set(
        "gini.users",
        curve.bins.iter().map(|b| b.users).sum::<usize>(),
    );
    manifest.set(
        "gini.defined_users",
        curve.bins.iter().map(|b| b.gini_users).sum::<usize>(),
    );
    Ok(t)
}
