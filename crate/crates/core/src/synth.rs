//! Seeded synthetic corpora with planted interest events and bots.
//!
//! Background users draw their comment totals from a power law, spend a
//! fixed share of them on a home subreddit and spread their comments evenly
//! over a skew-normal lifetime. Planted users switch cleanly between
//! single-subreddit bins; planted bots repeat one comment length. Every
//! planted fact goes to the ledger.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Pareto, Zipf};
use serde::Serialize;
use thiserror::Error;

use crate::concentration::user_seed;
use crate::ingest::{
    CatalogEntry, CommentRecord, PostRecord, Record, SubredditCatalog, TimeWindow, TopicClass,
};
use crate::interest::EventKind;
use crate::stats::{SkewNormal, SECONDS_PER_DAY};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

/// 2018-06-01T00:00:00Z.
pub const DEFAULT_START: i64 = 1_527_811_200;

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedUser {
    pub author: String,
    /// Subreddit of each bin, in order. Every bin holds `bin_size` comments.
    pub bins: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedBot {
    pub author: String,
    pub subreddit: String,
    pub fixed_length: u32,
    pub n_comments: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerEvent {
    pub author: String,
    /// Index of the later bin of the transition.
    pub bin: usize,
    pub kind: EventKind,
    /// Subreddits for drifts, topic classes for shifts.
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ledger {
    pub events: Vec<LedgerEvent>,
    pub bots: Vec<PlantedBot>,
}

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub n_users: usize,
    /// Exponent of the per-user comment-total density `p(I) ~ I^-exponent`.
    pub activity_exponent: f64,
    pub min_comments: u64,
    pub max_comments: u64,
    /// Share of each background user's comments on their home subreddit.
    pub loyalty: f64,
    /// Zipf exponent of subreddit popularity.
    pub popularity_exponent: f64,
    /// User lifetime distribution, in days.
    pub lifetime: SkewNormal,
    pub start: i64,
    pub days: f64,
    /// Posts open every `post_bucket_hours` in every subreddit.
    pub post_bucket_hours: f64,
    pub bin_size: usize,
    pub catalog: SubredditCatalog,
    pub planted_users: Vec<PlantedUser>,
    pub planted_bots: Vec<PlantedBot>,
    pub seed: u64,
}

/// Catalog of `n` subreddits `sub0000, sub0001, …` with topics assigned
/// round-robin. The first `exotic` are flagged exotic; the last `excluded`
/// are excluded.
pub fn synthetic_catalog(n: usize, exotic: usize, excluded: usize) -> SubredditCatalog {
    let mut c = SubredditCatalog::new();
    for i in 0..n {
        let entry = CatalogEntry {
            topic_class: TopicClass::ALL[i % TopicClass::ALL.len()],
            included: i + excluded < n,
            exotic_rules: i < exotic,
        };
        c.insert(&format!("sub{i:04}"), entry)
            .expect("names are unique");
    }
    c
}

/// Skew-normal with the given shape and scale whose density peaks at `mode`.
pub fn lifetime_with_mode(mode: f64, scale: f64, shape: f64) -> SkewNormal {
    let unit = SkewNormal::new(0.0, 1.0, shape).mode();
    SkewNormal::new(mode - scale * unit, scale, shape)
}

impl SynthSpec {
    pub fn new(n_users: usize, n_subreddits: usize, seed: u64) -> Self {
        Self {
            n_users,
            activity_exponent: 2.0,
            min_comments: 1,
            max_comments: 20_000,
            loyalty: 0.5,
            popularity_exponent: 1.0,
            lifetime: lifetime_with_mode(20.0, 40.0, 3.9),
            start: DEFAULT_START,
            days: 214.0,
            post_bucket_hours: 6.0,
            bin_size: 20,
            catalog: synthetic_catalog(n_subreddits, 1, 0),
            planted_users: Vec::new(),
            planted_bots: Vec::new(),
            seed,
        }
    }

    pub fn window(&self) -> TimeWindow {
        TimeWindow {
            start: self.start,
            end: self.end(),
        }
    }

    fn end(&self) -> i64 {
        self.start + (self.days * SECONDS_PER_DAY) as i64
    }

    /// Included subreddits without exotic rules, where planted behaviour
    /// is placed.
    fn plain_subreddits(&self) -> Vec<&str> {
        self.catalog
            .iter()
            .filter(|(_, e)| e.included && !e.exotic_rules)
            .map(|(n, _)| n)
            .collect()
    }

    /// Adds `n` planted users, each alternating between a home subreddit and
    /// `excursions` others in the pattern `H H X1 H H X2 … H H`. Excursions
    /// alternate between the home topic (drifts) and other topics (shifts),
    /// so each user carries `2 × excursions` events.
    pub fn plant_users(&mut self, n: usize, excursions: usize) -> Result<(), SynthError> {
        let plain: Vec<String> = self
            .plain_subreddits()
            .into_iter()
            .map(String::from)
            .collect();
        let topic = |s: &str| self.catalog.topic_of(s).expect("catalogued");
        let mut rng = ChaCha8Rng::seed_from_u64(user_seed(self.seed, "synth/planted"));
        let offset = self.planted_users.len();
        // homes need a same-topic sibling to drift to
        let homes: Vec<&String> = plain
            .iter()
            .filter(|h| excursions == 0 || plain.iter().any(|s| s != *h && topic(s) == topic(h)))
            .collect();
        for j in 0..n {
            let home = *homes
                .choose(&mut rng)
                .ok_or_else(|| invalid("no plain subreddit with a same-topic sibling"))?;
            let mut bins = vec![home.clone(), home.clone()];
            for x in 0..excursions {
                let same_topic = x % 2 == 0;
                let pool: Vec<&String> = plain
                    .iter()
                    .filter(|s| *s != home && (topic(s) == topic(home)) == same_topic)
                    .collect();
                let pick = pool.choose(&mut rng).ok_or_else(|| {
                    invalid(format!(
                        "no subreddit for a {} excursion",
                        if same_topic { "drift" } else { "shift" }
                    ))
                })?;
                bins.extend([(*pick).clone(), home.clone(), home.clone()]);
            }
            self.planted_users.push(PlantedUser {
                author: format!("planted{:05}", offset + j),
                bins,
            });
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.catalog.is_empty() {
            return Err(invalid("catalog is empty"));
        }
        if self.activity_exponent <= 1.0 {
            return Err(invalid("activity exponent must exceed 1"));
        }
        if self.min_comments == 0 || self.max_comments < self.min_comments {
            return Err(invalid("need 1 <= min_comments <= max_comments"));
        }
        if !(0.0..=1.0).contains(&self.loyalty) {
            return Err(invalid("loyalty must lie in [0, 1]"));
        }
        if !(self.days > 0.0 && self.post_bucket_hours > 0.0) {
            return Err(invalid("window and post buckets must be positive"));
        }
        if self.bin_size < 2 {
            return Err(invalid("bin size must be at least 2"));
        }
        let mut names = BTreeSet::new();
        for p in &self.planted_users {
            if p.bins.len() < 2 {
                return Err(invalid(format!(
                    "planted user {} needs at least two bins",
                    p.author
                )));
            }
            for s in &p.bins {
                if !self.catalog.is_included(s) {
                    return Err(invalid(format!(
                        "planted user {} uses unknown subreddit {s}",
                        p.author
                    )));
                }
            }
            if !names.insert(p.author.as_str()) {
                return Err(invalid(format!("duplicate planted author {}", p.author)));
            }
        }
        for b in &self.planted_bots {
            if !self.catalog.is_included(&b.subreddit) || b.n_comments == 0 {
                return Err(invalid(format!("planted bot {} is malformed", b.author)));
            }
            if !names.insert(b.author.as_str()) {
                return Err(invalid(format!("duplicate planted author {}", b.author)));
            }
        }
        Ok(())
    }

    /// Events implied by the planted bin sequences.
    pub fn ledger(&self) -> Ledger {
        let mut events = Vec::new();
        for p in &self.planted_users {
            for (b, w) in p.bins.windows(2).enumerate() {
                if w[0] == w[1] {
                    continue;
                }
                let (t0, t1) = (
                    self.catalog.topic_of(&w[0]).unwrap(),
                    self.catalog.topic_of(&w[1]).unwrap(),
                );
                let (kind, from, to) = if t0 != t1 {
                    (EventKind::Shift, t0.to_string(), t1.to_string())
                } else {
                    (EventKind::Drift, w[0].clone(), w[1].clone())
                };
                events.push(LedgerEvent {
                    author: p.author.clone(),
                    bin: b + 1,
                    kind,
                    from,
                    to,
                });
            }
        }
        Ledger {
            events,
            bots: self.planted_bots.clone(),
        }
    }

    fn n_buckets(&self) -> i64 {
        ((self.days * 24.0) / self.post_bucket_hours).ceil() as i64
    }

    fn n_authors(&self) -> usize {
        self.n_users + self.planted_users.len() + self.planted_bots.len()
    }

    fn background_total(&self, rng: &mut ChaCha8Rng) -> u64 {
        let pareto =
            Pareto::new(self.min_comments as f64, self.activity_exponent - 1.0).expect("validated");
        (pareto.sample(rng).floor() as u64).clamp(self.min_comments, self.max_comments)
    }

    /// Comment totals of the background users, without generating them.
    pub fn background_totals(&self) -> Vec<u64> {
        (0..self.n_users)
            .map(|i| self.background_total(&mut self.user_rng(&background_name(i))))
            .collect()
    }

    /// Comment records plus post records this spec produces.
    pub fn record_count(&self) -> u64 {
        let comments: u64 = self.background_totals().iter().sum::<u64>()
            + self
                .planted_users
                .iter()
                .map(|p| (p.bins.len() * self.bin_size) as u64)
                .sum::<u64>()
            + self
                .planted_bots
                .iter()
                .map(|b| b.n_comments as u64)
                .sum::<u64>();
        comments + self.catalog.len() as u64 * self.n_buckets() as u64
    }

    fn user_rng(&self, author: &str) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(user_seed(self.seed, &format!("synth/{author}")))
    }

    fn author(&self, idx: usize) -> String {
        let planted = self.planted_users.len();
        if idx < self.n_users {
            background_name(idx)
        } else if idx < self.n_users + planted {
            self.planted_users[idx - self.n_users].author.clone()
        } else {
            self.planted_bots[idx - self.n_users - planted]
                .author
                .clone()
        }
    }

    /// Comments of author `idx` (background users first, then planted users,
    /// then bots).
    fn user_comments(&self, idx: usize, ctx: &GenContext) -> Vec<CommentRecord> {
        let author = self.author(idx);
        let mut rng = self.user_rng(&author);
        let planted = self.planted_users.len();
        let (subs, lengths): (Vec<String>, Vec<u32>) = if idx < self.n_users {
            let total = self.background_total(&mut rng) as usize;
            let home = ctx.pick_subreddit(&mut rng);
            let loyal = ((self.loyalty * total as f64).ceil() as usize).min(total);
            let mut subs: Vec<String> = std::iter::repeat_n(home.to_string(), loyal)
                .chain((loyal..total).map(|_| ctx.pick_subreddit(&mut rng).to_string()))
                .collect();
            subs.shuffle(&mut rng);
            let lengths = (0..total).map(|_| ctx.body_length(&mut rng)).collect();
            (subs, lengths)
        } else if idx < self.n_users + planted {
            let p = &self.planted_users[idx - self.n_users];
            let subs: Vec<String> = p
                .bins
                .iter()
                .flat_map(|s| std::iter::repeat_n(s.clone(), self.bin_size))
                .collect();
            let lengths = (0..subs.len()).map(|_| ctx.body_length(&mut rng)).collect();
            (subs, lengths)
        } else {
            let b = &self.planted_bots[idx - self.n_users - planted];
            (
                vec![b.subreddit.clone(); b.n_comments],
                vec![b.fixed_length; b.n_comments],
            )
        };
        let n = subs.len();
        let span = (self.end() - self.start) as f64;
        let life = if n < 2 || idx >= self.n_users {
            // planted users and bots are active across the whole window
            if n < 2 {
                0.0
            } else {
                span
            }
        } else {
            self.sample_lifetime(&mut rng, span)
        };
        let first = self.start as f64 + rng.random::<f64>() * (span - life);
        subs.into_iter()
            .zip(lengths)
            .enumerate()
            .map(|(k, (subreddit, body_length))| {
                let t = if n < 2 {
                    first
                } else {
                    first + life * k as f64 / (n - 1) as f64
                };
                let created_utc = t.round() as i64;
                let post = ctx.parent_post(&self.catalog, &subreddit, created_utc, &mut rng);
                CommentRecord {
                    author: author.clone(),
                    subreddit,
                    created_utc,
                    body_length,
                    comment_id: format!("c{idx:x}_{k:x}"),
                    parent_post_id: post,
                }
            })
            .collect()
    }

    /// Lifetime in seconds, redrawn until it fits in `[0, span]` so the
    /// window edges do not pile up mass.
    fn sample_lifetime(&self, rng: &mut ChaCha8Rng, span: f64) -> f64 {
        for _ in 0..1000 {
            let life = self.lifetime.sample(rng) * SECONDS_PER_DAY;
            if (0.0..=span).contains(&life) {
                return life;
            }
        }
        (self.lifetime.mode() * SECONDS_PER_DAY).clamp(0.0, span)
    }

    /// One post per subreddit and bucket on average, with subreddits drawn
    /// by popularity and authors skewed towards low user indices.
    fn posts(&self, ctx: &GenContext) -> Vec<PostRecord> {
        let mut rng = self.user_rng("posts");
        let bucket = (self.post_bucket_hours * 3600.0) as i64;
        let per_bucket = self.catalog.len();
        let mut out = Vec::with_capacity(per_bucket * self.n_buckets() as usize);
        for b in 0..self.n_buckets() {
            for k in 0..per_bucket {
                let subreddit = ctx.pick_subreddit(&mut rng).to_string();
                let u: f64 = rng.random();
                let author = if self.n_users > 0 {
                    background_name(
                        ((u.powi(3) * self.n_users as f64) as usize).min(self.n_users - 1),
                    )
                } else {
                    "poster".to_string()
                };
                let offset = rng.random_range(0..bucket);
                out.push(PostRecord {
                    author,
                    subreddit,
                    created_utc: (self.start + b * bucket + offset).min(self.end()),
                    post_id: format!("q{b:x}_{k:x}"),
                });
            }
        }
        out
    }
}

fn invalid(msg: impl Into<String>) -> SynthError {
    SynthError::InvalidSpec(msg.into())
}

fn background_name(i: usize) -> String {
    format!("user{i:07}")
}

fn post_id(subreddit: usize, bucket: i64) -> String {
    format!("p{subreddit:x}_{bucket:x}")
}

struct GenContext {
    names: Vec<String>,
    zipf: Zipf<f64>,
    lengths: LogNormal<f64>,
    lag: Pareto<f64>,
    start: i64,
    bucket: i64,
    n_buckets: i64,
}

impl GenContext {
    fn new(spec: &SynthSpec) -> Self {
        let names: Vec<String> = spec.catalog.iter().map(|(n, _)| n.to_string()).collect();
        Self {
            zipf: Zipf::new(names.len() as f64, spec.popularity_exponent)
                .expect("nonempty catalog"),
            names,
            lengths: LogNormal::new(3.5, 1.0).expect("valid"),
            lag: Pareto::new(60.0, 1.5).expect("valid"),
            start: spec.start,
            bucket: (spec.post_bucket_hours * 3600.0) as i64,
            n_buckets: spec.n_buckets(),
        }
    }

    fn pick_subreddit(&self, rng: &mut ChaCha8Rng) -> &str {
        &self.names[self.zipf.sample(rng) as usize - 1]
    }

    fn body_length(&self, rng: &mut ChaCha8Rng) -> u32 {
        self.lengths.sample(rng).round().clamp(1.0, 10_000.0) as u32
    }

    /// Post the comment replies to: the one opened a power-law lag earlier.
    fn parent_post(
        &self,
        catalog: &SubredditCatalog,
        subreddit: &str,
        t: i64,
        rng: &mut ChaCha8Rng,
    ) -> String {
        let lag = self.lag.sample(rng).min(7.0 * SECONDS_PER_DAY) as i64;
        let b = ((t - lag - self.start).max(0) / self.bucket).min(self.n_buckets - 1);
        post_id(catalog.position(subreddit).expect("catalogued"), b)
    }
}

/// In-memory corpus: all comment records (grouped by author), then all
/// post records.
pub struct SynthCorpus {
    pub records: Vec<Record>,
    pub ledger: Ledger,
}

pub fn generate_corpus(spec: &SynthSpec) -> Result<SynthCorpus, SynthError> {
    spec.validate()?;
    let ctx = GenContext::new(spec);
    let mut records: Vec<Record> = (0..spec.n_authors())
        .flat_map(|i| spec.user_comments(i, &ctx))
        .map(Record::Comment)
        .collect();
    records.extend(spec.posts(&ctx).into_iter().map(Record::Post));
    Ok(SynthCorpus {
        records,
        ledger: spec.ledger(),
    })
}

#[derive(Serialize)]
struct CommentLine<'a> {
    author: &'a str,
    subreddit: &'a str,
    created_utc: i64,
    body: &'a str,
    id: &'a str,
    link_id: String,
}

#[derive(Serialize)]
struct PostLine<'a> {
    author: &'a str,
    subreddit: &'a str,
    created_utc: i64,
    id: &'a str,
}

/// Files produced by [`write_corpus`].
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub comment_files: Vec<PathBuf>,
    pub post_files: Vec<PathBuf>,
    pub catalog: PathBuf,
    pub ledger_events: PathBuf,
    pub ledger_bots: PathBuf,
    pub records: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct WriteOptions {
    pub shards: usize,
    pub compress: bool,
}

impl Default for WriteOptions {
    fn default() -> Self {
        Self {
            shards: 4,
            compress: true,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> SynthError + '_ {
    move |source| SynthError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn open_sink(path: &Path, compress: bool) -> Result<Box<dyn Write + Send>, SynthError> {
    let file = BufWriter::with_capacity(1 << 20, File::create(path).map_err(io_err(path))?);
    Ok(if compress {
        Box::new(
            zstd::Encoder::new(file, 1)
                .map_err(io_err(path))?
                .auto_finish(),
        )
    } else {
        Box::new(file)
    })
}

/// Writes the corpus as newline-delimited JSON shards (users are dealt
/// round-robin over `shards` comment files) plus posts, catalog and ledger.
/// Output bytes depend only on the spec and the options.
pub fn write_corpus(
    spec: &SynthSpec,
    dir: &Path,
    opts: WriteOptions,
) -> Result<SynthOutput, SynthError> {
    use rayon::prelude::*;
    spec.validate()?;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let ext = if opts.compress { "jsonl.zst" } else { "jsonl" };
    let shards = opts.shards.max(1);
    let ctx = GenContext::new(spec);
    let max_len = spec
        .planted_bots
        .iter()
        .map(|b| b.fixed_length as usize)
        .max()
        .unwrap_or(0)
        .max(10_000);
    let body = "x".repeat(max_len);

    let comment_files: Vec<PathBuf> = (0..shards)
        .map(|k| dir.join(format!("comments_{k:03}.{ext}")))
        .collect();
    let counts: Vec<u64> = comment_files
        .par_iter()
        .enumerate()
        .map(|(k, path)| -> Result<u64, SynthError> {
            let mut out = open_sink(path, opts.compress)?;
            let mut n = 0;
            for idx in (k..spec.n_authors()).step_by(shards) {
                for c in spec.user_comments(idx, &ctx) {
                    let line = CommentLine {
                        author: &c.author,
                        subreddit: &c.subreddit,
                        created_utc: c.created_utc,
                        body: &body[..c.body_length as usize],
                        id: &c.comment_id,
                        link_id: format!("t3_{}", c.parent_post_id),
                    };
                    serde_json::to_writer(&mut out, &line).map_err(|e| SynthError::Io {
                        path: path.clone(),
                        source: e.into(),
                    })?;
                    out.write_all(b"\n").map_err(io_err(path))?;
                    n += 1;
                }
            }
            out.flush().map_err(io_err(path))?;
            Ok(n)
        })
        .collect::<Result<_, _>>()?;

    let posts_path = dir.join(format!("posts.{ext}"));
    let posts = spec.posts(&ctx);
    {
        let mut out = open_sink(&posts_path, opts.compress)?;
        for p in &posts {
            let line = PostLine {
                author: &p.author,
                subreddit: &p.subreddit,
                created_utc: p.created_utc,
                id: &p.post_id,
            };
            serde_json::to_writer(&mut out, &line).map_err(|e| SynthError::Io {
                path: posts_path.clone(),
                source: e.into(),
            })?;
            out.write_all(b"\n").map_err(io_err(&posts_path))?;
        }
        out.flush().map_err(io_err(&posts_path))?;
    }

    let catalog = dir.join("catalog.csv");
    fs::write(&catalog, spec.catalog.to_csv()).map_err(io_err(&catalog))?;
    let ledger = spec.ledger();
    let ledger_events = dir.join("ledger_events.csv");
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["author", "bin", "kind", "from", "to"])
        .expect("in-memory write");
    for e in &ledger.events {
        w.write_record([&e.author, &e.bin.to_string(), e.kind.name(), &e.from, &e.to])
            .expect("in-memory write");
    }
    fs::write(&ledger_events, w.into_inner().expect("in-memory"))
        .map_err(io_err(&ledger_events))?;
    let ledger_bots = dir.join("ledger_bots.csv");
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["author", "subreddit", "fixed_length", "n_comments"])
        .expect("in-memory write");
    for b in &ledger.bots {
        w.write_record([
            &b.author,
            &b.subreddit,
            &b.fixed_length.to_string(),
            &b.n_comments.to_string(),
        ])
        .expect("in-memory write");
    }
    fs::write(&ledger_bots, w.into_inner().expect("in-memory")).map_err(io_err(&ledger_bots))?;

    Ok(SynthOutput {
        comment_files,
        post_files: vec![posts_path],
        catalog,
        ledger_events,
        ledger_bots,
        records: counts.iter().sum::<u64>() + posts.len() as u64,
    })
}

/// Reads a ledger written by [`write_corpus`].
pub fn read_ledger_events(path: &Path) -> Result<Vec<LedgerEvent>, SynthError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| SynthError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    })?;
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(|e| SynthError::Io {
            path: path.to_path_buf(),
            source: e.into(),
        })?;
        let kind = match &row[2] {
            "drift" => EventKind::Drift,
            "shift" => EventKind::Shift,
            other => return Err(invalid(format!("unknown event kind {other}"))),
        };
        let bin = row[1]
            .parse()
            .map_err(|_| invalid(format!("bad bin {}", &row[1])))?;
        out.push(LedgerEvent {
            author: row[0].into(),
            bin,
            kind,
            from: row[3].into(),
            to: row[4].into(),
        });
    }
    Ok(out)
}
