//! Interest dynamics: per-user comment bins encoded as count vectors over
//! the user's subreddits and over topic classes, angles between consecutive
//! bins, and drift / shift detection.
//!
//! A transition between bins `b` and `b+1` whose topic-level angle exceeds
//! the threshold is a *shift*; otherwise, one whose subreddit-level angle
//! exceeds it is a *drift*. Each event is labelled with the dominant element
//! of the two bins.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::ingest::{Event, SubredditCatalog, TopicClass, UserActivitySeries, UserIndex};
use crate::stats::Histogram;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterestError {
    #[error("subreddit `{0}` has no topic class")]
    UncatalogedSubreddit(String),
    #[error("`{0}` is not on the bin axis")]
    OffAxis(String),
    #[error("angle undefined for an all-zero vector")]
    ZeroVector,
    #[error("vectors live on different axes ({0} vs {1} entries)")]
    AxisMismatch(usize, usize),
    #[error("need at least two bins, got {0}")]
    TooFewBins(usize),
    #[error("subreddit and topic sequences differ in length ({subreddit} vs {topic})")]
    MisalignedSequences { subreddit: usize, topic: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    Subreddit,
    Topic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    Drift,
    Shift,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Drift => "drift",
            EventKind::Shift => "shift",
        }
    }

    pub fn level(self) -> Level {
        match self {
            EventKind::Drift => Level::Subreddit,
            EventKind::Shift => Level::Topic,
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct InterestConfig {
    /// Target number of comments per bin.
    pub bin_size: usize,
    pub threshold_deg: f64,
    /// A user qualifies with strictly more than this many comments.
    pub min_comments: usize,
    /// Apply `min_comments` to a single subreddit rather than the user total.
    pub per_subreddit: bool,
}

impl Default for InterestConfig {
    fn default() -> Self {
        Self {
            bin_size: 20,
            threshold_deg: 45.0,
            min_comments: 60,
            per_subreddit: true,
        }
    }
}

impl InterestConfig {
    pub fn validate(&self) -> Result<(), InterestError> {
        if self.bin_size < 2 {
            return Err(InterestError::InvalidConfig(format!(
                "bin size {} < 2",
                self.bin_size
            )));
        }
        if !(self.threshold_deg > 0.0 && self.threshold_deg < 90.0) {
            return Err(InterestError::InvalidConfig(format!(
                "threshold {}° outside (0°, 90°)",
                self.threshold_deg
            )));
        }
        Ok(())
    }
}

/// Authors with more than `min_comments` comments, counted in one subreddit
/// (`per_subreddit`) or over all of them.
pub fn select_active_users(index: &UserIndex, cfg: &InterestConfig) -> BTreeSet<String> {
    index
        .iter()
        .filter(|s| {
            if cfg.per_subreddit {
                s.comments_per_subreddit()
                    .values()
                    .any(|&n| n > cfg.min_comments)
            } else {
                s.comment_count() > cfg.min_comments
            }
        })
        .map(|s| s.author.clone())
        .collect()
}

/// Group sizes for `n` comments: consecutive groups of `target`, with a
/// trailing remainder smaller than half a group folded into the last one.
pub fn bin_sizes(n: usize, target: usize) -> Vec<usize> {
    assert!(target >= 2, "target bin size must be at least 2");
    if n == 0 {
        return Vec::new();
    }
    let full = n / target;
    let rem = n % target;
    if full == 0 {
        return vec![n];
    }
    let mut sizes = vec![target; full];
    if rem > 0 {
        if 2 * rem < target {
            *sizes.last_mut().expect("full > 0") += rem;
        } else {
            sizes.push(rem);
        }
    }
    sizes
}

/// Splits the user's comments, in time order, into groups of about
/// `target` comments.
pub fn bin_comments(series: &UserActivitySeries, target: usize) -> Vec<Vec<&Event>> {
    let comments: Vec<&Event> = series.comments().collect();
    let mut out = Vec::new();
    let mut start = 0;
    for size in bin_sizes(comments.len(), target) {
        out.push(comments[start..start + size].to_vec());
        start += size;
    }
    out
}

/// Labels of one encoding axis.
#[derive(Debug, Clone, PartialEq)]
pub struct InterestAxis {
    pub level: Level,
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl InterestAxis {
    fn from_labels(level: Level, labels: Vec<String>) -> Self {
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        Self {
            level,
            labels,
            index,
        }
    }

    /// The subreddits the user commented on, in order of first comment.
    pub fn subreddits_of(series: &UserActivitySeries) -> Self {
        let mut seen = BTreeSet::new();
        let labels = series
            .comments()
            .filter(|e| seen.insert(e.subreddit.clone()))
            .map(|e| e.subreddit.to_string())
            .collect();
        Self::from_labels(Level::Subreddit, labels)
    }

    pub fn subreddits<S: AsRef<str>>(names: impl IntoIterator<Item = S>) -> Self {
        Self::from_labels(
            Level::Subreddit,
            names.into_iter().map(|s| s.as_ref().to_string()).collect(),
        )
    }

    /// The fifteen topic classes in their fixed order.
    pub fn topics() -> Self {
        Self::from_labels(
            Level::Topic,
            TopicClass::ALL
                .iter()
                .map(|t| t.name().to_string())
                .collect(),
        )
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    fn slot(
        &self,
        subreddit: &str,
        catalog: Option<&SubredditCatalog>,
    ) -> Result<usize, InterestError> {
        match self.level {
            Level::Subreddit => self
                .index
                .get(subreddit)
                .copied()
                .ok_or_else(|| InterestError::OffAxis(subreddit.to_string())),
            Level::Topic => {
                let topic = catalog
                    .and_then(|c| c.topic_of(subreddit))
                    .ok_or_else(|| InterestError::UncatalogedSubreddit(subreddit.to_string()))?;
                self.index
                    .get(topic.name())
                    .copied()
                    .ok_or_else(|| InterestError::OffAxis(topic.to_string()))
            }
        }
    }
}

/// Summed one-hot encoding of the comments in one bin.
#[derive(Debug, Clone, PartialEq)]
pub struct BinVector {
    pub counts: Vec<u32>,
    /// Timestamp of the first comment per axis element, if any.
    pub first_seen: Vec<Option<i64>>,
    pub bin_index: usize,
    pub span: (i64, i64),
}

impl BinVector {
    /// Vector with known counts and no timing information.
    pub fn from_counts(counts: Vec<u32>) -> Self {
        let first_seen = vec![None; counts.len()];
        Self {
            counts,
            first_seen,
            bin_index: 0,
            span: (0, 0),
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }
}

/// Encodes one comment group on `axis`. Topic axes need the catalog to map
/// subreddits to topics.
pub fn bin_vector(
    group: &[&Event],
    bin_index: usize,
    axis: &InterestAxis,
    catalog: Option<&SubredditCatalog>,
) -> Result<BinVector, InterestError> {
    let mut counts = vec![0u32; axis.len()];
    let mut first_seen = vec![None; axis.len()];
    for e in group {
        let slot = axis.slot(&e.subreddit, catalog)?;
        counts[slot] += 1;
        first_seen[slot].get_or_insert(e.created_utc);
    }
    let span = match (group.first(), group.last()) {
        (Some(a), Some(b)) => (a.created_utc, b.created_utc),
        _ => (0, 0),
    };
    Ok(BinVector {
        counts,
        first_seen,
        bin_index,
        span,
    })
}

/// Angle in degrees between two count vectors, `arccos` of their cosine
/// similarity.
pub fn vector_angle(a: &[u32], b: &[u32]) -> Result<f64, InterestError> {
    if a.len() != b.len() {
        return Err(InterestError::AxisMismatch(a.len(), b.len()));
    }
    let (mut dot, mut na, mut nb) = (0u128, 0u128, 0u128);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as u128, y as u128);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0 || nb == 0 {
        return Err(InterestError::ZeroVector);
    }
    // a single square root keeps parallel vectors at exactly 0°
    let c = dot as f64 / ((na * nb) as f64).sqrt();
    Ok(c.clamp(-1.0, 1.0).acos().to_degrees())
}

pub fn angle(a: &BinVector, b: &BinVector) -> Result<f64, InterestError> {
    vector_angle(&a.counts, &b.counts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleSequence {
    pub angles: Vec<f64>,
    pub level: Level,
}

pub fn angle_sequence(bins: &[BinVector], level: Level) -> Result<AngleSequence, InterestError> {
    if bins.len() < 2 {
        return Err(InterestError::TooFewBins(bins.len()));
    }
    let angles = bins
        .windows(2)
        .map(|w| angle(&w[0], &w[1]))
        .collect::<Result<_, _>>()?;
    Ok(AngleSequence { angles, level })
}

/// Axis slot with the largest count; ties go to the element seen first in
/// the bin, then to the lower slot.
pub fn dominant_element(bin: &BinVector) -> Option<usize> {
    (0..bin.counts.len())
        .filter(|&i| bin.counts[i] > 0)
        .min_by(|&i, &j| {
            bin.counts[j]
                .cmp(&bin.counts[i])
                .then_with(|| {
                    let ti = bin.first_seen[i].unwrap_or(i64::MAX);
                    let tj = bin.first_seen[j].unwrap_or(i64::MAX);
                    ti.cmp(&tj)
                })
                .then(i.cmp(&j))
        })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterestEvent {
    pub kind: EventKind,
    pub from: String,
    pub to: String,
    /// Index of the later bin of the transition.
    pub at_bin: usize,
    pub angle: f64,
}

/// Bins and angles of one user at one level.
#[derive(Debug, Clone)]
pub struct LevelTrack {
    pub axis: InterestAxis,
    pub bins: Vec<BinVector>,
    pub angles: AngleSequence,
}

fn dominant_label(axis: &InterestAxis, bin: &BinVector) -> String {
    dominant_element(bin)
        .map(|i| axis.label(i).to_string())
        .unwrap_or_default()
}

/// At most one event per transition; a topic change takes precedence over a
/// subreddit change.
pub fn detect_events(
    subreddit: &LevelTrack,
    topic: &LevelTrack,
    threshold_deg: f64,
) -> Result<Vec<InterestEvent>, InterestError> {
    let (ns, nt) = (subreddit.angles.angles.len(), topic.angles.angles.len());
    if ns != nt || subreddit.bins.len() != ns + 1 || topic.bins.len() != nt + 1 {
        return Err(InterestError::MisalignedSequences {
            subreddit: ns,
            topic: nt,
        });
    }
    let mut events = Vec::new();
    for i in 0..ns {
        let (track, kind) = if topic.angles.angles[i] > threshold_deg {
            (topic, EventKind::Shift)
        } else if subreddit.angles.angles[i] > threshold_deg {
            (subreddit, EventKind::Drift)
        } else {
            continue;
        };
        events.push(InterestEvent {
            kind,
            from: dominant_label(&track.axis, &track.bins[i]),
            to: dominant_label(&track.axis, &track.bins[i + 1]),
            at_bin: i + 1,
            angle: track.angles.angles[i],
        });
    }
    Ok(events)
}

#[derive(Debug, Clone)]
pub struct UserInterest {
    pub author: String,
    pub n_bins: usize,
    pub subreddit_angles: Vec<f64>,
    pub topic_angles: Vec<f64>,
    pub events: Vec<InterestEvent>,
}

/// Bins, encodes and scans one user's comments. Users with a single bin
/// have no transitions and yield no events.
pub fn analyze_user(
    series: &UserActivitySeries,
    catalog: &SubredditCatalog,
    cfg: &InterestConfig,
) -> Result<UserInterest, InterestError> {
    let groups = bin_comments(series, cfg.bin_size);
    let sub_axis = InterestAxis::subreddits_of(series);
    let topic_axis = InterestAxis::topics();
    let encode = |axis: &InterestAxis, cat: Option<&SubredditCatalog>| {
        groups
            .iter()
            .enumerate()
            .map(|(b, g)| bin_vector(g, b, axis, cat))
            .collect::<Result<Vec<_>, _>>()
    };
    let sub_bins = encode(&sub_axis, None)?;
    let topic_bins = encode(&topic_axis, Some(catalog))?;
    let mut out = UserInterest {
        author: series.author.clone(),
        n_bins: groups.len(),
        subreddit_angles: Vec::new(),
        topic_angles: Vec::new(),
        events: Vec::new(),
    };
    if groups.len() < 2 {
        return Ok(out);
    }
    let sub = LevelTrack {
        angles: angle_sequence(&sub_bins, Level::Subreddit)?,
        axis: sub_axis,
        bins: sub_bins,
    };
    let topic = LevelTrack {
        angles: angle_sequence(&topic_bins, Level::Topic)?,
        axis: topic_axis,
        bins: topic_bins,
    };
    out.events = detect_events(&sub, &topic, cfg.threshold_deg)?;
    out.subreddit_angles = sub.angles.angles;
    out.topic_angles = topic.angles.angles;
    Ok(out)
}

#[derive(Debug, Clone, Default)]
pub struct PopulationInterest {
    /// Analysed users in author order.
    pub users: Vec<UserInterest>,
    /// Users that could not be encoded, with the reason.
    pub skipped: Vec<(String, InterestError)>,
}

impl PopulationInterest {
    pub fn events(&self) -> impl Iterator<Item = (&str, &InterestEvent)> {
        self.users
            .iter()
            .flat_map(|u| u.events.iter().map(move |e| (u.author.as_str(), e)))
    }
}

/// Runs [`analyze_user`] over the selected users in parallel.
pub fn analyze_population(
    index: &UserIndex,
    catalog: &SubredditCatalog,
    cfg: &InterestConfig,
) -> Result<PopulationInterest, InterestError> {
    cfg.validate()?;
    let selected = select_active_users(index, cfg);
    let series: Vec<&UserActivitySeries> = selected.iter().filter_map(|a| index.get(a)).collect();
    let results: Vec<Result<UserInterest, (String, InterestError)>> = series
        .par_iter()
        .map(|s| analyze_user(s, catalog, cfg).map_err(|e| (s.author.clone(), e)))
        .collect();
    let mut out = PopulationInterest::default();
    for r in results {
        match r {
            Ok(u) => out.users.push(u),
            Err(e) => out.skipped.push(e),
        }
    }
    Ok(out)
}

/// Counts of `from → to` events at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    pub level: Level,
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl TransitionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn get(&self, from: &str, to: &str) -> u64 {
        let pos = |l: &str| self.labels.iter().position(|x| x == l);
        match (pos(from), pos(to)) {
            (Some(i), Some(j)) => self.counts[i][j],
            _ => 0,
        }
    }
}

/// Order-independent accumulator behind [`TransitionMatrix`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransitionCounts {
    pairs: BTreeMap<(String, String), u64>,
}

impl TransitionCounts {
    pub fn add(&mut self, from: &str, to: &str) {
        *self
            .pairs
            .entry((from.to_string(), to.to_string()))
            .or_default() += 1;
    }

    pub fn merge(&mut self, other: &TransitionCounts) {
        for (k, v) in &other.pairs {
            *self.pairs.entry(k.clone()).or_default() += v;
        }
    }

    /// Labels sorted by descending involvement (row plus column total),
    /// ties by name.
    pub fn into_matrix(self, level: Level) -> TransitionMatrix {
        let mut involvement: BTreeMap<&str, u64> = BTreeMap::new();
        for ((f, t), n) in &self.pairs {
            *involvement.entry(f).or_default() += n;
            *involvement.entry(t).or_default() += n;
        }
        let mut labels: Vec<(&str, u64)> = involvement.into_iter().collect();
        labels.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let labels: Vec<String> = labels.into_iter().map(|(l, _)| l.to_string()).collect();
        let pos: HashMap<&str, usize> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let mut counts = vec![vec![0u64; labels.len()]; labels.len()];
        for ((f, t), n) in &self.pairs {
            counts[pos[f.as_str()]][pos[t.as_str()]] += n;
        }
        TransitionMatrix {
            level,
            labels,
            counts,
        }
    }
}

/// Transition counts of the events belonging to `level` (drifts for
/// subreddits, shifts for topics); other events are ignored.
pub fn transition_matrix<'a>(
    events: impl IntoIterator<Item = &'a InterestEvent>,
    level: Level,
) -> TransitionMatrix {
    let mut acc = TransitionCounts::default();
    for e in events.into_iter().filter(|e| e.kind.level() == level) {
        acc.add(&e.from, &e.to);
    }
    acc.into_matrix(level)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventCountSummary {
    pub users: usize,
    /// Users by number of drifts.
    pub drifts: Histogram,
    /// Users by number of shifts.
    pub shifts: Histogram,
    pub drift_user_fraction: f64,
    pub shift_user_fraction: f64,
}

pub fn event_count_distributions(users: &[UserInterest]) -> EventCountSummary {
    let count =
        |u: &UserInterest, k: EventKind| u.events.iter().filter(|e| e.kind == k).count() as u64;
    let drifts: Vec<u64> = users.iter().map(|u| count(u, EventKind::Drift)).collect();
    let shifts: Vec<u64> = users.iter().map(|u| count(u, EventKind::Shift)).collect();
    let frac = |v: &[u64]| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().filter(|&&c| c > 0).count() as f64 / v.len() as f64
        }
    };
    EventCountSummary {
        users: users.len(),
        drift_user_fraction: frac(&drifts),
        shift_user_fraction: frac(&shifts),
        drifts: Histogram::integer(&drifts),
        shifts: Histogram::integer(&shifts),
    }
}
