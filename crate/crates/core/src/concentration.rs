//! How concentrated each user's commenting is across subreddits: the Gini
//! index of the per-subreddit comment vector, its sparse-data normalisation,
//! and a reshuffling null model that keeps the user's volume but spreads it
//! uniformly at random.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ingest::{SubredditCatalog, UserActivitySeries};
use crate::stats::{log_bin_index, log_edge};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConcentrationError {
    #[error("user has no activity on the subreddit axis")]
    ZeroActivity,
    #[error("normalisation undefined: g* = {g_star} >= 1")]
    DegenerateNormalization { g_star: f64 },
    #[error("empty user population")]
    EmptyPopulation,
    #[error("unknown gini mode `{0}` (expected `corrected` or `paper-literal`)")]
    UnknownMode(String),
}

/// Which sparse-data correction term to subtract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GiniMode {
    /// `g* = (N − I)/I` when `I < N`, else 0. Undefined for `I ≤ N/2`.
    PaperLiteral,
    /// `g*` is the Gini of the most even integer allocation of `I` comments
    /// over `N` slots, so the normalised index is 0 exactly at that floor.
    #[default]
    Corrected,
}

impl GiniMode {
    pub fn name(self) -> &'static str {
        match self {
            GiniMode::PaperLiteral => "paper-literal",
            GiniMode::Corrected => "corrected",
        }
    }
}

impl fmt::Display for GiniMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GiniMode {
    type Err = ConcentrationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "corrected" => Ok(GiniMode::Corrected),
            "paper-literal" | "literal" => Ok(GiniMode::PaperLiteral),
            other => Err(ConcentrationError::UnknownMode(other.to_string())),
        }
    }
}

/// Ordered subreddit axis (index `0..N`) for activity vectors.
#[derive(Debug, Clone, Default)]
pub struct SubredditAxis {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl SubredditAxis {
    pub fn new<S: AsRef<str>>(names: impl IntoIterator<Item = S>) -> Self {
        let mut axis = SubredditAxis::default();
        for n in names {
            let n = n.as_ref();
            if !axis.index.contains_key(n) {
                axis.index.insert(n.to_string(), axis.names.len() as u32);
                axis.names.push(n.to_string());
            }
        }
        axis
    }

    /// The catalog's included subreddits, in catalog order.
    pub fn from_catalog(catalog: &SubredditCatalog) -> Self {
        Self::new(catalog.included_names())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).map(|&i| i as usize)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Comment counts of one user over an `N`-slot subreddit axis, stored
/// sparsely (only nonzero slots, ascending by slot).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityVector {
    dimension: usize,
    entries: Vec<(u32, u64)>,
    total: u64,
}

impl ActivityVector {
    pub fn zeros(dimension: usize) -> Self {
        assert!(dimension >= 1, "dimension must be at least 1");
        Self {
            dimension,
            entries: Vec::new(),
            total: 0,
        }
    }

    pub fn from_dense(counts: &[u64]) -> Self {
        Self::from_entries(
            counts.len(),
            counts.iter().enumerate().map(|(i, &c)| (i, c)),
        )
    }

    /// Builds from `(slot, count)` pairs; repeated slots are summed.
    pub fn from_entries(dimension: usize, entries: impl IntoIterator<Item = (usize, u64)>) -> Self {
        let mut v = Self::zeros(dimension);
        let mut map: BTreeMap<u32, u64> = BTreeMap::new();
        for (i, c) in entries {
            assert!(i < dimension, "slot {i} outside dimension {dimension}");
            if c > 0 {
                *map.entry(i as u32).or_default() += c;
            }
        }
        v.total = map.values().sum();
        v.entries = map.into_iter().collect();
        v
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// `I`, the sum of all counts.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of slots with at least one comment.
    pub fn support(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(u32, u64)] {
        &self.entries
    }

    pub fn dense(&self) -> Vec<u64> {
        let mut out = vec![0; self.dimension];
        for &(i, c) in &self.entries {
            out[i as usize] = c;
        }
        out
    }

    pub fn scaled(&self, factor: u64) -> Self {
        Self::from_entries(
            self.dimension,
            self.entries.iter().map(|&(i, c)| (i as usize, c * factor)),
        )
    }
}

/// Per-subreddit comment counts of `series` over `axis`; subreddits off the
/// axis are ignored.
pub fn activity_vector(series: &UserActivitySeries, axis: &SubredditAxis) -> ActivityVector {
    ActivityVector::from_entries(
        axis.len().max(1),
        series
            .comments()
            .filter_map(|e| axis.position(&e.subreddit).map(|i| (i, 1))),
    )
}

/// Mean-absolute-difference Gini index, `Σ_i Σ_j |v_i − v_j| / (2 N I)`.
///
/// Uses the rank identity `Σ_i Σ_j |x_i − x_j| = 2 Σ_r (2r − N − 1) x_(r)`
/// over ascending order statistics; zero slots take the lowest ranks, so only
/// the nonzero entries need sorting.
pub fn gini(v: &ActivityVector) -> Result<f64, ConcentrationError> {
    if v.total == 0 {
        return Err(ConcentrationError::ZeroActivity);
    }
    let n = v.dimension as i128;
    let mut nonzero: Vec<u64> = v.entries.iter().map(|&(_, c)| c).collect();
    nonzero.sort_unstable();
    let first_rank = n - nonzero.len() as i128 + 1;
    let pair_sum: i128 = nonzero
        .iter()
        .enumerate()
        .map(|(k, &x)| 2 * (2 * (first_rank + k as i128) - n - 1) * x as i128)
        .sum();
    Ok(pair_sum as f64 / (2.0 * v.dimension as f64 * v.total as f64))
}

/// Gini index of the most even integer allocation of `total` comments over
/// `dimension` slots: `r(N − r) / (N I)` with `r = I mod N`.
pub fn minimum_gini(total: u64, dimension: usize) -> f64 {
    let n = dimension as u64;
    let r = total % n;
    (r as f64 * (n - r) as f64) / (n as f64 * total as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GiniResult {
    pub raw: f64,
    pub normalized: f64,
    pub g_star: f64,
    pub mode: GiniMode,
}

/// `(g − g*) / (1 − g*)` with `g*` chosen by `mode`.
pub fn normalized_gini(
    v: &ActivityVector,
    mode: GiniMode,
) -> Result<GiniResult, ConcentrationError> {
    let raw = gini(v)?;
    let (n, i) = (v.dimension as f64, v.total as f64);
    let g_star = match mode {
        GiniMode::PaperLiteral if i < n => (n - i) / i,
        GiniMode::PaperLiteral => 0.0,
        GiniMode::Corrected => minimum_gini(v.total, v.dimension),
    };
    if g_star >= 1.0 {
        return Err(ConcentrationError::DegenerateNormalization { g_star });
    }
    let normalized = if mode == GiniMode::Corrected && raw <= g_star {
        // exact floor; avoids -0.0 and round-off below zero
        0.0
    } else {
        (raw - g_star) / (1.0 - g_star)
    };
    Ok(GiniResult {
        raw,
        normalized,
        g_star,
        mode,
    })
}

/// Reshuffled activity: `total` comments, each placed on one of `dimension`
/// slots uniformly and independently.
pub fn null_model<R: Rng + ?Sized>(total: u64, dimension: usize, rng: &mut R) -> ActivityVector {
    assert!(
        total >= 1 && dimension >= 1,
        "null model needs I >= 1 and N >= 1"
    );
    let mut slots: Vec<u32> = (0..total)
        .map(|_| rng.random_range(0..dimension as u32))
        .collect();
    slots.sort_unstable();
    let mut entries: Vec<(u32, u64)> = Vec::new();
    for s in slots {
        match entries.last_mut() {
            Some((last, c)) if *last == s => *c += 1,
            _ => entries.push((s, 1)),
        }
    }
    ActivityVector {
        dimension,
        entries,
        total,
    }
}

/// Seed for one user's null-model draws, derived from the run seed and the
/// author name so that results do not depend on processing order.
pub fn user_seed(master_seed: u64, author: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update(author.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

#[derive(Debug, Clone)]
pub struct NullModelConfig {
    pub seed: u64,
    pub mode: GiniMode,
    /// Null draws averaged per user.
    pub repetitions: usize,
    pub bins_per_decade: usize,
}

impl Default for NullModelConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            mode: GiniMode::Corrected,
            repetitions: 1,
            bins_per_decade: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivityBin {
    pub lo: f64,
    pub hi: f64,
    pub users: usize,
    pub mean_subreddits: f64,
    pub median_subreddits: f64,
    /// Users whose normalised Gini is defined under the chosen mode.
    pub gini_users: usize,
    pub mean_gini: f64,
    pub null_mean_gini: f64,
}

/// Occupied logarithmic activity bins, ascending.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActivityBinCurve {
    pub bins: Vec<ActivityBin>,
}

impl ActivityBinCurve {
    pub fn bin_edges(&self) -> Vec<(f64, f64)> {
        self.bins.iter().map(|b| (b.lo, b.hi)).collect()
    }
}

struct UserPoint {
    bin: i64,
    support: usize,
    gini: Option<(f64, f64)>,
}

fn user_point(author: &str, v: &ActivityVector, cfg: &NullModelConfig) -> UserPoint {
    let bin = log_bin_index(v.total as f64, cfg.bins_per_decade as f64);
    let gini = normalized_gini(v, cfg.mode).ok().map(|real| {
        let mut rng = ChaCha8Rng::seed_from_u64(user_seed(cfg.seed, author));
        let reps = cfg.repetitions.max(1);
        let null_sum: f64 = (0..reps)
            .map(|_| {
                let shuffled = null_model(v.total, v.dimension, &mut rng);
                // same I and N as the real vector, so the same mode is defined
                normalized_gini(&shuffled, cfg.mode)
                    .map(|g| g.normalized)
                    .unwrap_or(f64::NAN)
            })
            .sum();
        (real.normalized, null_sum / reps as f64)
    });
    UserPoint {
        bin,
        support: v.support(),
        gini,
    }
}

fn median(sorted: &[usize]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) as f64
    }
}

/// Groups users into logarithmic bins of total activity and reports, per
/// bin, the mean and median number of subreddits used, the mean normalised
/// Gini, and the mean normalised Gini of the users' null-model draws.
///
/// Users with zero activity are ignored. Per-user work runs in parallel;
/// aggregation is sequential in input order, so output is schedule-free.
pub fn gini_vs_activity<S: AsRef<str> + Sync>(
    users: &[(S, ActivityVector)],
    cfg: &NullModelConfig,
) -> Result<ActivityBinCurve, ConcentrationError> {
    if users.is_empty() {
        return Err(ConcentrationError::EmptyPopulation);
    }
    let points: Vec<UserPoint> = users
        .par_iter()
        .filter(|(_, v)| v.total > 0)
        .map(|(a, v)| user_point(a.as_ref(), v, cfg))
        .collect();
    if points.is_empty() {
        return Err(ConcentrationError::EmptyPopulation);
    }

    let mut grouped: BTreeMap<i64, Vec<&UserPoint>> = BTreeMap::new();
    for p in &points {
        grouped.entry(p.bin).or_default().push(p);
    }
    let pd = cfg.bins_per_decade as f64;
    let bins = grouped
        .into_iter()
        .map(|(k, pts)| {
            let mut supports: Vec<usize> = pts.iter().map(|p| p.support).collect();
            supports.sort_unstable();
            let ginis: Vec<(f64, f64)> = pts.iter().filter_map(|p| p.gini).collect();
            let gn = ginis.len() as f64;
            ActivityBin {
                lo: log_edge(k, pd),
                hi: log_edge(k + 1, pd),
                users: pts.len(),
                mean_subreddits: supports.iter().sum::<usize>() as f64 / pts.len() as f64,
                median_subreddits: median(&supports),
                gini_users: ginis.len(),
                mean_gini: ginis.iter().map(|g| g.0).sum::<f64>() / gn,
                null_mean_gini: ginis.iter().map(|g| g.1).sum::<f64>() / gn,
            }
        })
        .collect();
    Ok(ActivityBinCurve { bins })
}
