//! Heuristics for automated accounts: comment-length entropy, comment rate
//! and username patterns.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::ingest::{SubredditCatalog, UserActivitySeries, UserIndex};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BotError {
    #[error("no comment lengths to measure")]
    EmptyInput,
    #[error("no users with enough comments for an entropy estimate")]
    EmptyPopulation,
    #[error("percentile {0} outside (0, 100)")]
    InvalidPercentile(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyReport {
    pub author: String,
    pub entropy_bits: f64,
    pub n_comments: usize,
    pub distinct_lengths: usize,
}

/// Shannon entropy in bits of the empirical distribution of exact lengths.
/// Returns `(entropy, distinct lengths)`.
pub fn length_entropy(lengths: &[u32]) -> Result<(f64, usize), BotError> {
    if lengths.is_empty() {
        return Err(BotError::EmptyInput);
    }
    let mut freq: HashMap<u32, u64> = HashMap::new();
    for &l in lengths {
        *freq.entry(l).or_default() += 1;
    }
    let n = lengths.len() as f64;
    let mut counts: Vec<u64> = freq.into_values().collect();
    // fixed summation order keeps the result independent of hashing
    counts.sort_unstable();
    let h = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum::<f64>();
    Ok((h.max(0.0), counts.len()))
}

pub fn name_pattern(author: &str) -> bool {
    let lower = author.to_lowercase();
    lower.contains("bot") || lower.contains("auto")
}

#[derive(Debug, Clone)]
pub struct BotConfig {
    /// Entropy percentile, in percent, below which users are flagged.
    pub percentile: f64,
    pub min_comments_for_entropy: usize,
    /// Reference rate: `rate_comments` comments in `rate_days` days.
    pub rate_comments: u64,
    pub rate_days: f64,
}

impl Default for BotConfig {
    fn default() -> Self {
        Self {
            percentile: 0.5,
            min_comments_for_entropy: 10,
            rate_comments: 10_000,
            rate_days: 210.0,
        }
    }
}

/// Whether `n_comments` over `window_days` exceeds the reference rate.
pub fn high_activity_rate(n_comments: usize, window_days: f64, cfg: &BotConfig) -> bool {
    // cross-multiplied so the reference point itself stays unflagged
    n_comments as f64 * cfg.rate_days > cfg.rate_comments as f64 * window_days
}

pub fn high_activity(series: &UserActivitySeries, window_days: f64, cfg: &BotConfig) -> bool {
    high_activity_rate(series.comment_count(), window_days, cfg)
}

/// Entropy of the user's comment lengths outside exotic-rule subreddits, or
/// `None` below the minimum comment count.
pub fn entropy_report(
    series: &UserActivitySeries,
    catalog: &SubredditCatalog,
    min_comments: usize,
) -> Option<EntropyReport> {
    let lengths: Vec<u32> = series
        .comments()
        .filter(|e| !catalog.is_exotic(&e.subreddit))
        .map(|e| e.body_length)
        .collect();
    if lengths.len() < min_comments.max(1) {
        return None;
    }
    let (entropy_bits, distinct_lengths) = length_entropy(&lengths).ok()?;
    Some(EntropyReport {
        author: series.author.clone(),
        entropy_bits,
        n_comments: lengths.len(),
        distinct_lengths,
    })
}

pub fn entropy_reports(
    index: &UserIndex,
    catalog: &SubredditCatalog,
    min_comments: usize,
) -> Vec<EntropyReport> {
    let series = index.series();
    series
        .par_iter()
        .filter_map(|s| entropy_report(s, catalog, min_comments))
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Reasons {
    pub low_entropy: bool,
    pub high_activity: bool,
    pub name_pattern: bool,
}

impl Reasons {
    pub fn any(&self) -> bool {
        self.low_entropy || self.high_activity || self.name_pattern
    }
}

impl fmt::Display for Reasons {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = [
            (self.low_entropy, "low_entropy"),
            (self.high_activity, "high_activity"),
            (self.name_pattern, "name_pattern"),
        ];
        let set: Vec<&str> = names
            .iter()
            .filter(|(on, _)| *on)
            .map(|(_, n)| *n)
            .collect();
        f.write_str(&set.join(";"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BotFlag {
    pub author: String,
    pub entropy_bits: Option<f64>,
    pub n_comments: usize,
    pub reasons: Reasons,
}

impl BotFlag {
    pub fn flagged(&self) -> bool {
        self.reasons.any()
    }
}

#[derive(Debug, Clone)]
pub struct BotReport {
    /// One entry per indexed user, in author order.
    pub flags: Vec<BotFlag>,
    pub entropy_threshold: f64,
}

impl BotReport {
    pub fn flagged(&self) -> impl Iterator<Item = &BotFlag> {
        self.flags.iter().filter(|f| f.flagged())
    }

    pub fn is_flagged(&self, author: &str) -> bool {
        self.flags
            .binary_search_by(|f| f.author.as_str().cmp(author))
            .is_ok_and(|i| self.flags[i].flagged())
    }
}

/// Linear-interpolation percentile (`p` in percent) of unsorted values.
pub fn percentile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = p / 100.0 * (v.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    Some(v[lo] + (v[hi] - v[lo]) * (rank - lo as f64))
}

/// Combines the three heuristics for every user of `index`. Low entropy
/// means strictly below the population's `cfg.percentile`-th entropy
/// percentile.
pub fn flag_automated(
    reports: &[EntropyReport],
    index: &UserIndex,
    window_days: f64,
    cfg: &BotConfig,
) -> Result<BotReport, BotError> {
    if !(cfg.percentile > 0.0 && cfg.percentile < 100.0) {
        return Err(BotError::InvalidPercentile(cfg.percentile));
    }
    let entropies: Vec<f64> = reports.iter().map(|r| r.entropy_bits).collect();
    let threshold = percentile(&entropies, cfg.percentile).ok_or(BotError::EmptyPopulation)?;
    Ok(apply_flags(reports, index, window_days, cfg, threshold))
}

/// Flags every user of `index` against a given entropy threshold. With
/// `f64::NEG_INFINITY` no user is flagged for low entropy.
pub fn apply_flags(
    reports: &[EntropyReport],
    index: &UserIndex,
    window_days: f64,
    cfg: &BotConfig,
    threshold: f64,
) -> BotReport {
    let by_author: HashMap<&str, &EntropyReport> =
        reports.iter().map(|r| (r.author.as_str(), r)).collect();
    let flags = index
        .iter()
        .map(|s| {
            let report = by_author.get(s.author.as_str());
            let entropy_bits = report.map(|r| r.entropy_bits);
            BotFlag {
                author: s.author.clone(),
                entropy_bits,
                n_comments: s.comment_count(),
                reasons: Reasons {
                    low_entropy: entropy_bits.is_some_and(|h| h < threshold),
                    high_activity: high_activity(s, window_days, cfg),
                    name_pattern: name_pattern(&s.author),
                },
            }
        })
        .collect();
    BotReport {
        flags,
        entropy_threshold: threshold,
    }
}

/// Users per entropy bin with the share matching the name pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyProfileRow {
    pub lo: f64,
    pub hi: f64,
    pub users: usize,
    pub name_pattern_fraction: f64,
    pub mean_comments: f64,
}

pub fn entropy_profile(reports: &[EntropyReport], bin_width: f64) -> Vec<EntropyProfileRow> {
    assert!(bin_width > 0.0, "bin width must be positive");
    let Some(max) = reports
        .iter()
        .map(|r| r.entropy_bits)
        .max_by(f64::total_cmp)
    else {
        return Vec::new();
    };
    let nbins = (max / bin_width).floor() as usize + 1;
    let mut users = vec![0usize; nbins];
    let mut named = vec![0usize; nbins];
    let mut comments = vec![0usize; nbins];
    for r in reports {
        let b = ((r.entropy_bits / bin_width).floor() as usize).min(nbins - 1);
        users[b] += 1;
        named[b] += name_pattern(&r.author) as usize;
        comments[b] += r.n_comments;
    }
    (0..nbins)
        .map(|b| {
            let n = users[b];
            let ratio = |x: usize| if n > 0 { x as f64 / n as f64 } else { 0.0 };
            EntropyProfileRow {
                lo: b as f64 * bin_width,
                hi: (b + 1) as f64 * bin_width,
                users: n,
                name_pattern_fraction: ratio(named[b]),
                mean_comments: ratio(comments[b]),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{CatalogEntry, Event, RecordKind, TopicClass};
    use proptest::prelude::*;
    use std::sync::Arc;

    #[test]
    fn entropy_examples() {
        assert_eq!(length_entropy(&[50, 50, 50, 50]).unwrap(), (0.0, 1));
        assert_eq!(length_entropy(&[1, 2, 3, 4, 5, 6, 7, 8]).unwrap(), (3.0, 8));
        let (h, _) = length_entropy(&[10, 10, 20, 20, 20, 20]).unwrap();
        // oracle: Shannon formula evaluated by hand
        let expected =
            -(1.0 / 3.0f64) * (1.0 / 3.0f64).log2() - (2.0 / 3.0f64) * (2.0 / 3.0f64).log2();
        assert!((h - expected).abs() < 1e-15);
        assert!((h - 0.9183).abs() < 1e-4);
        assert_eq!(length_entropy(&[]), Err(BotError::EmptyInput));
    }

    #[test]
    fn uniform_over_powers_of_two_is_exact() {
        for k in 0..12u32 {
            let lengths: Vec<u32> = (0..1u32 << k).flat_map(|l| [l, l, l]).collect();
            assert_eq!(length_entropy(&lengths).unwrap().0, k as f64);
        }
    }

    #[test]
    fn names() {
        assert!(name_pattern("AutoModerator"));
        assert!(!name_pattern("totallyhuman"));
        assert!(name_pattern("RoBOT_9000"));
    }

    #[test]
    fn rate_threshold() {
        let cfg = BotConfig::default();
        assert!(high_activity_rate(10_001, 210.0, &cfg));
        assert!(!high_activity_rate(10_000, 210.0, &cfg));
        assert!(high_activity_rate(5_000, 100.0, &cfg));
    }

    #[test]
    fn percentile_interpolates() {
        assert_eq!(percentile(&[3.0, 1.0, 2.0], 50.0), Some(2.0));
        assert_eq!(percentile(&[0.0, 10.0], 25.0), Some(2.5));
        assert_eq!(percentile(&[], 5.0), None);
    }

    fn user(author: &str, lengths: &[u32], sub: &str) -> UserActivitySeries {
        let sub: Arc<str> = Arc::from(sub);
        UserActivitySeries::new(
            author,
            lengths
                .iter()
                .enumerate()
                .map(|(i, &l)| Event {
                    created_utc: 1 + i as i64,
                    subreddit: sub.clone(),
                    body_length: l,
                    kind: RecordKind::Comment,
                })
                .collect(),
        )
    }

    fn catalog() -> SubredditCatalog {
        let mut c = SubredditCatalog::new();
        c.insert(
            "news",
            CatalogEntry {
                topic_class: TopicClass::NewsPoliticsSociety,
                included: true,
                exotic_rules: false,
            },
        )
        .unwrap();
        c.insert(
            "letters",
            CatalogEntry {
                topic_class: TopicClass::Others,
                included: true,
                exotic_rules: true,
            },
        )
        .unwrap();
        c
    }

    fn population(n: usize) -> Vec<UserActivitySeries> {
        (0..n)
            .map(|u| {
                let lengths: Vec<u32> = (0..40).map(|i| (u + i % (5 + u % 50)) as u32).collect();
                user(&format!("user{u:05}"), &lengths, "news")
            })
            .collect()
    }

    #[test]
    fn exotic_comments_are_ignored() {
        let s = user("x", &[1; 30], "letters");
        assert!(entropy_report(&s, &catalog(), 10).is_none());
        let s = user("x", &[1; 30], "news");
        assert_eq!(
            entropy_report(&s, &catalog(), 10).unwrap().entropy_bits,
            0.0
        );
        assert!(entropy_report(&user("y", &[1; 9], "news"), &catalog(), 10).is_none());
    }

    #[test]
    fn planted_bot_and_named_user() {
        let mut users = population(1000);
        users.push(user("spammer", &vec![100; 20_000], "news"));
        let varied: Vec<u32> = (0..200).collect();
        users.push(user("newsbot", &varied, "news"));
        let index: UserIndex = users.into_iter().collect();
        let reports = entropy_reports(&index, &catalog(), 10);
        let report = flag_automated(&reports, &index, 210.0, &BotConfig::default()).unwrap();
        let find = |a: &str| report.flags.iter().find(|f| f.author == a).unwrap().clone();
        let bot = find("spammer");
        assert!(bot.reasons.low_entropy && bot.reasons.high_activity);
        let named = find("newsbot");
        assert_eq!(
            named.reasons,
            Reasons {
                name_pattern: true,
                ..Default::default()
            }
        );
        assert!(
            report
                .flags
                .iter()
                .filter(|f| f.reasons.low_entropy)
                .count()
                <= 6
        );
        assert_eq!(bot.reasons.to_string(), "low_entropy;high_activity");
        assert!(report.is_flagged("spammer") && !report.is_flagged("user00003"));
    }

    #[test]
    fn empty_population() {
        let index = UserIndex::default();
        assert_eq!(
            flag_automated(&[], &index, 1.0, &BotConfig::default()).unwrap_err(),
            BotError::EmptyPopulation
        );
    }

    #[test]
    fn percentile_sweep_is_monotone() {
        let index: UserIndex = population(2000).into_iter().collect();
        let reports = entropy_reports(&index, &catalog(), 10);
        let mut prev = 0usize;
        for p in [0.1, 0.5, 1.0, 5.0, 10.0, 25.0, 50.0, 90.0] {
            let cfg = BotConfig {
                percentile: p,
                ..Default::default()
            };
            let r = flag_automated(&reports, &index, 210.0, &cfg).unwrap();
            let n = r.flags.iter().filter(|f| f.reasons.low_entropy).count();
            assert!(n >= prev);
            prev = n;
        }
    }

    #[test]
    fn profile_counts_every_report() {
        let index: UserIndex = population(300).into_iter().collect();
        let reports = entropy_reports(&index, &catalog(), 10);
        let rows = entropy_profile(&reports, 0.25);
        assert_eq!(rows.iter().map(|r| r.users).sum::<usize>(), reports.len());
    }

    proptest! {
        #[test]
        fn entropy_bounds_and_invariance(mut lengths in prop::collection::vec(0u32..40, 1..200), shift in 1u32..1000) {
            let (h, distinct) = length_entropy(&lengths).unwrap();
            prop_assert!(h >= 0.0 && h <= (distinct as f64).log2() + 1e-12);
            let relabeled: Vec<u32> = lengths.iter().map(|l| l * 3 + shift).collect();
            prop_assert!((length_entropy(&relabeled).unwrap().0 - h).abs() < 1e-12);
            lengths.reverse();
            prop_assert!((length_entropy(&lengths).unwrap().0 - h).abs() < 1e-12);
        }
    }
}
