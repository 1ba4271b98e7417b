use std::collections::BTreeMap;

use crate::ingest::{UserActivitySeries, UserIndex};

use super::StatsError;

pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// Span between the first and last comment in scope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Lifetime {
    pub seconds: u64,
}

impl Lifetime {
    pub fn days(&self) -> f64 {
        self.seconds as f64 / SECONDS_PER_DAY
    }

    pub fn hours(&self) -> f64 {
        self.seconds as f64 / 3600.0
    }
}

fn span(mut ts: impl Iterator<Item = i64>) -> Result<Lifetime, StatsError> {
    let first = ts.next().ok_or(StatsError::EmptyInput)?;
    let (lo, hi) = ts.fold((first, first), |(lo, hi), t| (lo.min(t), hi.max(t)));
    Ok(Lifetime {
        seconds: (hi - lo) as u64,
    })
}

/// Lifetime of a post from its comment timestamps.
pub fn post_lifetime(timestamps: &[i64]) -> Result<Lifetime, StatsError> {
    span(timestamps.iter().copied())
}

/// Lifetime of a user on `subreddit`, or overall when `None`. Posts do not
/// count.
pub fn user_lifetime(
    series: &UserActivitySeries,
    subreddit: Option<&str>,
) -> Result<Lifetime, StatsError> {
    span(
        series
            .comments()
            .filter(|e| subreddit.is_none_or(|s| &*e.subreddit == s))
            .map(|e| e.created_utc),
    )
}

/// Mean user lifetime per subreddit, in days, with the number of users
/// averaged. Each user active on a subreddit contributes one lifetime.
pub fn subreddit_mean_user_lifetimes(users: &UserIndex) -> Vec<(String, f64, usize)> {
    let mut acc: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for series in users.iter() {
        let mut bounds: BTreeMap<&str, (i64, i64)> = BTreeMap::new();
        for e in series.comments() {
            let b = bounds
                .entry(&e.subreddit)
                .or_insert((e.created_utc, e.created_utc));
            b.0 = b.0.min(e.created_utc);
            b.1 = b.1.max(e.created_utc);
        }
        for (sub, (lo, hi)) in bounds {
            let a = acc.entry(sub).or_insert((0.0, 0));
            a.0 += (hi - lo) as f64 / SECONDS_PER_DAY;
            a.1 += 1;
        }
    }
    acc.into_iter()
        .map(|(s, (sum, n))| (s.to_string(), sum / n as f64, n))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Event, RecordKind};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn series(events: &[(i64, &str, RecordKind)]) -> UserActivitySeries {
        UserActivitySeries::new(
            "u",
            events
                .iter()
                .map(|&(t, s, kind)| Event {
                    created_utc: t,
                    subreddit: Arc::from(s),
                    body_length: 1,
                    kind,
                })
                .collect(),
        )
    }

    #[test]
    fn post_lifetime_examples() {
        assert_eq!(post_lifetime(&[100, 5000, 86500]).unwrap().seconds, 86_400);
        assert_eq!(post_lifetime(&[42]).unwrap().seconds, 0);
        assert!(matches!(post_lifetime(&[]), Err(StatsError::EmptyInput)));
    }

    #[test]
    fn user_lifetime_examples() {
        use RecordKind::*;
        let s = series(&[
            (100, "S", Comment),
            (500, "T", Comment),
            (1000, "S", Comment),
            (5000, "S", Post),
        ]);
        assert_eq!(user_lifetime(&s, Some("S")).unwrap().seconds, 900);
        assert_eq!(user_lifetime(&s, None).unwrap().seconds, 900);
        assert_eq!(user_lifetime(&s, Some("T")).unwrap().seconds, 0);
        assert!(matches!(
            user_lifetime(&s, Some("U")),
            Err(StatsError::EmptyInput)
        ));
    }

    #[test]
    fn per_subreddit_means() {
        use RecordKind::*;
        let idx: UserIndex = [
            UserActivitySeries::new(
                "a",
                series(&[(0, "S", Comment), (86_400, "S", Comment)]).events,
            ),
            UserActivitySeries::new(
                "b",
                series(&[(0, "S", Comment), (3 * 86_400, "S", Comment)]).events,
            ),
        ]
        .into_iter()
        .collect();
        let out = subreddit_mean_user_lifetimes(&idx);
        assert_eq!(out, vec![("S".to_string(), 2.0, 2)]);
    }

    proptest! {
        #[test]
        fn translation_invariant(ts in prop::collection::vec(1i64..1_000_000, 1..50), shift in -1000i64..1_000_000) {
            let shifted: Vec<i64> = ts.iter().map(|t| t + shift).collect();
            prop_assert_eq!(post_lifetime(&ts).unwrap(), post_lifetime(&shifted).unwrap());
            let a: Vec<_> = ts.iter().map(|&t| (t, "S", RecordKind::Comment)).collect();
            let b: Vec<_> = shifted.iter().map(|&t| (t, "S", RecordKind::Comment)).collect();
            prop_assert_eq!(user_lifetime(&series(&a), None).unwrap(), user_lifetime(&series(&b), None).unwrap());
        }
    }
}
