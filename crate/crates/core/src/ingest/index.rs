use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use super::catalog::SubredditCatalog;
use super::record::{Record, RecordKind, RecordView};
use super::IngestError;

/// Closed time interval `[start, end]` in epoch seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeWindow {
    pub start: i64,
    pub end: i64,
}

impl TimeWindow {
    pub fn new(start: i64, end: i64) -> Result<Self, IngestError> {
        if start >= end {
            return Err(IngestError::InvalidWindow { start, end });
        }
        Ok(Self { start, end })
    }

    pub fn contains(&self, t: i64) -> bool {
        self.start <= t && t <= self.end
    }

    pub fn days(&self) -> f64 {
        (self.end - self.start) as f64 / 86_400.0
    }
}

/// Keeps records whose subreddit is cataloged as included and whose
/// timestamp falls inside `window`. Order is preserved.
pub fn filter_stream<'a, I>(
    records: I,
    catalog: &'a SubredditCatalog,
    window: TimeWindow,
) -> impl Iterator<Item = Record> + 'a
where
    I: IntoIterator<Item = Record>,
    I::IntoIter: 'a,
{
    records
        .into_iter()
        .filter(move |r| accepts(catalog, Some(window), &r.view()))
}

pub(crate) fn accepts(
    catalog: &SubredditCatalog,
    window: Option<TimeWindow>,
    r: &RecordView<'_>,
) -> bool {
    catalog.is_included(r.subreddit) && window.is_none_or(|w| w.contains(r.created_utc))
}

/// Author names that stand for removed accounts rather than a person.
pub fn is_deleted_author(author: &str) -> bool {
    matches!(author, "[deleted]" | "[removed]")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub created_utc: i64,
    pub subreddit: Arc<str>,
    pub body_length: u32,
    pub kind: RecordKind,
}

/// One author's events in ascending time order; ties keep input order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserActivitySeries {
    pub author: String,
    pub events: Vec<Event>,
}

impl UserActivitySeries {
    pub fn new(author: impl Into<String>, mut events: Vec<Event>) -> Self {
        events.sort_by_key(|e| e.created_utc);
        Self {
            author: author.into(),
            events,
        }
    }

    pub fn comments(&self) -> impl Iterator<Item = &Event> + Clone {
        self.events.iter().filter(|e| e.kind == RecordKind::Comment)
    }

    pub fn posts(&self) -> impl Iterator<Item = &Event> + Clone {
        self.events.iter().filter(|e| e.kind == RecordKind::Post)
    }

    pub fn comment_count(&self) -> usize {
        self.comments().count()
    }

    pub fn filtered(&self, mut keep: impl FnMut(&Event) -> bool) -> Self {
        Self {
            author: self.author.clone(),
            events: self.events.iter().filter(|e| keep(e)).cloned().collect(),
        }
    }

    /// Comment counts per subreddit.
    pub fn comments_per_subreddit(&self) -> BTreeMap<&str, usize> {
        let mut counts = BTreeMap::new();
        for e in self.comments() {
            *counts.entry(&*e.subreddit).or_insert(0) += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UserIndex {
    users: BTreeMap<String, UserActivitySeries>,
}

impl UserIndex {
    pub fn get(&self, author: &str) -> Option<&UserActivitySeries> {
        self.users.get(author)
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    /// Series in ascending author order.
    pub fn iter(&self) -> impl Iterator<Item = &UserActivitySeries> {
        self.users.values()
    }

    pub fn series(&self) -> Vec<&UserActivitySeries> {
        self.users.values().collect()
    }

    pub fn total_events(&self) -> usize {
        self.users.values().map(|s| s.events.len()).sum()
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&UserActivitySeries) -> bool) {
        self.users.retain(|_, s| keep(s));
    }
}

impl FromIterator<UserActivitySeries> for UserIndex {
    fn from_iter<T: IntoIterator<Item = UserActivitySeries>>(iter: T) -> Self {
        let mut builder = IndexBuilder::default();
        for s in iter {
            let events = builder.users.entry(s.author).or_default();
            events.extend(s.events);
        }
        builder.finish().0
    }
}

/// Comment timestamps per post id, each list sorted ascending.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PostIndex {
    posts: BTreeMap<String, Vec<i64>>,
}

impl PostIndex {
    pub fn get(&self, post_id: &str) -> Option<&[i64]> {
        self.posts.get(post_id).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[i64])> {
        self.posts.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}

/// Incremental builder for the user and post indexes.
///
/// Partial builders (one per shard) merge with [`IndexBuilder::merge`];
/// merging in a fixed shard order and stable-sorting on `finish` makes the
/// final indexes independent of how shards were scheduled.
#[derive(Debug, Default)]
pub struct IndexBuilder {
    interner: HashMap<Arc<str>, ()>,
    users: HashMap<String, Vec<Event>>,
    posts: HashMap<String, Vec<i64>>,
    accepted: u64,
}

impl IndexBuilder {
    fn intern(&mut self, s: &str) -> Arc<str> {
        if let Some((k, _)) = self.interner.get_key_value(s) {
            return k.clone();
        }
        let k: Arc<str> = Arc::from(s);
        self.interner.insert(k.clone(), ());
        k
    }

    pub fn push(&mut self, r: &RecordView<'_>) {
        let subreddit = self.intern(r.subreddit);
        let event = Event {
            created_utc: r.created_utc,
            subreddit,
            body_length: r.body_length,
            kind: r.kind,
        };
        match self.users.get_mut(r.author) {
            Some(v) => v.push(event),
            None => {
                self.users.insert(r.author.to_string(), vec![event]);
            }
        }
        if r.kind == RecordKind::Comment {
            match self.posts.get_mut(r.parent_post_id) {
                Some(v) => v.push(r.created_utc),
                None => {
                    self.posts
                        .insert(r.parent_post_id.to_string(), vec![r.created_utc]);
                }
            }
        }
        self.accepted += 1;
    }

    pub fn push_record(&mut self, r: &Record) {
        self.push(&r.view());
    }

    pub fn accepted(&self) -> u64 {
        self.accepted
    }

    /// Appends `other`'s events after this builder's events.
    pub fn merge(&mut self, other: IndexBuilder) {
        for (author, events) in other.users {
            self.users.entry(author).or_default().extend(events);
        }
        for (post, ts) in other.posts {
            self.posts.entry(post).or_default().extend(ts);
        }
        self.accepted += other.accepted;
    }

    pub fn finish(self) -> (UserIndex, PostIndex) {
        let users = self
            .users
            .into_iter()
            .map(|(author, events)| {
                let series = UserActivitySeries::new(author.clone(), events);
                (author, series)
            })
            .collect();
        let posts = self
            .posts
            .into_iter()
            .map(|(id, mut ts)| {
                ts.sort_unstable();
                (id, ts)
            })
            .collect();
        (UserIndex { users }, PostIndex { posts })
    }
}

pub fn build_user_index<'a, I>(records: I) -> UserIndex
where
    I: IntoIterator<Item = &'a Record>,
{
    let mut b = IndexBuilder::default();
    for r in records {
        b.push_record(r);
    }
    b.finish().0
}

/// Indexes comment timestamps by parent post. Posts themselves are ignored.
pub fn build_post_index<'a, I>(comments: I) -> PostIndex
where
    I: IntoIterator<Item = &'a Record>,
{
    let mut posts: BTreeMap<String, Vec<i64>> = BTreeMap::new();
    for r in comments {
        if let Record::Comment(c) = r {
            posts
                .entry(c.parent_post_id.clone())
                .or_default()
                .push(c.created_utc);
        }
    }
    for ts in posts.values_mut() {
        ts.sort_unstable();
    }
    PostIndex { posts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::catalog::{CatalogEntry, TopicClass};
    use crate::ingest::record::{CommentRecord, PostRecord};
    use proptest::prelude::*;

    fn comment(author: &str, sub: &str, t: i64, post: &str) -> Record {
        Record::Comment(CommentRecord {
            author: author.into(),
            subreddit: sub.into(),
            created_utc: t,
            body_length: 3,
            comment_id: format!("c{t}"),
            parent_post_id: post.into(),
        })
    }

    fn catalog() -> SubredditCatalog {
        let mut c = SubredditCatalog::new();
        let e = |included| CatalogEntry {
            topic_class: TopicClass::Sport,
            included,
            exotic_rules: false,
        };
        c.insert("A", e(true)).unwrap();
        c.insert("B", e(true)).unwrap();
        c.insert("X", e(false)).unwrap();
        c
    }

    #[test]
    fn window_rejects_inverted_bounds() {
        assert!(TimeWindow::new(10, 10).is_err());
        assert!(TimeWindow::new(10, 11).is_ok());
    }

    #[test]
    fn excluded_subreddit_dropped() {
        let w = TimeWindow::new(0, 1000).unwrap();
        let out: Vec<_> = filter_stream(vec![comment("u", "X", 5, "p")], &catalog(), w).collect();
        assert!(out.is_empty());
        let out: Vec<_> =
            filter_stream(vec![comment("u", "nowhere", 5, "p")], &catalog(), w).collect();
        assert!(out.is_empty());
    }

    #[test]
    fn window_bounds_are_inclusive() {
        let w = TimeWindow::new(100, 200).unwrap();
        let recs = vec![
            comment("u", "A", 100, "p"),
            comment("u", "A", 200, "p"),
            comment("u", "A", 201, "p"),
        ];
        let out: Vec<_> = filter_stream(recs, &catalog(), w).collect();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].created_utc(), 100);
        assert_eq!(out[1].created_utc(), 200);
    }

    #[test]
    fn user_series_sorted() {
        let recs = vec![
            comment("u", "A", 300, "p"),
            comment("u", "A", 100, "p"),
            comment("u", "B", 200, "p"),
        ];
        let idx = build_user_index(&recs);
        let ts: Vec<_> = idx
            .get("u")
            .unwrap()
            .events
            .iter()
            .map(|e| e.created_utc)
            .collect();
        assert_eq!(ts, vec![100, 200, 300]);
    }

    #[test]
    fn empty_stream_gives_empty_index() {
        assert!(build_user_index(&[]).is_empty());
        assert!(build_post_index(&[]).is_empty());
    }

    #[test]
    fn interleaved_authors() {
        let recs = vec![
            comment("u", "A", 30, "p"),
            comment("v", "A", 20, "p"),
            comment("u", "A", 10, "p"),
            comment("v", "B", 5, "p"),
        ];
        let idx = build_user_index(&recs);
        assert_eq!(idx.len(), 2);
        for s in idx.iter() {
            assert!(s
                .events
                .windows(2)
                .all(|w| w[0].created_utc <= w[1].created_utc));
        }
        assert_eq!(idx.total_events(), 4);
    }

    #[test]
    fn ties_keep_input_order() {
        let recs = vec![
            comment("u", "B", 10, "p"),
            comment("u", "A", 10, "p"),
            comment("u", "C", 5, "p"),
        ];
        let idx = build_user_index(&recs);
        let subs: Vec<_> = idx
            .get("u")
            .unwrap()
            .events
            .iter()
            .map(|e| e.subreddit.to_string())
            .collect();
        assert_eq!(subs, vec!["C", "B", "A"]);
    }

    #[test]
    fn post_index_sorted_and_sparse() {
        let recs = vec![
            comment("u", "A", 900, "p1"),
            comment("v", "A", 100, "p1"),
            comment("v", "A", 50, "p2"),
            Record::Post(PostRecord {
                author: "w".into(),
                subreddit: "A".into(),
                created_utc: 1,
                post_id: "p3".into(),
            }),
        ];
        let idx = build_post_index(&recs);
        assert_eq!(idx.get("p1"), Some(&[100, 900][..]));
        assert_eq!(idx.get("p2"), Some(&[50][..]));
        assert_eq!(idx.get("p3"), None);
    }

    fn arb_records() -> impl Strategy<Value = Vec<Record>> {
        prop::collection::vec(
            (
                0usize..4,
                prop::sample::select(vec!["A", "B", "X", "Z"]),
                1i64..500,
            ),
            0..60,
        )
        .prop_map(|v| {
            v.into_iter()
                .map(|(u, s, t)| comment(&format!("user{u}"), s, t, &format!("p{}", t % 7)))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn filter_commutes_with_indexing(recs in arb_records(), lo in 1i64..250, span in 1i64..250) {
            let cat = catalog();
            let w = TimeWindow::new(lo, lo + span).unwrap();
            let filtered: Vec<_> = filter_stream(recs.clone(), &cat, w).collect();
            let a = build_user_index(&filtered);
            let b: UserIndex = build_user_index(&recs)
                .iter()
                .map(|s| s.filtered(|e| cat.is_included(&e.subreddit) && w.contains(e.created_utc)))
                .filter(|s| !s.events.is_empty())
                .collect();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a.total_events(), filtered.len());
        }

        #[test]
        fn sharded_merge_matches_single_pass(recs in arb_records(), cut in 0usize..60) {
            let cut = cut.min(recs.len());
            let mut first = IndexBuilder::default();
            recs[..cut].iter().for_each(|r| first.push_record(r));
            let mut second = IndexBuilder::default();
            recs[cut..].iter().for_each(|r| second.push_record(r));
            first.merge(second);
            let (users, posts) = first.finish();
            prop_assert_eq!(users, build_user_index(&recs));
            prop_assert_eq!(posts, build_post_index(&recs));
        }
    }
}
