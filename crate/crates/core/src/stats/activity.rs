use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::ingest::UserIndex;

use super::histogram::Histogram;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActivityMeasure {
    PostsPerAuthor,
    CommentsPerAuthor,
    SubredditsPostedPerAuthor,
    SubredditsCommentedPerAuthor,
    PostsPerSubreddit,
    CommentsPerSubreddit,
}

impl ActivityMeasure {
    pub const ALL: [ActivityMeasure; 6] = [
        ActivityMeasure::PostsPerAuthor,
        ActivityMeasure::CommentsPerAuthor,
        ActivityMeasure::SubredditsPostedPerAuthor,
        ActivityMeasure::SubredditsCommentedPerAuthor,
        ActivityMeasure::PostsPerSubreddit,
        ActivityMeasure::CommentsPerSubreddit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ActivityMeasure::PostsPerAuthor => "posts_per_author",
            ActivityMeasure::CommentsPerAuthor => "comments_per_author",
            ActivityMeasure::SubredditsPostedPerAuthor => "subreddits_posted_per_author",
            ActivityMeasure::SubredditsCommentedPerAuthor => "subreddits_commented_per_author",
            ActivityMeasure::PostsPerSubreddit => "posts_per_subreddit",
            ActivityMeasure::CommentsPerSubreddit => "comments_per_subreddit",
        }
    }
}

impl fmt::Display for ActivityMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One value per entity. Entities with a zero value (authors that never
/// posted, say) are left out: they are not part of that population.
pub fn activity_values(index: &UserIndex, measure: ActivityMeasure) -> Vec<u64> {
    use ActivityMeasure::*;
    match measure {
        PostsPerAuthor
        | CommentsPerAuthor
        | SubredditsPostedPerAuthor
        | SubredditsCommentedPerAuthor => index
            .iter()
            .map(|s| match measure {
                PostsPerAuthor => s.posts().count() as u64,
                CommentsPerAuthor => s.comments().count() as u64,
                SubredditsPostedPerAuthor => s
                    .posts()
                    .map(|e| &e.subreddit)
                    .collect::<BTreeSet<_>>()
                    .len() as u64,
                _ => s
                    .comments()
                    .map(|e| &e.subreddit)
                    .collect::<BTreeSet<_>>()
                    .len() as u64,
            })
            .filter(|&v| v > 0)
            .collect(),
        PostsPerSubreddit | CommentsPerSubreddit => {
            let want_posts = measure == PostsPerSubreddit;
            let mut per: BTreeMap<&str, u64> = BTreeMap::new();
            for s in index.iter() {
                let events: Box<dyn Iterator<Item = _>> = if want_posts {
                    Box::new(s.posts())
                } else {
                    Box::new(s.comments())
                };
                for e in events {
                    *per.entry(&e.subreddit).or_default() += 1;
                }
            }
            per.into_values().collect()
        }
    }
}

/// Log-binned distribution of `measure` over its entities.
pub fn activity_distribution(
    index: &UserIndex,
    measure: ActivityMeasure,
    bins_per_decade: usize,
) -> Histogram {
    let values: Vec<f64> = activity_values(index, measure)
        .into_iter()
        .map(|v| v as f64)
        .collect();
    Histogram::logarithmic(&values, bins_per_decade)
}
