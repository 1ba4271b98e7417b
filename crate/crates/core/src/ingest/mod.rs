//! Dump parsing, catalog handling and the per-user / per-post indexes every
//! analysis reads from.

mod catalog;
mod index;
mod reader;
mod record;

pub use catalog::{load_catalog, CatalogEntry, SubredditCatalog, TopicClass};
pub use index::{
    build_post_index, build_user_index, filter_stream, is_deleted_author, Event, IndexBuilder,
    PostIndex, TimeWindow, UserActivitySeries, UserIndex,
};
pub use reader::{
    for_each_line, ingest_file, ingest_files, read_dump, Corpus, IngestCounters, InputDigest,
};
pub use record::{
    body_length, parse_record, CommentRecord, PostRecord, Record, RecordKind, RecordView,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed record: {0}")]
    MalformedRecord(String),
    #[error("missing field `{0}`")]
    MissingField(&'static str),
    #[error("invalid field `{key}`: {reason}")]
    InvalidField { key: &'static str, reason: String },
    #[error("duplicate catalog entry `{0}`")]
    DuplicateEntry(String),
    #[error("unknown topic class `{0}`")]
    UnknownTopicClass(String),
    #[error("invalid catalog: {0}")]
    InvalidCatalog(String),
    #[error("invalid time window: start {start} is not before end {end}")]
    InvalidWindow { start: i64, end: i64 },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
