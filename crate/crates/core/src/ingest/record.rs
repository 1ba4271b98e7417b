use std::borrow::Cow;

use serde::Deserialize;

use super::IngestError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RecordKind {
    Comment,
    Post,
}

impl RecordKind {
    pub fn name(self) -> &'static str {
        match self {
            RecordKind::Comment => "comment",
            RecordKind::Post => "post",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommentRecord {
    pub author: String,
    pub subreddit: String,
    pub created_utc: i64,
    pub body_length: u32,
    pub comment_id: String,
    /// Id of the post the comment belongs to, without the `t3_` fullname prefix.
    pub parent_post_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostRecord {
    pub author: String,
    pub subreddit: String,
    pub created_utc: i64,
    pub post_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Record {
    Comment(CommentRecord),
    Post(PostRecord),
}

impl Record {
    pub fn author(&self) -> &str {
        match self {
            Record::Comment(c) => &c.author,
            Record::Post(p) => &p.author,
        }
    }

    pub fn subreddit(&self) -> &str {
        match self {
            Record::Comment(c) => &c.subreddit,
            Record::Post(p) => &p.subreddit,
        }
    }

    pub fn created_utc(&self) -> i64 {
        match self {
            Record::Comment(c) => c.created_utc,
            Record::Post(p) => p.created_utc,
        }
    }

    pub fn kind(&self) -> RecordKind {
        match self {
            Record::Comment(_) => RecordKind::Comment,
            Record::Post(_) => RecordKind::Post,
        }
    }

    pub fn view(&self) -> RecordView<'_> {
        match self {
            Record::Comment(c) => RecordView {
                kind: RecordKind::Comment,
                author: &c.author,
                subreddit: &c.subreddit,
                created_utc: c.created_utc,
                body_length: c.body_length,
                id: &c.comment_id,
                parent_post_id: &c.parent_post_id,
            },
            Record::Post(p) => RecordView {
                kind: RecordKind::Post,
                author: &p.author,
                subreddit: &p.subreddit,
                created_utc: p.created_utc,
                body_length: 0,
                id: &p.post_id,
                parent_post_id: "",
            },
        }
    }
}

/// Borrowed form of a record, used on the hot streaming path to avoid
/// allocating owned strings for every line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecordView<'a> {
    pub kind: RecordKind,
    pub author: &'a str,
    pub subreddit: &'a str,
    pub created_utc: i64,
    pub body_length: u32,
    pub id: &'a str,
    pub parent_post_id: &'a str,
}

impl RecordView<'_> {
    pub fn to_record(&self) -> Record {
        match self.kind {
            RecordKind::Comment => Record::Comment(CommentRecord {
                author: self.author.to_string(),
                subreddit: self.subreddit.to_string(),
                created_utc: self.created_utc,
                body_length: self.body_length,
                comment_id: self.id.to_string(),
                parent_post_id: self.parent_post_id.to_string(),
            }),
            RecordKind::Post => Record::Post(PostRecord {
                author: self.author.to_string(),
                subreddit: self.subreddit.to_string(),
                created_utc: self.created_utc,
                post_id: self.id.to_string(),
            }),
        }
    }
}

/// Dumps store `created_utc` as an integer, a float, or a numeric string
/// depending on the crawl vintage.
#[derive(Deserialize)]
#[serde(untagged)]
enum Timestamp<'a> {
    Int(i64),
    Float(f64),
    #[serde(borrow)]
    Text(Cow<'a, str>),
}

impl Timestamp<'_> {
    fn seconds(&self) -> Option<i64> {
        match self {
            Timestamp::Int(v) => Some(*v),
            Timestamp::Float(v) if v.is_finite() => Some(v.trunc() as i64),
            Timestamp::Float(_) => None,
            Timestamp::Text(s) => {
                let s = s.trim();
                s.parse::<i64>()
                    .ok()
                    .or_else(|| s.parse::<f64>().ok().map(|v| v.trunc() as i64))
            }
        }
    }
}

#[derive(Deserialize)]
struct RawRecord<'a> {
    #[serde(borrow, default)]
    author: Option<Cow<'a, str>>,
    #[serde(borrow, default)]
    subreddit: Option<Cow<'a, str>>,
    #[serde(borrow, default)]
    created_utc: Option<Timestamp<'a>>,
    #[serde(borrow, default)]
    body: Option<Cow<'a, str>>,
    #[serde(borrow, default)]
    id: Option<Cow<'a, str>>,
    #[serde(borrow, default)]
    link_id: Option<Cow<'a, str>>,
}

/// Owned-or-borrowed parse result; strings borrow from the line unless the
/// JSON had escapes.
#[derive(Debug)]
pub(crate) struct ParsedLine<'a> {
    pub kind: RecordKind,
    pub author: Cow<'a, str>,
    pub subreddit: Cow<'a, str>,
    pub created_utc: i64,
    pub body_length: u32,
    pub id: Cow<'a, str>,
    pub parent_post_id: Cow<'a, str>,
}

impl ParsedLine<'_> {
    pub fn view(&self) -> RecordView<'_> {
        RecordView {
            kind: self.kind,
            author: &self.author,
            subreddit: &self.subreddit,
            created_utc: self.created_utc,
            body_length: self.body_length,
            id: &self.id,
            parent_post_id: &self.parent_post_id,
        }
    }
}

fn required<'a>(
    value: Option<Cow<'a, str>>,
    key: &'static str,
) -> Result<Cow<'a, str>, IngestError> {
    match value {
        Some(v) if !v.is_empty() => Ok(v),
        Some(_) => Err(IngestError::InvalidField {
            key,
            reason: "empty string".into(),
        }),
        None => Err(IngestError::MissingField(key)),
    }
}

/// Character count of a comment body after dropping one trailing newline.
pub fn body_length(body: &str) -> u32 {
    let body = body.strip_suffix('\n').unwrap_or(body);
    u32::try_from(body.chars().count()).unwrap_or(u32::MAX)
}

pub(crate) fn parse_line(line: &str, kind: RecordKind) -> Result<ParsedLine<'_>, IngestError> {
    let raw: RawRecord<'_> = serde_json::from_str(line.trim_end_matches(['\r', '\n']))
        .map_err(|e| IngestError::MalformedRecord(e.to_string()))?;
    let author = required(raw.author, "author")?;
    let subreddit = required(raw.subreddit, "subreddit")?;
    let created_utc = raw
        .created_utc
        .ok_or(IngestError::MissingField("created_utc"))?
        .seconds()
        .ok_or_else(|| IngestError::InvalidField {
            key: "created_utc",
            reason: "not a number".into(),
        })?;
    if created_utc <= 0 {
        return Err(IngestError::InvalidField {
            key: "created_utc",
            reason: format!("{created_utc} is not positive"),
        });
    }
    let id = required(raw.id, "id")?;
    match kind {
        RecordKind::Comment => {
            let body = raw.body.ok_or(IngestError::MissingField("body"))?;
            let link = required(raw.link_id, "link_id")?;
            let parent_post_id = match link {
                Cow::Borrowed(s) => Cow::Borrowed(s.strip_prefix("t3_").unwrap_or(s)),
                Cow::Owned(s) => Cow::Owned(s.strip_prefix("t3_").unwrap_or(&s).to_string()),
            };
            Ok(ParsedLine {
                kind,
                author,
                subreddit,
                created_utc,
                body_length: body_length(&body),
                id,
                parent_post_id,
            })
        }
        RecordKind::Post => Ok(ParsedLine {
            kind,
            author,
            subreddit,
            created_utc,
            body_length: 0,
            id,
            parent_post_id: Cow::Borrowed(""),
        }),
    }
}

/// Parses one newline-delimited dump line into an owned record.
pub fn parse_record(line: &str, kind: RecordKind) -> Result<Record, IngestError> {
    parse_line(line, kind).map(|p| p.view().to_record())
}

#[cfg(test)]
mod tests {
    use super::*;

    const COMMENT: &str = r#"{"author":"alice","subreddit":"NFL","created_utc":1530000000,"body":"hello","id":"e1","link_id":"t3_p9"}"#;

    #[test]
    fn comment_fields() {
        let Record::Comment(c) = parse_record(COMMENT, RecordKind::Comment).unwrap() else {
            panic!("expected comment");
        };
        assert_eq!(c.body_length, 5);
        assert_eq!(c.author, "alice");
        assert_eq!(c.subreddit, "NFL");
        assert_eq!(c.created_utc, 1_530_000_000);
        assert_eq!(c.comment_id, "e1");
        assert_eq!(c.parent_post_id, "p9");
    }

    #[test]
    fn not_an_object() {
        assert!(matches!(
            parse_record("not-an-object", RecordKind::Comment),
            Err(IngestError::MalformedRecord(_))
        ));
        assert!(matches!(
            parse_record("[1,2]", RecordKind::Post),
            Err(IngestError::MalformedRecord(_))
        ));
    }

    #[test]
    fn missing_created_utc() {
        let line =
            r#"{"author":"alice","subreddit":"NFL","body":"hello","id":"e1","link_id":"t3_p9"}"#;
        assert!(matches!(
            parse_record(line, RecordKind::Comment),
            Err(IngestError::MissingField("created_utc"))
        ));
    }

    #[test]
    fn string_and_float_timestamps() {
        let s = r#"{"author":"a","subreddit":"s","created_utc":"1530000000","id":"x"}"#;
        let f = r#"{"author":"a","subreddit":"s","created_utc":1530000000.7,"id":"x"}"#;
        assert_eq!(
            parse_record(s, RecordKind::Post).unwrap().created_utc(),
            1_530_000_000
        );
        assert_eq!(
            parse_record(f, RecordKind::Post).unwrap().created_utc(),
            1_530_000_000
        );
    }

    #[test]
    fn nonpositive_timestamp_rejected() {
        let line = r#"{"author":"a","subreddit":"s","created_utc":0,"id":"x"}"#;
        assert!(matches!(
            parse_record(line, RecordKind::Post),
            Err(IngestError::InvalidField { .. })
        ));
    }

    #[test]
    fn body_length_counts_chars_and_drops_trailing_newline() {
        assert_eq!(body_length("héllo\n"), 5);
        assert_eq!(body_length("a\n\n"), 2);
        assert_eq!(body_length(""), 0);
        let line = r#"{"author":"a","subreddit":"s","created_utc":5,"body":"café\n","id":"x","link_id":"p"}"#;
        let Record::Comment(c) = parse_record(line, RecordKind::Comment).unwrap() else {
            panic!()
        };
        assert_eq!(c.body_length, 4);
        assert_eq!(c.parent_post_id, "p");
    }

    #[test]
    fn post_needs_no_body() {
        let line = r#"{"author":"a","subreddit":"s","created_utc":5,"id":"p1","title":"t"}"#;
        let rec = parse_record(line, RecordKind::Post).unwrap();
        assert_eq!(rec.kind(), RecordKind::Post);
        assert!(matches!(
            parse_record(line, RecordKind::Comment),
            Err(IngestError::MissingField("body"))
        ));
    }

    #[test]
    fn empty_author_is_invalid() {
        let line = r#"{"author":"","subreddit":"s","created_utc":5,"id":"p1"}"#;
        assert!(matches!(
            parse_record(line, RecordKind::Post),
            Err(IngestError::InvalidField { key: "author", .. })
        ));
    }
}
