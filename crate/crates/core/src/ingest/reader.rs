use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::catalog::SubredditCatalog;
use super::index::{accepts, is_deleted_author, IndexBuilder, PostIndex, TimeWindow, UserIndex};
use super::record::{parse_line, Record, RecordKind};
use super::IngestError;

const ZSTD_MAGIC: [u8; 4] = [0x28, 0xB5, 0x2F, 0xFD];

/// Line accounting for one or more dump files.
///
/// `lines_read == accepted + skipped()` always holds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestCounters {
    pub lines_read: u64,
    pub malformed: u64,
    pub missing_field: u64,
    pub invalid_field: u64,
    pub deleted_author: u64,
    pub filtered_out: u64,
    pub accepted: u64,
}

impl IngestCounters {
    pub fn skipped(&self) -> u64 {
        self.malformed
            + self.missing_field
            + self.invalid_field
            + self.deleted_author
            + self.filtered_out
    }

    pub fn add(&mut self, o: &IngestCounters) {
        self.lines_read += o.lines_read;
        self.malformed += o.malformed;
        self.missing_field += o.missing_field;
        self.invalid_field += o.invalid_field;
        self.deleted_author += o.deleted_author;
        self.filtered_out += o.filtered_out;
        self.accepted += o.accepted;
    }

    fn count_error(&mut self, e: &IngestError) {
        match e {
            IngestError::MissingField(_) => self.missing_field += 1,
            IngestError::InvalidField { .. } => self.invalid_field += 1,
            _ => self.malformed += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputDigest {
    pub path: PathBuf,
    pub kind: RecordKind,
    /// SHA-256 of the file bytes as stored (before decompression).
    pub sha256: String,
    pub counters: IngestCounters,
}

struct HashingReader<R> {
    inner: R,
    hasher: Sha256,
}

impl<R: Read> Read for HashingReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> IngestError + '_ {
    move |source| IngestError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Streams every line of a dump file (plain or zstd-compressed) to `on_line`
/// and returns the SHA-256 of the raw file bytes.
pub fn for_each_line(path: &Path, mut on_line: impl FnMut(&[u8])) -> Result<String, IngestError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut hashing = HashingReader {
        inner: file,
        hasher: Sha256::new(),
    };
    {
        let mut buf = BufReader::with_capacity(1 << 20, &mut hashing);
        let compressed = buf
            .fill_buf()
            .map_err(io_err(path))?
            .starts_with(&ZSTD_MAGIC);
        if compressed {
            let mut dec =
                zstd::stream::read::Decoder::with_buffer(&mut buf).map_err(io_err(path))?;
            // Large dumps are compressed with long-distance matching.
            dec.window_log_max(31).map_err(io_err(path))?;
            read_lines(BufReader::with_capacity(1 << 20, dec), &mut on_line)
                .map_err(io_err(path))?;
        } else {
            read_lines(&mut buf, &mut on_line).map_err(io_err(path))?;
        }
        io::copy(&mut buf, &mut io::sink()).map_err(io_err(path))?;
    }
    Ok(format!("{:x}", hashing.hasher.finalize()))
}

fn read_lines<R: BufRead>(mut reader: R, on_line: &mut impl FnMut(&[u8])) -> io::Result<()> {
    let mut line = Vec::with_capacity(4096);
    loop {
        line.clear();
        if reader.read_until(b'\n', &mut line)? == 0 {
            return Ok(());
        }
        let trimmed = line.strip_suffix(b"\n").unwrap_or(&line);
        let trimmed = trimmed.strip_suffix(b"\r").unwrap_or(trimmed);
        if trimmed.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        on_line(trimmed);
    }
}

/// Parses one dump file, keeping records accepted by `catalog`/`window`.
pub fn ingest_file(
    path: &Path,
    kind: RecordKind,
    catalog: &SubredditCatalog,
    window: Option<TimeWindow>,
) -> Result<(IndexBuilder, InputDigest), IngestError> {
    let mut builder = IndexBuilder::default();
    let mut counters = IngestCounters::default();
    let sha256 = for_each_line(path, |bytes| {
        counters.lines_read += 1;
        let Ok(line) = std::str::from_utf8(bytes) else {
            counters.malformed += 1;
            return;
        };
        match parse_line(line, kind) {
            Err(e) => counters.count_error(&e),
            Ok(p) if is_deleted_author(&p.author) => counters.deleted_author += 1,
            Ok(p) => {
                let view = p.view();
                if accepts(catalog, window, &view) {
                    builder.push(&view);
                    counters.accepted += 1;
                } else {
                    counters.filtered_out += 1;
                }
            }
        }
    })?;
    Ok((
        builder,
        InputDigest {
            path: path.to_path_buf(),
            kind,
            sha256,
            counters,
        },
    ))
}

/// Reads a whole dump file into owned records, counting skipped lines.
pub fn read_dump(
    path: &Path,
    kind: RecordKind,
) -> Result<(Vec<Record>, IngestCounters), IngestError> {
    let mut out = Vec::new();
    let mut counters = IngestCounters::default();
    for_each_line(path, |bytes| {
        counters.lines_read += 1;
        let parsed = std::str::from_utf8(bytes)
            .map_err(|e| IngestError::MalformedRecord(e.to_string()))
            .and_then(|line| parse_line(line, kind).map(|p| p.view().to_record()));
        match parsed {
            Ok(r) => {
                counters.accepted += 1;
                out.push(r);
            }
            Err(e) => counters.count_error(&e),
        }
    })?;
    Ok((out, counters))
}

/// Indexed corpus produced by [`ingest_files`].
#[derive(Debug, Clone)]
pub struct Corpus {
    pub users: UserIndex,
    pub posts: PostIndex,
    pub counters: IngestCounters,
    pub inputs: Vec<InputDigest>,
}

/// Parses comment and post dumps concurrently (one task per file) and merges
/// the partial indexes in argument order.
pub fn ingest_files(
    comments: &[PathBuf],
    posts: &[PathBuf],
    catalog: &SubredditCatalog,
    window: Option<TimeWindow>,
) -> Result<Corpus, IngestError> {
    let jobs: Vec<(&Path, RecordKind)> = comments
        .iter()
        .map(|p| (p.as_path(), RecordKind::Comment))
        .chain(posts.iter().map(|p| (p.as_path(), RecordKind::Post)))
        .collect();
    let shards = jobs
        .par_iter()
        .map(|&(path, kind)| ingest_file(path, kind, catalog, window))
        .collect::<Result<Vec<_>, _>>()?;

    let mut merged = IndexBuilder::default();
    let mut counters = IngestCounters::default();
    let mut inputs = Vec::with_capacity(shards.len());
    for (builder, digest) in shards {
        merged.merge(builder);
        counters.add(&digest.counters);
        inputs.push(digest);
    }
    log::info!(
        "ingested {} lines: {} accepted, {} skipped",
        counters.lines_read,
        counters.accepted,
        counters.skipped()
    );
    let (users, posts) = merged.finish();
    Ok(Corpus {
        users,
        posts,
        counters,
        inputs,
    })
}
