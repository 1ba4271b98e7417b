use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, NaiveDateTime};

use crate::bots::BotConfig;
use crate::concentration::GiniMode;
use crate::ingest::TimeWindow;
use crate::interest::InterestConfig;
use crate::stats::DEFAULT_BINS_PER_DECADE;

use super::PipelineError;

/// Everything a pipeline run needs. Built from defaults, then a flat
/// `key = value` config file, then command-line overrides, all through
/// [`RunConfig::set`].
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub comments: Vec<PathBuf>,
    pub posts: Vec<PathBuf>,
    pub catalog: Option<PathBuf>,
    pub from: Option<i64>,
    pub to: Option<i64>,
    pub output: PathBuf,
    pub force: bool,
    pub seed: u64,
    pub threads: Option<usize>,
    pub exclude_bots: bool,
    pub bins_per_decade: usize,
    pub gini_mode: GiniMode,
    pub gini_bins_per_decade: usize,
    pub null_repetitions: usize,
    pub interest: InterestConfig,
    pub bots: BotConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            comments: Vec::new(),
            posts: Vec::new(),
            catalog: None,
            from: None,
            to: None,
            output: PathBuf::from("interestflow-out"),
            force: false,
            seed: 0,
            threads: None,
            exclude_bots: false,
            bins_per_decade: DEFAULT_BINS_PER_DECADE,
            gini_mode: GiniMode::Corrected,
            gini_bins_per_decade: 5,
            null_repetitions: 1,
            interest: InterestConfig::default(),
            bots: BotConfig::default(),
        }
    }
}

fn bad(key: &str, value: &str, why: impl std::fmt::Display) -> PipelineError {
    PipelineError::Config(format!("{key} = {value}: {why}"))
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, PipelineError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| bad(key, value, e))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, PipelineError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(bad(key, value, "expected a boolean")),
    }
}

/// Epoch seconds, an RFC 3339 timestamp, `YYYY-MM-DDTHH:MM:SS` (UTC) or a
/// bare date. A bare date means the start of that day, or its last second
/// when `end_of_day`.
pub fn parse_time(value: &str, end_of_day: bool) -> Option<i64> {
    if let Ok(n) = value.parse::<i64>() {
        return Some(n);
    }
    if let Ok(t) = DateTime::parse_from_rfc3339(value) {
        return Some(t.timestamp());
    }
    if let Ok(t) = NaiveDateTime::parse_from_str(value, "%Y-%m-%dT%H:%M:%S") {
        return Some(t.and_utc().timestamp());
    }
    let d = NaiveDate::parse_from_str(value, "%Y-%m-%d").ok()?;
    let t = if end_of_day {
        d.and_hms_opt(23, 59, 59)?
    } else {
        d.and_hms_opt(0, 0, 0)?
    };
    Some(t.and_utc().timestamp())
}

fn paths(value: &str, base: &Path) -> Vec<PathBuf> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| base.join(s))
        .collect()
}

impl RunConfig {
    /// Applies one setting. Relative paths are resolved against `base`.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<(), PipelineError> {
        let value = value.trim();
        match key.trim().replace('-', "_").as_str() {
            "comments" => self.comments = paths(value, base),
            "posts" => self.posts = paths(value, base),
            "catalog" => self.catalog = Some(base.join(value)),
            "from" => {
                self.from = Some(
                    parse_time(value, false).ok_or_else(|| bad(key, value, "unrecognised time"))?,
                )
            }
            "to" => {
                self.to = Some(
                    parse_time(value, true).ok_or_else(|| bad(key, value, "unrecognised time"))?,
                )
            }
            "output" => self.output = base.join(value),
            "force" => self.force = parse_bool(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "threads" => self.threads = Some(parse_num(key, value)?),
            "exclude_bots" => self.exclude_bots = parse_bool(key, value)?,
            "bins_per_decade" => self.bins_per_decade = parse_num(key, value)?,
            "mode" | "gini_mode" => {
                self.gini_mode = value.parse().map_err(|e| bad(key, value, e))?
            }
            "gini_bins_per_decade" => self.gini_bins_per_decade = parse_num(key, value)?,
            "null_repetitions" => self.null_repetitions = parse_num(key, value)?,
            "bin_size" => self.interest.bin_size = parse_num(key, value)?,
            "threshold_deg" => self.interest.threshold_deg = parse_num(key, value)?,
            "min_comments" => self.interest.min_comments = parse_num(key, value)?,
            "per_subreddit" => self.interest.per_subreddit = parse_bool(key, value)?,
            "percentile" => self.bots.percentile = parse_num(key, value)?,
            "min_comments_for_entropy" => {
                self.bots.min_comments_for_entropy = parse_num(key, value)?
            }
            other => return Err(PipelineError::Config(format!("unknown setting `{other}`"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file; blank lines and `#` comments are
    /// ignored. Paths inside resolve against the file's directory.
    pub fn load_file(&mut self, path: &Path) -> Result<(), PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("reading {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                PipelineError::Config(format!(
                    "{}:{}: expected key = value",
                    path.display(),
                    n + 1
                ))
            })?;
            self.set(k, v, base)?;
        }
        Ok(())
    }

    pub fn window(&self) -> Result<Option<TimeWindow>, PipelineError> {
        match (self.from, self.to) {
            (None, None) => Ok(None),
            (from, to) => TimeWindow::new(from.unwrap_or(i64::MIN), to.unwrap_or(i64::MAX))
                .map(Some)
                .map_err(|e| PipelineError::Config(e.to_string())),
        }
    }

    /// Checks everything that can be checked before reading any data.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let catalog = self
            .catalog
            .as_ref()
            .ok_or_else(|| PipelineError::Config("no catalog given".into()))?;
        if !catalog.is_file() {
            return Err(PipelineError::Config(format!(
                "catalog {} does not exist",
                catalog.display()
            )));
        }
        if self.comments.is_empty() {
            return Err(PipelineError::Config("no comment dumps given".into()));
        }
        for p in self.comments.iter().chain(&self.posts) {
            if !p.is_file() {
                return Err(PipelineError::Config(format!(
                    "input {} does not exist",
                    p.display()
                )));
            }
        }
        self.window()?;
        self.interest
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        if !(self.bots.percentile > 0.0 && self.bots.percentile < 100.0) {
            return Err(PipelineError::Config(format!(
                "percentile {} outside (0, 100)",
                self.bots.percentile
            )));
        }
        if self.bins_per_decade == 0 || self.gini_bins_per_decade == 0 {
            return Err(PipelineError::Config(
                "bins per decade must be positive".into(),
            ));
        }
        if self.threads == Some(0) {
            return Err(PipelineError::Config("threads must be positive".into()));
        }
        Ok(())
    }

    /// `key=value` lines that reproduce this configuration.
    pub fn echo(&self) -> Vec<(String, String)> {
        let join = |v: &[PathBuf]| {
            v.iter()
                .map(|p| p.display().to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let opt = |v: Option<i64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = vec![
            ("comments", join(&self.comments)),
            ("posts", join(&self.posts)),
            (
                "catalog",
                self.catalog
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_default(),
            ),
            ("from", opt(self.from)),
            ("to", opt(self.to)),
            ("seed", self.seed.to_string()),
            ("exclude_bots", self.exclude_bots.to_string()),
            ("bins_per_decade", self.bins_per_decade.to_string()),
            ("mode", self.gini_mode.name().to_string()),
            (
                "gini_bins_per_decade",
                self.gini_bins_per_decade.to_string(),
            ),
            ("null_repetitions", self.null_repetitions.to_string()),
            ("bin_size", self.interest.bin_size.to_string()),
            ("threshold_deg", self.interest.threshold_deg.to_string()),
            ("min_comments", self.interest.min_comments.to_string()),
            ("per_subreddit", self.interest.per_subreddit.to_string()),
            ("percentile", self.bots.percentile.to_string()),
            (
                "min_comments_for_entropy",
                self.bots.min_comments_for_entropy.to_string(),
            ),
        ];
        out.sort_by_key(|(k, _)| *k);
        out.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.echo() {
            writeln!(s, "{k} = {v}").expect("string write");
        }
        s
    }
}
