use std::collections::HashMap;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use super::IngestError;

/// The fifteen hand-assigned topic classes subreddits are grouped into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TopicClass {
    Sport,
    FoodHealth,
    ComicsGames,
    NewsPoliticsSociety,
    ScienceTechnology,
    LifetipsAdvice,
    HumorMemes,
    BooksMoviesMusic,
    ImagesVideos,
    FashionLifestyle,
    StoriesEverydayLife,
    HowtoHobbies,
    ArtMusicSoftSciences,
    Places,
    Others,
}

impl TopicClass {
    pub const ALL: [TopicClass; 15] = [
        TopicClass::Sport,
        TopicClass::FoodHealth,
        TopicClass::ComicsGames,
        TopicClass::NewsPoliticsSociety,
        TopicClass::ScienceTechnology,
        TopicClass::LifetipsAdvice,
        TopicClass::HumorMemes,
        TopicClass::BooksMoviesMusic,
        TopicClass::ImagesVideos,
        TopicClass::FashionLifestyle,
        TopicClass::StoriesEverydayLife,
        TopicClass::HowtoHobbies,
        TopicClass::ArtMusicSoftSciences,
        TopicClass::Places,
        TopicClass::Others,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TopicClass::Sport => "Sport",
            TopicClass::FoodHealth => "FoodHealth",
            TopicClass::ComicsGames => "ComicsGames",
            TopicClass::NewsPoliticsSociety => "NewsPoliticsSociety",
            TopicClass::ScienceTechnology => "ScienceTechnology",
            TopicClass::LifetipsAdvice => "LifetipsAdvice",
            TopicClass::HumorMemes => "HumorMemes",
            TopicClass::BooksMoviesMusic => "BooksMoviesMusic",
            TopicClass::ImagesVideos => "ImagesVideos",
            TopicClass::FashionLifestyle => "FashionLifestyle",
            TopicClass::StoriesEverydayLife => "StoriesEverydayLife",
            TopicClass::HowtoHobbies => "HowtoHobbies",
            TopicClass::ArtMusicSoftSciences => "ArtMusicSoftSciences",
            TopicClass::Places => "Places",
            TopicClass::Others => "Others",
        }
    }

    /// Position of this class on the fixed topic axis.
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for TopicClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TopicClass {
    type Err = IngestError;

    /// Accepts both the compact form (`NewsPoliticsSociety`) and the table
    /// form (`News, Politics, Society`); matching ignores case, spaces and
    /// punctuation.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_alphanumeric())
            .flat_map(char::to_lowercase)
            .collect();
        TopicClass::ALL
            .into_iter()
            .find(|t| t.name().to_lowercase() == key)
            .ok_or_else(|| IngestError::UnknownTopicClass(s.trim().to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogEntry {
    pub topic_class: TopicClass,
    pub included: bool,
    /// Communities with programmatic commenting rules (single-letter games
    /// and the like) whose comment lengths say nothing about the author.
    pub exotic_rules: bool,
}

/// Subreddit to topic-class mapping. Row order fixes the subreddit axis used
/// by activity vectors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SubredditCatalog {
    names: Vec<String>,
    entries: Vec<CatalogEntry>,
    index: HashMap<String, usize>,
}

impl SubredditCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, entry: CatalogEntry) -> Result<(), IngestError> {
        let name = name.trim();
        if name.is_empty() {
            return Err(IngestError::InvalidCatalog("empty subreddit name".into()));
        }
        if self.index.contains_key(name) {
            return Err(IngestError::DuplicateEntry(name.to_string()));
        }
        self.index.insert(name.to_string(), self.names.len());
        self.names.push(name.to_string());
        self.entries.push(entry);
        Ok(())
    }

    pub fn get(&self, subreddit: &str) -> Option<&CatalogEntry> {
        self.index.get(subreddit).map(|&i| &self.entries[i])
    }

    pub fn topic_of(&self, subreddit: &str) -> Option<TopicClass> {
        self.get(subreddit).map(|e| e.topic_class)
    }

    pub fn is_included(&self, subreddit: &str) -> bool {
        self.get(subreddit).is_some_and(|e| e.included)
    }

    pub fn is_exotic(&self, subreddit: &str) -> bool {
        self.get(subreddit).is_some_and(|e| e.exotic_rules)
    }

    /// Position of `subreddit` among all cataloged rows.
    pub fn position(&self, subreddit: &str) -> Option<usize> {
        self.index.get(subreddit).copied()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &CatalogEntry)> {
        self.names
            .iter()
            .map(String::as_str)
            .zip(self.entries.iter())
    }

    /// Names of included subreddits in catalog order.
    pub fn included_names(&self) -> Vec<&str> {
        self.iter()
            .filter(|(_, e)| e.included)
            .map(|(n, _)| n)
            .collect()
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self, IngestError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| IngestError::InvalidCatalog(e.to_string()))?;
        let expected = ["subreddit", "topic_class", "included", "exotic_rules"];
        if headers.len() != expected.len() || headers.iter().zip(expected).any(|(h, e)| h != e) {
            return Err(IngestError::InvalidCatalog(format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut catalog = SubredditCatalog::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| IngestError::InvalidCatalog(e.to_string()))?;
            let field = |i: usize| record.get(i).unwrap_or("");
            let topic_class = field(1).parse()?;
            let included = parse_flag(field(2), row + 2)?;
            let exotic_rules = parse_flag(field(3), row + 2)?;
            catalog.insert(
                field(0),
                CatalogEntry {
                    topic_class,
                    included,
                    exotic_rules,
                },
            )?;
        }
        Ok(catalog)
    }

    pub fn to_csv(&self) -> String {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(["subreddit", "topic_class", "included", "exotic_rules"])
            .expect("in-memory write");
        for (name, e) in self.iter() {
            wtr.write_record([
                name,
                e.topic_class.name(),
                if e.included { "true" } else { "false" },
                if e.exotic_rules { "true" } else { "false" },
            ])
            .expect("in-memory write");
        }
        String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("utf8 csv")
    }
}

fn parse_flag(raw: &str, line: usize) -> Result<bool, IngestError> {
    match raw.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "y" | "included" => Ok(true),
        "false" | "0" | "no" | "n" | "excluded" | "" => Ok(false),
        other => Err(IngestError::InvalidCatalog(format!(
            "line {line}: bad boolean `{other}`"
        ))),
    }
}

/// Reads a catalog table from disk.
pub fn load_catalog(path: impl AsRef<Path>) -> Result<SubredditCatalog, IngestError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| IngestError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    SubredditCatalog::from_reader(file)
}
