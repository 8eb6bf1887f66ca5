//! Document records, JSONL ingestion, tokenization and seed-query matching.
//!
//! Input records are one JSON object per line:
//!
//! ```text
//! {"id": "W1", "title": "...", "abstract": "...", "year": 2011,
//!  "categories": ["NUTR"], "cluster": "c17"}
//! ```
//!
//! Only `id` is required. `year` may be a number or a numeric string and
//! `cluster` may be a string or an integer.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::table;

const MIN_YEAR: i32 = 1900;
const MAX_YEAR: i32 = 2100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(rename = "abstract", default)]
    pub abstract_or_body: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<i32>,
    #[serde(default)]
    pub categories: Vec<String>,
    #[serde(rename = "cluster", default, skip_serializing_if = "Option::is_none")]
    pub cluster_id: Option<String>,
    #[serde(rename = "seed", default, skip_serializing_if = "std::ops::Not::not")]
    pub seed_flag: bool,
}

impl Document {
    pub fn new(id: impl Into<String>, title: impl Into<String>, body: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            title: title.into(),
            abstract_or_body: body.into(),
            year: None,
            categories: Vec::new(),
            cluster_id: None,
            seed_flag: false,
        }
    }

    /// True when both the title and the body are blank.
    pub fn is_empty_text(&self) -> bool {
        self.title.trim().is_empty() && self.abstract_or_body.trim().is_empty()
    }

    /// Tokens of title and body, in that order.
    pub fn tokens(&self) -> Vec<String> {
        let mut tokens = tokenize(&self.title);
        tokens.extend(tokenize(&self.abstract_or_body));
        tokens
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    pub name: String,
    pub documents: Vec<Document>,
    pub provenance_note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocumentFormat {
    Jsonl,
}

impl Corpus {
    /// Builds a corpus, rejecting empty or duplicate ids. Line numbers in
    /// errors are 1-based positions in `documents`.
    pub fn new(
        name: impl Into<String>,
        documents: Vec<Document>,
        provenance_note: impl Into<String>,
    ) -> Result<Self> {
        let mut seen: HashMap<&str, usize> = HashMap::with_capacity(documents.len());
        for (i, doc) in documents.iter().enumerate() {
            if doc.id.is_empty() {
                return Err(Error::invalid(format!("document {} has an empty id", i + 1)));
            }
            if let Some(&first) = seen.get(doc.id.as_str()) {
                return Err(Error::DuplicateId {
                    id: doc.id.clone(),
                    first,
                    second: i + 1,
                });
            }
            seen.insert(&doc.id, i + 1);
        }
        Ok(Corpus {
            name: name.into(),
            documents,
            provenance_note: provenance_note.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.documents.iter().map(|d| d.id.as_str())
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.id == id)
    }

    /// Serializes the corpus as JSONL in document order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for doc in &self.documents {
            out.push_str(&serde_json::to_string(doc).expect("document serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        table::write_file(path, self.to_jsonl().as_bytes())
    }
}

/// Reads a corpus file. The corpus is named after the file stem.
pub fn parse_documents(path: &Path, format: DocumentFormat) -> Result<Corpus> {
    match format {
        DocumentFormat::Jsonl => {
            let text = table::read_to_string(path)?;
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let mut corpus = parse_jsonl_str(&text, path)?;
            corpus.name = name;
            corpus.provenance_note = format!("ingested from {}", path.display());
            Ok(corpus)
        }
    }
}

/// Parses JSONL text; `origin` is only used in error messages.
pub fn parse_jsonl_str(text: &str, origin: &Path) -> Result<Corpus> {
    let mut documents = Vec::new();
    let mut lines_of = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            line: line_no,
            message,
        };
        let value: Value =
            serde_json::from_str(line).map_err(|e| err(format!("malformed JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| err("record is not a JSON object".into()))?;
        let doc = document_from_object(obj).map_err(err)?;
        documents.push(doc);
        lines_of.push(line_no);
    }
    let empty = documents.iter().filter(|d| d.is_empty_text()).count();
    if empty > 0 {
        log::warn!("{}: {empty} record(s) have neither title nor abstract", origin.display());
    }
    Corpus::new("", documents, "").map_err(|e| match e {
        // report file line numbers rather than record positions
        Error::DuplicateId { id, first, second } => Error::DuplicateId {
            id,
            first: lines_of[first - 1],
            second: lines_of[second - 1],
        },
        other => other,
    })
}

fn document_from_object(obj: &Map<String, Value>) -> std::result::Result<Document, String> {
    let id = match obj.get("id") {
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        _ => return Err("missing or empty \"id\"".into()),
    };
    let text_field = |key: &str| -> std::result::Result<String, String> {
        match obj.get(key) {
            None | Some(Value::Null) => Ok(String::new()),
            Some(Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(format!("\"{key}\" must be a string")),
        }
    };
    let title = text_field("title")?;
    let abstract_or_body = text_field("abstract")?;

    let year = match obj.get("year") {
        None | Some(Value::Null) => None,
        Some(Value::Number(n)) => Some(
            n.as_i64()
                .ok_or_else(|| format!("year {n} is not an integer"))?,
        ),
        Some(Value::String(s)) if s.trim().is_empty() => None,
        Some(Value::String(s)) => Some(
            s.trim()
                .parse::<i64>()
                .map_err(|_| format!("year {s:?} is not an integer"))?,
        ),
        Some(_) => return Err("\"year\" must be a number or string".into()),
    };
    let year = match year {
        Some(y) if !(MIN_YEAR as i64..=MAX_YEAR as i64).contains(&y) => {
            return Err(format!("year {y} outside [{MIN_YEAR}, {MAX_YEAR}]"))
        }
        Some(y) => Some(y as i32),
        None => None,
    };

    let categories = match obj.get("categories") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| {
                v.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| "categories must be strings".to_string())
            })
            .collect::<std::result::Result<_, _>>()?,
        Some(_) => return Err("\"categories\" must be an array".into()),
    };

    let cluster_id = match obj.get("cluster") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) if s.is_empty() => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(Value::Number(n)) => Some(n.to_string()),
        Some(_) => return Err("\"cluster\" must be a string or integer".into()),
    };
    let seed_flag = obj.get("seed").and_then(Value::as_bool).unwrap_or(false);

    Ok(Document {
        id,
        title,
        abstract_or_body,
        year,
        categories,
        cluster_id,
        seed_flag,
    })
}

/// Lowercases, splits on every non-alphanumeric character and drops tokens
/// shorter than two characters or made only of digits. Stopwords are kept.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .filter(|t| !t.chars().all(char::is_numeric))
        .map(str::to_string)
        .collect()
}

/// A seed query: either an exact term or a prefix ending in a single `*`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeedPattern {
    Prefix(String),
    Exact(String),
}

impl SeedPattern {
    pub fn parse(pattern: &str) -> Result<Self> {
        let lowered = pattern.trim().to_lowercase();
        let stars = lowered.matches('*').count();
        match stars {
            0 if !lowered.is_empty() => Ok(SeedPattern::Exact(lowered)),
            1 if lowered.len() > 1 && lowered.ends_with('*') => {
                Ok(SeedPattern::Prefix(lowered.trim_end_matches('*').to_string()))
            }
            _ => Err(Error::UnsupportedPattern(pattern.to_string())),
        }
    }

    pub fn matches_token(&self, token: &str) -> bool {
        match self {
            SeedPattern::Prefix(prefix) => token.starts_with(prefix.as_str()),
            SeedPattern::Exact(term) => token == term,
        }
    }

    pub fn matches_document(&self, doc: &Document) -> bool {
        doc.tokens().iter().any(|t| self.matches_token(t))
    }
}

/// Tags every document whose title or body has a token matching `pattern`
/// and returns the matching ids. Flags of non-matching documents are cleared.
pub fn match_seed(corpus: &mut Corpus, pattern: &str) -> Result<BTreeSet<String>> {
    let pattern = SeedPattern::parse(pattern)?;
    let mut seeds = BTreeSet::new();
    for doc in &mut corpus.documents {
        doc.seed_flag = pattern.matches_document(doc);
        if doc.seed_flag {
            seeds.insert(doc.id.clone());
        }
    }
    Ok(seeds)
}

/// Applies an explicit seed-id set in place of pattern matching.
pub fn apply_seed_ids(corpus: &mut Corpus, seeds: &BTreeSet<String>) {
    for doc in &mut corpus.documents {
        doc.seed_flag = seeds.contains(&doc.id);
    }
}

/// Reads a seed-id file: one id per line, blank lines and `#` comments ignored.
pub fn read_seed_ids(path: &Path) -> Result<BTreeSet<String>> {
    let text = table::read_to_string(path)?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

/// Keeps only documents with a nonempty abstract or body, in order.
pub fn filter_with_text(corpus: &Corpus) -> Corpus {
    Corpus {
        name: corpus.name.clone(),
        documents: corpus
            .documents
            .iter()
            .filter(|d| !d.abstract_or_body.trim().is_empty())
            .cloned()
            .collect(),
        provenance_note: corpus.provenance_note.clone(),
    }
}
