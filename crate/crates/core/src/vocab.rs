//! Modeling vocabulary and the sparse document–term count matrix.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};
use crate::table;

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

/// A stopword list. Lines starting with `#` are comments.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stoplist {
    terms: BTreeSet<String>,
}

impl Stoplist {
    pub fn english() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Self {
        Stoplist {
            terms: text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Ok(Self::parse(&table::read_to_string(path)?))
    }

    pub fn contains(&self, term: &str) -> bool {
        self.terms.contains(term)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// SHA-256 over the sorted, newline-joined terms.
    pub fn checksum(&self) -> String {
        let joined: Vec<&str> = self.terms.iter().map(String::as_str).collect();
        table::sha256_hex(joined.join("\n").as_bytes())
    }
}

impl<S: Into<String>> FromIterator<S> for Stoplist {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Stoplist {
            terms: iter.into_iter().map(|s| s.into().to_lowercase()).collect(),
        }
    }
}

/// Terms in lexicographic order with dense indices `0..V`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    doc_freq: Vec<usize>,
    pub min_df: usize,
    pub stoplist_hash: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VocabularyMeta {
    min_df: usize,
    stoplist_hash: String,
    checksum: String,
    size: usize,
}

impl Vocabulary {
    /// Builds a vocabulary from already-sorted, distinct terms.
    pub fn from_sorted(
        terms: Vec<String>,
        doc_freq: Vec<usize>,
        min_df: usize,
        stoplist_hash: String,
    ) -> Result<Self> {
        if terms.len() != doc_freq.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} terms but {} document frequencies",
                terms.len(),
                doc_freq.len()
            )));
        }
        if terms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("vocabulary terms must be sorted and distinct"));
        }
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(Vocabulary {
            terms,
            index,
            doc_freq,
            min_df,
            stoplist_hash,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn doc_freq(&self) -> &[usize] {
        &self.doc_freq
    }

    /// SHA-256 over the newline-joined terms. Models carry this value to tie
    /// them to the vocabulary they were fitted on.
    pub fn checksum(&self) -> String {
        table::sha256_hex(self.terms.join("\n").as_bytes())
    }

    /// `index<TAB>term<TAB>doc_freq` with a header row.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("index\tterm\tdoc_freq\n");
        for (i, (t, df)) in self.terms.iter().zip(&self.doc_freq).enumerate() {
            out.push_str(&format!("{i}\t{t}\t{df}\n"));
        }
        out
    }

    /// Writes `vocab.tsv` and `vocab_meta.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        table::write_file(&dir.join("vocab.tsv"), self.to_tsv().as_bytes())?;
        let meta = VocabularyMeta {
            min_df: self.min_df,
            stoplist_hash: self.stoplist_hash.clone(),
            checksum: self.checksum(),
            size: self.len(),
        };
        let json = serde_json::to_string_pretty(&meta).expect("meta serializes") + "\n";
        table::write_file(&dir.join("vocab_meta.json"), json.as_bytes())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let tsv = dir.join("vocab.tsv");
        let text = table::read_to_string(&tsv)?;
        let mut terms = Vec::new();
        let mut doc_freq = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.is_empty() {
                continue;
            }
            let bad = |message: &str| Error::Parse {
                path: tsv.clone(),
                line: i + 1,
                message: message.to_string(),
            };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(bad("expected index, term, doc_freq"));
            }
            if fields[0].parse::<usize>().ok() != Some(terms.len()) {
                return Err(bad("indices must be 0..V without gaps"));
            }
            terms.push(fields[1].to_string());
            doc_freq.push(fields[2].parse().map_err(|_| bad("bad doc_freq"))?);
        }
        let meta_path = dir.join("vocab_meta.json");
        let meta: VocabularyMeta = serde_json::from_str(&table::read_to_string(&meta_path)?)
            .map_err(|e| Error::Parse {
                path: meta_path.clone(),
                line: e.line(),
                message: e.to_string(),
            })?;
        let vocab = Self::from_sorted(terms, doc_freq, meta.min_df, meta.stoplist_hash)?;
        if vocab.checksum() != meta.checksum {
            return Err(Error::VocabularyMismatch {
                expected: meta.checksum,
                found: vocab.checksum(),
            });
        }
        Ok(vocab)
    }
}

/// Keeps every non-stopword present in at least `min_df` documents.
pub fn build_vocabulary(corpus: &Corpus, stoplist: &Stoplist, min_df: usize) -> Result<Vocabulary> {
    if min_df == 0 {
        return Err(Error::invalid("min_df must be at least 1"));
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for doc in &corpus.documents {
        let distinct: BTreeSet<String> = doc.tokens().into_iter().collect();
        for term in distinct {
            if !stoplist.contains(&term) {
                *df.entry(term).or_default() += 1;
            }
        }
    }
    let (terms, doc_freq): (Vec<String>, Vec<usize>) =
        df.into_iter().filter(|&(_, n)| n >= min_df).unzip();
    if terms.is_empty() {
        return Err(Error::EmptyVocabulary { min_df });
    }
    Vocabulary::from_sorted(terms, doc_freq, min_df, stoplist.checksum())
}

/// Sparse nonnegative counts, one row per document.
///
/// Rows hold `(term_index, count)` pairs sorted by term index with positive
/// counts only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocTermMatrix {
    rows: Vec<Vec<(usize, u32)>>,
    doc_ids: Vec<String>,
    doc_lengths: Vec<usize>,
    n_terms: usize,
    vocab_checksum: String,
}

impl DocTermMatrix {
    pub fn from_rows(
        rows: Vec<Vec<(usize, u32)>>,
        doc_ids: Vec<String>,
        n_terms: usize,
    ) -> Result<Self> {
        if rows.len() != doc_ids.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} rows but {} document ids",
                rows.len(),
                doc_ids.len()
            )));
        }
        let mut doc_lengths = Vec::with_capacity(rows.len());
        for (d, row) in rows.iter().enumerate() {
            let mut prev = None;
            for &(t, c) in row {
                if t >= n_terms || c == 0 || prev.is_some_and(|p| p >= t) {
                    return Err(Error::invalid(format!(
                        "row {d}: entries must be positive, sorted and below {n_terms}"
                    )));
                }
                prev = Some(t);
            }
            doc_lengths.push(row.iter().map(|&(_, c)| c as usize).sum());
        }
        Ok(DocTermMatrix {
            rows,
            doc_ids,
            doc_lengths,
            n_terms,
            vocab_checksum: String::new(),
        })
    }

    /// Tags the matrix with the checksum of the vocabulary its columns index.
    pub fn with_vocab_checksum(mut self, checksum: impl Into<String>) -> Self {
        self.vocab_checksum = checksum.into();
        self
    }

    /// Checksum of the column vocabulary, empty when unknown.
    pub fn vocab_checksum(&self) -> &str {
        &self.vocab_checksum
    }

    pub fn n_docs(&self) -> usize {
        self.rows.len()
    }

    pub fn n_terms(&self) -> usize {
        self.n_terms
    }

    pub fn row(&self, d: usize) -> &[(usize, u32)] {
        &self.rows[d]
    }

    pub fn rows(&self) -> &[Vec<(usize, u32)>] {
        &self.rows
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn doc_lengths(&self) -> &[usize] {
        &self.doc_lengths
    }

    pub fn total_tokens(&self) -> usize {
        self.doc_lengths.iter().sum()
    }

    /// `(doc, term, count)` triples in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(d, row)| row.iter().map(move |&(t, c)| (d, t, c)))
    }

    /// Corpus-wide count of every term.
    pub fn term_totals(&self) -> Vec<u64> {
        let mut totals = vec![0u64; self.n_terms];
        for (_, t, c) in self.entries() {
            totals[t] += c as u64;
        }
        totals
    }

    /// Indices of rows with no in-vocabulary tokens.
    pub fn empty_rows(&self) -> Vec<usize> {
        (0..self.n_docs()).filter(|&d| self.doc_lengths[d] == 0).collect()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("doc_index\tterm_index\tcount\n");
        for (d, t, c) in self.entries() {
            out.push_str(&format!("{d}\t{t}\t{c}\n"));
        }
        out
    }

    /// Writes `matrix.tsv`, the `doc_ids.txt` sidecar and `empty_rows.txt`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        table::write_file(&dir.join("matrix.tsv"), self.to_tsv().as_bytes())?;
        let ids: String = self.doc_ids.iter().map(|id| format!("{id}\n")).collect();
        table::write_file(&dir.join("doc_ids.txt"), ids.as_bytes())?;
        let empty: String = self
            .empty_rows()
            .into_iter()
            .map(|d| format!("{d}\t{}\n", self.doc_ids[d]))
            .collect();
        table::write_file(&dir.join("empty_rows.txt"), empty.as_bytes())
    }

    pub fn load(dir: &Path, n_terms: usize) -> Result<Self> {
        let ids_text = table::read_to_string(&dir.join("doc_ids.txt"))?;
        let doc_ids: Vec<String> = ids_text.lines().map(str::to_string).collect();
        let path = dir.join("matrix.tsv");
        let text = table::read_to_string(&path)?;
        let mut rows = vec![Vec::new(); doc_ids.len()];
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.is_empty() {
                continue;
            }
            let parsed: Option<(usize, usize, u32)> = (|| {
                let mut f = line.split('\t');
                let d = f.next()?.parse().ok()?;
                let t = f.next()?.parse().ok()?;
                let c = f.next()?.parse().ok()?;
                f.next().is_none().then_some((d, t, c))
            })();
            let (d, t, c) = parsed
                .filter(|&(d, _, _)| d < rows.len())
                .ok_or_else(|| Error::Parse {
                    path: path.clone(),
                    line: i + 1,
                    message: "expected doc_index, term_index, count within bounds".into(),
                })?;
            rows[d].push((t, c));
        }
        Self::from_rows(rows, doc_ids, n_terms)
    }
}

fn count_row(doc: &Document, vocab: &Vocabulary) -> Vec<(usize, u32)> {
    let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
    for token in doc.tokens() {
        if let Some(t) = vocab.index_of(&token) {
            *counts.entry(t).or_default() += 1;
        }
    }
    counts.into_iter().collect()
}

/// Counts in-vocabulary tokens of each document's title and body. Documents
/// without any in-vocabulary token stay as empty rows.
pub fn count_matrix(corpus: &Corpus, vocab: &Vocabulary) -> DocTermMatrix {
    let rows = corpus.documents.iter().map(|d| count_row(d, vocab)).collect();
    let ids = corpus.ids().map(str::to_string).collect();
    let matrix = DocTermMatrix::from_rows(rows, ids, vocab.len())
        .expect("rows are well formed")
        .with_vocab_checksum(vocab.checksum());
    let empty = matrix.empty_rows().len();
    if empty > 0 {
        log::info!("{empty} document(s) have no in-vocabulary tokens");
    }
    matrix
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(texts: &[&str]) -> Corpus {
        Corpus::new(
            "t",
            texts
                .iter()
                .enumerate()
                .map(|(i, t)| Document::new(format!("d{i}"), "", *t))
                .collect(),
            "",
        )
        .unwrap()
    }

    #[test]
    fn min_df_one_keeps_all_tokens() {
        let c = corpus(&["bb aa", "cc aa"]);
        let v = build_vocabulary(&c, &Stoplist::empty(), 1).unwrap();
        assert_eq!(v.terms(), ["aa", "bb", "cc"]);
        assert_eq!(v.doc_freq(), [2, 1, 1]);
    }

    #[test]
    fn min_df_boundary() {
        let mut texts = vec!["rare common"; 99];
        texts.push("common");
        let c = corpus(&texts);
        let v = build_vocabulary(&c, &Stoplist::empty(), 100).unwrap();
        assert_eq!(v.terms(), ["common"]);
    }

    #[test]
    fn stopwords_removed_and_empty_vocab_errors() {
        let c = corpus(&["the and of"]);
        let err = build_vocabulary(&c, &Stoplist::english(), 1).unwrap_err();
        assert!(matches!(err, Error::EmptyVocabulary { min_df: 1 }));
        assert!(build_vocabulary(&c, &Stoplist::empty(), 0).is_err());
    }

    #[test]
    fn counting_example() {
        let c = corpus(&["obesity obesity risk", "the of"]);
        let stop = Stoplist::english();
        let v = build_vocabulary(&c, &stop, 1).unwrap();
        assert_eq!(v.terms(), ["obesity", "risk"]);
        let m = count_matrix(&c, &v);
        assert_eq!(m.row(0), [(0, 2), (1, 1)]);
        assert_eq!(m.doc_lengths(), [3, 0]);
        assert_eq!(m.empty_rows(), [1]);
    }

    #[test]
    fn title_tokens_are_counted() {
        let mut doc = Document::new("x", "risk", "risk factor");
        doc.year = Some(2000);
        let c = Corpus::new("t", vec![doc], "").unwrap();
        let v = build_vocabulary(&c, &Stoplist::empty(), 1).unwrap();
        let m = count_matrix(&c, &v);
        assert_eq!(m.row(0), [(0, 1), (1, 2)]);
    }

    #[test]
    fn save_and_load() {
        let c = corpus(&["alpha beta beta", "", "gamma alpha"]);
        let v = build_vocabulary(&c, &Stoplist::english(), 1).unwrap();
        let m = count_matrix(&c, &v);
        let dir = tempfile::tempdir().unwrap();
        v.save(dir.path()).unwrap();
        m.save(dir.path()).unwrap();
        let v2 = Vocabulary::load(dir.path()).unwrap();
        assert_eq!(v, v2);
        let loaded = DocTermMatrix::load(dir.path(), v2.len()).unwrap();
        assert_eq!(loaded.with_vocab_checksum(v2.checksum()), m);
    }

    #[test]
    fn stoplist_checksum_is_order_free() {
        let a: Stoplist = ["x", "y"].into_iter().collect();
        let b: Stoplist = ["y", "x"].into_iter().collect();
        assert_eq!(a.checksum(), b.checksum());
        assert_ne!(a.checksum(), Stoplist::english().checksum());
    }
}
