//! Seeded synthetic data.
//!
//! [`PlantedLda`] draws a corpus from known topic–term and document–topic
//! distributions, the ground truth for sampler-recovery checks.
//! [`synthetic_dataset`] builds a desk-scale stand-in for the science and
//! policy corpora: a publication corpus organised in citation clusters with a
//! seed term sprinkled at cluster-dependent rates, a cluster assignment, a
//! category grouping, and a corpus of short policy questions whose themes
//! borrow vocabulary from some of the science topics.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::analytics::CategoryGrouping;
use crate::corpus::{Corpus, Document};
use crate::delineation::ClusterAssignment;
use crate::error::{Error, Result};
use crate::vocab::{DocTermMatrix, Stoplist};

/// Draws a symmetric Dirichlet vector of length `n`.
pub fn dirichlet(rng: &mut impl Rng, concentration: f64, n: usize) -> Vec<f64> {
    let gamma = Gamma::new(concentration, 1.0).expect("positive concentration");
    loop {
        let draws: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
        let sum: f64 = draws.iter().sum();
        if sum > 0.0 && sum.is_finite() {
            return draws.into_iter().map(|x| x / sum).collect();
        }
    }
}

/// Inverse-CDF draw from a discrete distribution.
pub fn draw_index(rng: &mut impl Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.random::<f64>() * probs.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Parameters of a corpus drawn from the LDA generative process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedLdaSpec {
    pub topics: usize,
    pub terms: usize,
    pub docs: usize,
    pub tokens_per_doc: usize,
    /// Dirichlet concentration of the true θ rows.
    pub doc_concentration: f64,
    /// Dirichlet concentration of the true φ rows.
    pub topic_concentration: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedLda {
    pub phi: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
    /// Term indices of every token, per document.
    pub tokens: Vec<Vec<usize>>,
}

impl PlantedLda {
    pub fn generate(spec: &PlantedLdaSpec, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi: Vec<Vec<f64>> = (0..spec.topics)
            .map(|_| dirichlet(&mut rng, spec.topic_concentration, spec.terms))
            .collect();
        let theta: Vec<Vec<f64>> = (0..spec.docs)
            .map(|_| dirichlet(&mut rng, spec.doc_concentration, spec.topics))
            .collect();
        let tokens = theta
            .iter()
            .map(|th| {
                (0..spec.tokens_per_doc)
                    .map(|_| {
                        let k = draw_index(&mut rng, th);
                        draw_index(&mut rng, &phi[k])
                    })
                    .collect()
            })
            .collect();
        PlantedLda { phi, theta, tokens }
    }

    pub fn matrix(&self) -> DocTermMatrix {
        let terms = self.phi.first().map_or(0, Vec::len);
        let rows = self
            .tokens
            .iter()
            .map(|doc| {
                let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
                for &t in doc {
                    *counts.entry(t).or_default() += 1;
                }
                counts.into_iter().collect()
            })
            .collect();
        let ids = (0..self.tokens.len()).map(|d| format!("d{d}")).collect();
        DocTermMatrix::from_rows(rows, ids, terms).expect("generated rows are valid")
    }
}

/// Total-variation distance `½ Σ |p − q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Greedy topic matching: repeatedly pairs the closest remaining (estimated,
/// true) rows by total variation. Returns `matching[estimated] = true` and
/// the mean matched distance.
pub fn greedy_tv_matching(estimated: &[Vec<f64>], truth: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut candidates: Vec<(f64, usize, usize)> = estimated
        .iter()
        .enumerate()
        .flat_map(|(i, e)| truth.iter().enumerate().map(move |(j, t)| (total_variation(e, t), i, j)))
        .collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut matching = vec![usize::MAX; estimated.len()];
    let mut used = BTreeSet::new();
    let mut total = 0.0;
    for (d, i, j) in candidates {
        if matching[i] == usize::MAX && !used.contains(&j) {
            matching[i] = j;
            used.insert(j);
            total += d;
        }
    }
    let matched = matching.iter().filter(|&&m| m != usize::MAX).count().max(1);
    (matching, total / matched as f64)
}

/// Knobs of the bundled synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub supply_topics: usize,
    pub words_per_topic: usize,
    pub background_words: usize,
    pub clusters: usize,
    pub cluster_size: (usize, usize),
    pub unclustered_docs: usize,
    pub abstract_len: (usize, usize),
    pub missing_abstract_rate: f64,
    pub demand_docs: usize,
    pub demand_themes: usize,
    pub demand_len: (usize, usize),
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            supply_topics: 20,
            words_per_topic: 90,
            background_words: 250,
            clusters: 150,
            cluster_size: (8, 30),
            unclustered_docs: 100,
            abstract_len: (45, 100),
            missing_abstract_rate: 0.04,
            demand_docs: 222,
            demand_themes: 12,
            demand_len: (30, 400),
        }
    }
}

pub struct SyntheticDataset {
    /// Every publication, including those without abstracts and those far
    /// from the seed theme.
    pub supply: Corpus,
    pub assignment: ClusterAssignment,
    pub demand: Corpus,
    pub grouping: CategoryGrouping,
}

const SEED_TERMS: [&str; 4] = ["obesity", "obese", "obesogenic", "obesity-related"];
const FILLER: [&str; 10] = ["the", "of", "and", "in", "with", "for", "to", "was", "were", "by"];
const CATEGORIES: [(&str, &str); 12] = [
    ("NUTR", "Medical research"),
    ("ENDO", "Medical research"),
    ("SURG", "Medical research"),
    ("CARD", "Medical research"),
    ("PEDI", "Medical research"),
    ("BIOC", "Biology"),
    ("GENE", "Biology"),
    ("IMMU", "Biology"),
    ("PUBH", "Social sciences & public health"),
    ("SOCS", "Social sciences & public health"),
    ("PSYC", "Social sciences & public health"),
    ("ENGI", "Engineering"),
];
// not in the grouping file, so profiled as unclassified
const UNMAPPED_CATEGORY: &str = "MISC";

struct WordFactory {
    used: BTreeSet<String>,
    stop: Stoplist,
}

impl WordFactory {
    const CONSONANTS: &'static [u8] = b"bcdfghklmnprstvz";
    const VOWELS: &'static [u8] = b"aeiou";

    fn fresh(&mut self, rng: &mut impl Rng, count: usize) -> Vec<String> {
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let syllables = rng.random_range(2..=4);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push(*Self::CONSONANTS.choose(rng).unwrap() as char);
                w.push(*Self::VOWELS.choose(rng).unwrap() as char);
            }
            if rng.random_bool(0.3) {
                w.push(*Self::CONSONANTS.choose(rng).unwrap() as char);
            }
            if !self.stop.contains(&w) && self.used.insert(w.clone()) {
                out.push(w);
            }
        }
        out
    }
}

/// Zipf-like weights `1 / (r + 1)^0.8`.
fn zipf(n: usize) -> Vec<f64> {
    (0..n).map(|r| 1.0 / ((r + 1) as f64).powf(0.8)).collect()
}

struct Lexicon {
    words: Vec<String>,
    weights: Vec<f64>,
}

impl Lexicon {
    fn new(words: Vec<String>) -> Self {
        let weights = zipf(words.len());
        Lexicon { words, weights }
    }

    fn draw<'a>(&'a self, rng: &mut impl Rng) -> &'a str {
        &self.words[draw_index(rng, &self.weights)]
    }
}

fn sentence(words: &[&str]) -> String {
    let mut text = words.join(" ");
    if let Some(first) = text.get(..1) {
        text = first.to_uppercase() + &text[1..];
    }
    text.push('.');
    text
}

/// Builds the bundled dataset. Identical seeds give identical corpora.
pub fn synthetic_dataset(spec: &DatasetSpec, seed: u64) -> Result<SyntheticDataset> {
    if spec.supply_topics == 0 || spec.clusters == 0 || spec.demand_themes == 0 {
        return Err(Error::invalid("dataset needs topics, clusters and themes"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut factory = WordFactory {
        used: BTreeSet::new(),
        stop: Stoplist::english(),
    };
    let k = spec.supply_topics;
    let topics: Vec<Lexicon> = (0..k)
        .map(|_| Lexicon::new(factory.fresh(&mut rng, spec.words_per_topic)))
        .collect();
    let background = Lexicon::new(factory.fresh(&mut rng, spec.background_words));

    let mut supply_docs = Vec::new();
    let mut pairs = Vec::new();
    let years: Vec<i32> = (2002..=2013).collect();
    // publication volume grows over the period
    let year_weights: Vec<f64> = (0..years.len()).map(|i| 1.0 + 0.15 * i as f64).collect();
    let rising = |topic: usize| topic.is_multiple_of(5);

    let make_doc = |rng: &mut ChaCha8Rng, id: String, dominant: usize, seed_rate: f64| {
        let mut mix = dirichlet(rng, 0.3, k);
        mix.iter_mut().for_each(|x| *x *= 0.2);
        mix[dominant] += 0.8;
        let draw_word = |rng: &mut ChaCha8Rng| -> String {
            let u: f64 = rng.random();
            if u < 0.18 {
                FILLER.choose(rng).unwrap().to_string()
            } else if u < 0.26 {
                background.draw(rng).to_string()
            } else {
                topics[draw_index(rng, &mix)].draw(rng).to_string()
            }
        };
        let title_len = rng.random_range(6..=12);
        let mut title: Vec<String> = (0..title_len).map(|_| draw_word(rng)).collect();
        let body_len = rng.random_range(spec.abstract_len.0..=spec.abstract_len.1);
        let mut body: Vec<String> = (0..body_len).map(|_| draw_word(rng)).collect();
        if rng.random_bool(seed_rate) {
            let term = SEED_TERMS.choose(rng).unwrap().to_string();
            if rng.random_bool(0.5) {
                let i = rng.random_range(0..title.len());
                title[i] = term;
            } else {
                let i = rng.random_range(0..body.len());
                body[i] = term;
            }
        }
        let abstract_text = if rng.random_bool(spec.missing_abstract_rate) {
            String::new()
        } else {
            let refs: Vec<&str> = body.iter().map(String::as_str).collect();
            refs.chunks(15).map(sentence).collect::<Vec<_>>().join(" ")
        };
        let title_refs: Vec<&str> = title.iter().map(String::as_str).collect();
        let mut doc = Document::new(id, sentence(&title_refs), abstract_text);
        let mut yw = year_weights.clone();
        if rising(dominant) {
            yw.iter_mut().enumerate().for_each(|(i, w)| *w *= (1 + i) as f64);
        }
        doc.year = Some(years[draw_index(rng, &yw)]);
        if !rng.random_bool(0.02) {
            let primary = if rng.random_bool(0.7) {
                dominant % CATEGORIES.len()
            } else {
                rng.random_range(0..CATEGORIES.len())
            };
            doc.categories.push(CATEGORIES[primary].0.to_string());
            if rng.random_bool(0.3) {
                let second = if rng.random_bool(0.1) {
                    UNMAPPED_CATEGORY
                } else {
                    CATEGORIES[rng.random_range(0..CATEGORIES.len())].0
                };
                if second != doc.categories[0] {
                    doc.categories.push(second.to_string());
                }
            }
        }
        doc
    };

    let mut serial = 0usize;
    for c in 0..spec.clusters {
        let cluster_id = format!("c{:03}", c + 1);
        let dominant = c % k;
        let class: f64 = rng.random();
        let seed_rate = if class < 0.45 {
            rng.random_range(0.3..0.9)
        } else if class < 0.7 {
            rng.random_range(0.1..0.3)
        } else {
            rng.random_range(0.0..0.06)
        };
        let size = rng.random_range(spec.cluster_size.0..=spec.cluster_size.1);
        for _ in 0..size {
            serial += 1;
            let id = format!("W{serial:05}");
            let mut doc = make_doc(&mut rng, id.clone(), dominant, seed_rate);
            doc.cluster_id = Some(cluster_id.clone());
            pairs.push((id, cluster_id.clone()));
            supply_docs.push(doc);
        }
    }
    for _ in 0..spec.unclustered_docs {
        serial += 1;
        let dominant = rng.random_range(0..k);
        supply_docs.push(make_doc(&mut rng, format!("W{serial:05}"), dominant, 0.5));
    }

    // Policy themes: each borrows most of its wording from one science topic
    // and adds its own policy vocabulary and a shared procedural register.
    let procedural = Lexicon::new(factory.fresh(&mut rng, 120));
    let themes: Vec<(usize, Lexicon)> = (0..spec.demand_themes)
        .map(|t| ((t * 3) % k, Lexicon::new(factory.fresh(&mut rng, 50))))
        .collect();
    let mut demand_docs = Vec::new();
    for q in 0..spec.demand_docs {
        let mut mix = dirichlet(&mut rng, 0.05, themes.len());
        let main = draw_index(&mut rng, &mix);
        mix.iter_mut().for_each(|x| *x *= 0.08);
        mix[main] += 0.92;
        let len = rng.random_range(spec.demand_len.0..=spec.demand_len.1);
        let mut body: Vec<String> = (0..len)
            .map(|_| {
                let u: f64 = rng.random();
                if u < 0.2 {
                    FILLER.choose(&mut rng).unwrap().to_string()
                } else if u < 0.24 {
                    procedural.draw(&mut rng).to_string()
                } else if u < 0.26 {
                    background.draw(&mut rng).to_string()
                } else {
                    let (science, own) = &themes[draw_index(&mut rng, &mix)];
                    if rng.random_bool(0.7) {
                        topics[*science].draw(&mut rng).to_string()
                    } else {
                        own.draw(&mut rng).to_string()
                    }
                }
            })
            .collect();
        let i = rng.random_range(0..body.len());
        body[i] = SEED_TERMS.choose(&mut rng).unwrap().to_string();
        let (_, own) = &themes[main];
        let topic_words: Vec<&str> = (0..3).map(|_| own.draw(&mut rng)).collect();
        let title = format!("Question on {}", topic_words.join(" "));
        let refs: Vec<&str> = body.iter().map(String::as_str).collect();
        let text = refs.chunks(18).map(sentence).collect::<Vec<_>>().join(" ");
        let mut doc = Document::new(format!("Q{:03}", q + 1), title, text);
        doc.year = Some(rng.random_range(2009..=2015));
        demand_docs.push(doc);
    }

    let grouping = CategoryGrouping::new(
        CATEGORIES
            .iter()
            .map(|(c, g)| (c.to_string(), g.to_string()))
            .collect(),
    );
    Ok(SyntheticDataset {
        supply: Corpus::new(
            "supply",
            supply_docs,
            format!("synthetic publication corpus, seed {seed}"),
        )?,
        assignment: ClusterAssignment::from_pairs(pairs)?,
        demand: Corpus::new(
            "demand",
            demand_docs,
            format!("synthetic question corpus, seed {seed}"),
        )?,
        grouping,
    })
}
