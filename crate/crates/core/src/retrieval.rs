//! Candidate-trigger detection by exact tag matching, with BM25 ranking of
//! the sound effects that own a matched tag.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{Sentence, Span, TriggerCategory};
use crate::error::{Error, Result};
use crate::soundbank::{Scene, TaggedSound};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalConfig {
    pub k1: f64,
    pub b: f64,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig { k1: 1.2, b: 0.75 }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k1.is_nan() || self.k1 < 0.0 || !(0.0..=1.0).contains(&self.b) {
            return Err(Error::InvalidArgument(format!(
                "BM25 parameters out of range: k1={} b={}",
                self.k1, self.b
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: usize,
    pub tf: u32,
}

/// Term -> postings over a set of documents identified by string ids.
#[derive(Debug, Clone, Default)]
pub struct InvertedIndex {
    postings: HashMap<String, Vec<Posting>>,
    doc_ids: Vec<String>,
    doc_pos: HashMap<String, usize>,
    doc_len: Vec<u32>,
    avg_doc_len: f64,
}

impl InvertedIndex {
    /// Indexes `(id, terms)` documents; term frequency counts repeats.
    pub fn from_documents<I, S, T>(docs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<T>)>,
        S: Into<String>,
        T: AsRef<str>,
    {
        let mut index = InvertedIndex::default();
        for (id, terms) in docs {
            let id = id.into();
            let doc = index.doc_ids.len();
            if index.doc_pos.insert(id.clone(), doc).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate document id `{id}`")));
            }
            index.doc_ids.push(id);
            let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
            for t in &terms {
                *tf.entry(t.as_ref()).or_default() += 1;
            }
            index.doc_len.push(terms.len() as u32);
            for (term, count) in tf {
                index
                    .postings
                    .entry(term.to_string())
                    .or_default()
                    .push(Posting { doc, tf: count });
            }
        }
        if index.doc_ids.is_empty() {
            return Err(Error::EmptySoundBank);
        }
        let total: u64 = index.doc_len.iter().map(|&l| l as u64).sum();
        index.avg_doc_len = total as f64 / index.doc_ids.len() as f64;
        Ok(index)
    }

    pub fn n_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avg_doc_len(&self) -> f64 {
        self.avg_doc_len
    }

    pub fn doc_len(&self, id: &str) -> Option<u32> {
        self.doc_pos.get(id).map(|&d| self.doc_len[d])
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn doc_id(&self, doc: usize) -> &str {
        &self.doc_ids[doc]
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings(term).len()
    }

    fn term_freq(&self, term: &str, doc: usize) -> u32 {
        self.postings(term).iter().find(|p| p.doc == doc).map_or(0, |p| p.tf)
    }

    /// `ln((N - n_t + 0.5) / (n_t + 0.5) + 1)`
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.n_docs() as f64;
        let nt = self.doc_freq(term) as f64;
        ((n - nt + 0.5) / (nt + 0.5) + 1.0).ln()
    }
}

/// One document per sound; its terms are the sound's tags.
pub fn build_index(bank: &[TaggedSound]) -> Result<InvertedIndex> {
    InvertedIndex::from_documents(bank.iter().map(|entry| {
        let terms: Vec<&str> = entry.tags.iter().map(|t| t.tag.as_str()).collect();
        (entry.sound.id.clone(), terms)
    }))
}

pub fn bm25_score<T: AsRef<str>>(
    query: &[T],
    doc_id: &str,
    index: &InvertedIndex,
    cfg: RetrievalConfig,
) -> Result<f64> {
    let &doc = index
        .doc_pos
        .get(doc_id)
        .ok_or_else(|| Error::UnknownSound(doc_id.to_string()))?;
    let len_norm = if index.avg_doc_len > 0.0 {
        index.doc_len[doc] as f64 / index.avg_doc_len
    } else {
        0.0
    };
    let mut score = 0.0;
    for term in query {
        let term = term.as_ref();
        let tf = index.term_freq(term, doc);
        if tf == 0 {
            continue;
        }
        let tf = tf as f64;
        score += index.idf(term) * tf * (cfg.k1 + 1.0) / (tf + cfg.k1 * (1.0 - cfg.b + cfg.b * len_norm));
    }
    Ok(score)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateTrigger {
    pub story_id: String,
    pub sentence_index: usize,
    pub span: Span,
    pub matched_tag: String,
    pub category: TriggerCategory,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<Scene>,
    pub sound_id: String,
    pub retrieval_score: f64,
}

/// Tag matcher plus BM25 index over a tag database.
#[derive(Debug, Clone)]
pub struct Retriever {
    index: InvertedIndex,
    cfg: RetrievalConfig,
    /// tag words -> owning sounds (positions in `sounds`), sorted by id
    owners: HashMap<Vec<String>, Vec<usize>>,
    max_tag_len: usize,
    sounds: Vec<TaggedSound>,
}

impl Retriever {
    pub fn new(bank: Vec<TaggedSound>, cfg: RetrievalConfig) -> Result<Self> {
        cfg.validate()?;
        let index = build_index(&bank)?;
        let mut owners: HashMap<Vec<String>, Vec<usize>> = HashMap::new();
        for (n, entry) in bank.iter().enumerate() {
            for tag in &entry.tags {
                let words: Vec<String> = tag.tag.split_whitespace().map(str::to_lowercase).collect();
                if words.is_empty() {
                    continue;
                }
                let list = owners.entry(words).or_default();
                if !list.contains(&n) {
                    list.push(n);
                }
            }
        }
        for list in owners.values_mut() {
            list.sort_by(|&a, &b| bank[a].sound.id.cmp(&bank[b].sound.id));
        }
        let max_tag_len = owners.keys().map(Vec::len).max().unwrap_or(0);
        Ok(Retriever {
            index,
            cfg,
            owners,
            max_tag_len,
            sounds: bank,
        })
    }

    pub fn index(&self) -> &InvertedIndex {
        &self.index
    }

    pub fn config(&self) -> RetrievalConfig {
        self.cfg
    }

    pub fn sound(&self, id: &str) -> Option<&TaggedSound> {
        self.sounds.iter().find(|s| s.sound.id == id)
    }

    /// Non-overlapping tag matches, longest first, then leftmost.
    pub fn match_spans(&self, sentence: &Sentence) -> Vec<(Span, Vec<String>)> {
        let words = sentence.normalized_tokens();
        let mut found = Vec::new();
        for start in 0..words.len() {
            let longest = self.max_tag_len.min(words.len() - start);
            for len in 1..=longest {
                let key = &words[start..start + len];
                if self.owners.contains_key(key) {
                    found.push((Span::new(start, start + len - 1), key.to_vec()));
                }
            }
        }
        found.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.0.start.cmp(&b.0.start)));
        let mut accepted: Vec<(Span, Vec<String>)> = Vec::new();
        for (span, key) in found {
            if accepted.iter().all(|(s, _)| !s.overlaps(&span)) {
                accepted.push((span, key));
            }
        }
        accepted.sort_by_key(|(s, _)| s.start);
        accepted
    }

    /// Highest-scoring owner of `tag` (ties to the smallest sound id).
    pub fn best_sound(&self, tag: &[String]) -> Result<Option<(&TaggedSound, f64)>> {
        let Some(owners) = self.owners.get(tag) else {
            return Ok(None);
        };
        let term = tag.join(" ");
        let mut best: Option<(&TaggedSound, f64)> = None;
        // owners are sorted by id, so a strict comparison keeps the smallest id on ties
        for &n in owners {
            let sound = &self.sounds[n];
            let score = bm25_score(&[term.as_str()], &sound.sound.id, &self.index, self.cfg)?;
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((sound, score));
            }
        }
        Ok(best)
    }

    pub fn detect_triggers(&self, sentence: &Sentence) -> Result<Vec<CandidateTrigger>> {
        let mut out = Vec::new();
        for (span, key) in self.match_spans(sentence) {
            let Some((sound, score)) = self.best_sound(&key)? else {
                continue;
            };
            out.push(CandidateTrigger {
                story_id: sentence.story_id.clone(),
                sentence_index: sentence.index,
                span,
                matched_tag: key.join(" "),
                category: sound.sound.category,
                scene: sound.sound.scene,
                sound_id: sound.sound.id.clone(),
                retrieval_score: score,
            });
        }
        Ok(out)
    }
}
