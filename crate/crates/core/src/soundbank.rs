//! Sound-effect database: tag extraction from descriptions and tag expansion
//! through synonym lists and embedding neighbours.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{EmbeddingTable, Pos, TriggerCategory};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scene {
    Forest,
    Mountain,
    River,
    Sea,
    Rain,
    Wind,
    Thunder,
    Park,
    Party,
    Farm,
    Plaza,
    Prairie,
    Restaurant,
    Pool,
    School,
    Campfire,
}

impl Scene {
    pub const ALL: [Scene; 16] = [
        Scene::Forest,
        Scene::Mountain,
        Scene::River,
        Scene::Sea,
        Scene::Rain,
        Scene::Wind,
        Scene::Thunder,
        Scene::Park,
        Scene::Party,
        Scene::Farm,
        Scene::Plaza,
        Scene::Prairie,
        Scene::Restaurant,
        Scene::Pool,
        Scene::School,
        Scene::Campfire,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scene::Forest => "forest",
            Scene::Mountain => "mountain",
            Scene::River => "river",
            Scene::Sea => "sea",
            Scene::Rain => "rain",
            Scene::Wind => "wind",
            Scene::Thunder => "thunder",
            Scene::Park => "park",
            Scene::Party => "party",
            Scene::Farm => "farm",
            Scene::Plaza => "plaza",
            Scene::Prairie => "prairie",
            Scene::Restaurant => "restaurant",
            Scene::Pool => "pool",
            Scene::School => "school",
            Scene::Campfire => "campfire",
        }
    }
}

impl FromStr for Scene {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scene::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scene `{s}`")))
    }
}

impl fmt::Display for Scene {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoundEffect {
    pub id: String,
    pub category: TriggerCategory,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<Scene>,
    pub audio_ref: String,
    pub description_tokens: Vec<(String, Pos)>,
}

impl SoundEffect {
    pub fn validate(&self) -> Result<()> {
        match (self.category, self.scene) {
            (TriggerCategory::Scene, None) => Err(Error::InvalidArgument(format!(
                "sound `{}`: scene category requires a scene name",
                self.id
            ))),
            (c, Some(_)) if c != TriggerCategory::Scene => Err(Error::InvalidArgument(format!(
                "sound `{}`: only scene sounds carry a scene name",
                self.id
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TagSource {
    Original,
    Synonym,
    Embedding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpandedTag {
    /// Case-folded words joined by single spaces.
    pub tag: String,
    pub source: TagSource,
    pub weight: f64,
}

/// A sound effect together with its expanded tags; one line of a tag database.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedSound {
    #[serde(flatten)]
    pub sound: SoundEffect,
    pub tags: Vec<ExpandedTag>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionConfig {
    pub k: usize,
    pub min_sim: f64,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        ExpansionConfig { k: 5, min_sim: 0.6 }
    }
}

/// Word -> synonym phrases.
pub type SynonymMap = BTreeMap<String, Vec<String>>;

pub fn normalize_tag(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Keeps verb and noun surfaces (proper nouns included), case-folded, first
/// occurrence order.
pub fn build_tags(description: &[(String, Pos)]) -> Vec<String> {
    let mut seen = HashSet::new();
    description
        .iter()
        .filter(|(_, pos)| matches!(pos, Pos::Verb | Pos::Noun | Pos::Propn))
        .map(|(surface, _)| normalize_tag(surface))
        .filter(|t| !t.is_empty() && seen.insert(t.clone()))
        .collect()
}

pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// Top-`k` words by cosine similarity to `word` (excluding itself) with
/// similarity at least `min_sim`. Ties go to the lexicographically smaller
/// word. Empty when `word` is not in the table.
pub fn nearest_neighbors(word: &str, table: &EmbeddingTable, k: usize, min_sim: f64) -> Result<Vec<(String, f64)>> {
    let Some(query) = table.get(word) else {
        return Ok(Vec::new());
    };
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut scored = Vec::new();
    for (other, vector) in table.iter() {
        if other == word {
            continue;
        }
        let sim = cosine_similarity(query, vector)?;
        if sim >= min_sim {
            scored.push((other.to_string(), sim));
        }
    }
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    scored.truncate(k);
    Ok(scored)
}

/// Expands original tags with synonyms and embedding neighbours.
///
/// Output is grouped by source (originals, then synonyms, then embedding
/// neighbours) and a tag is kept only at its first appearance, so an
/// original always beats a synonym and a synonym beats a neighbour.
pub fn expand_tags(
    tags: &[String],
    embeddings: &EmbeddingTable,
    synonyms: &SynonymMap,
    cfg: ExpansionConfig,
) -> Result<Vec<ExpandedTag>> {
    if !(0.0..=1.0).contains(&cfg.min_sim) {
        return Err(Error::InvalidArgument(format!(
            "min_sim {} outside [0, 1]",
            cfg.min_sim
        )));
    }
    let tags: Vec<String> = tags.iter().map(|t| normalize_tag(t)).collect();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut push = |tag: String, source, weight: f64| {
        if !tag.is_empty() && seen.insert(tag.clone()) {
            out.push(ExpandedTag { tag, source, weight });
        }
    };

    for tag in &tags {
        push(tag.clone(), TagSource::Original, 1.0);
    }
    for tag in &tags {
        for syn in synonyms.get(tag).into_iter().flatten() {
            push(normalize_tag(syn), TagSource::Synonym, 1.0);
        }
    }
    for tag in &tags {
        for (word, sim) in nearest_neighbors(tag, embeddings, cfg.k, cfg.min_sim)? {
            push(word, TagSource::Embedding, sim.clamp(0.0, 1.0));
        }
    }
    Ok(out)
}

/// Tags a whole bank.
pub fn build_database(
    sounds: &[SoundEffect],
    embeddings: &EmbeddingTable,
    synonyms: &SynonymMap,
    cfg: ExpansionConfig,
) -> Result<Vec<TaggedSound>> {
    sounds
        .iter()
        .map(|sound| {
            let originals = build_tags(&sound.description_tokens);
            Ok(TaggedSound {
                sound: sound.clone(),
                tags: expand_tags(&originals, embeddings, synonyms, cfg)?,
            })
        })
        .collect()
}

#[derive(Deserialize)]
struct BankRecord {
    #[serde(flatten)]
    sound: SoundEffect,
    #[serde(default)]
    tags: Option<Vec<ExpandedTag>>,
}

/// Reads a sound bank or tag database. Records without a `tags` field get
/// their original tags only.
pub fn read_bank<R: BufRead>(reader: R) -> Result<Vec<TaggedSound>> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line.map_err(|e| Error::parse(line_no, "record", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let de = &mut serde_json::Deserializer::from_str(&line);
        let rec: BankRecord = serde_path_to_error::deserialize(de)
            .map_err(|e| Error::parse(line_no, e.path().to_string(), e.into_inner()))?;
        rec.sound.validate().map_err(|e| Error::parse(line_no, "scene", e))?;
        if !ids.insert(rec.sound.id.clone()) {
            return Err(Error::parse(
                line_no,
                "id",
                format!("duplicate sound id `{}`", rec.sound.id),
            ));
        }
        let tags = match rec.tags {
            Some(tags) => tags,
            None => build_tags(&rec.sound.description_tokens)
                .into_iter()
                .map(|tag| ExpandedTag {
                    tag,
                    source: TagSource::Original,
                    weight: 1.0,
                })
                .collect(),
        };
        out.push(TaggedSound { sound: rec.sound, tags });
    }
    Ok(out)
}

pub fn load_bank(path: impl AsRef<Path>) -> Result<Vec<TaggedSound>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_bank(BufReader::new(file))
}

pub fn write_database<W: Write>(db: &[TaggedSound], mut out: W) -> std::io::Result<()> {
    for entry in db {
        serde_json::to_writer(&mut out, entry)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Synonym file: a JSON object mapping each word to a list of phrases.
pub fn load_synonyms(path: impl AsRef<Path>) -> Result<SynonymMap> {
    let path = path.as_ref();
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: SynonymMap = serde_json::from_str(&body).map_err(|e| Error::parse(e.line(), "synonyms", e))?;
    Ok(raw.into_iter().map(|(k, v)| (normalize_tag(&k), v)).collect())
}
