//! Annotated story ingestion.
//!
//! A corpus file holds one JSON object per line, one sentence per record:
//!
//! ```text
//! {"story_id":"s1","index":0,
//!  "tokens":[{"surface":"A","pos":"DET","head":1,"deprel":"det"}, ...],
//!  "triggers":[{"i":1,"j":1,"category":"scene","confidence":2,"label":true}]}
//! ```
//!
//! Token heads are 0-based indices into the sentence; `null` marks the root.
//! Trigger spans `i..=j` are 0-based and inclusive.

mod embedding;
mod lexicon;

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use embedding::EmbeddingTable;
pub use lexicon::{LexiconCategory, LexiconSet};

/// Universal POS inventory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Pos {
    Adj,
    Adp,
    Adv,
    Aux,
    Cconj,
    Det,
    Intj,
    Noun,
    Num,
    Part,
    Pron,
    Propn,
    Punct,
    Sconj,
    Sym,
    Verb,
    X,
}

impl Pos {
    pub const COUNT: usize = 17;

    pub const ALL: [Pos; Pos::COUNT] = [
        Pos::Adj,
        Pos::Adp,
        Pos::Adv,
        Pos::Aux,
        Pos::Cconj,
        Pos::Det,
        Pos::Intj,
        Pos::Noun,
        Pos::Num,
        Pos::Part,
        Pos::Pron,
        Pos::Propn,
        Pos::Punct,
        Pos::Sconj,
        Pos::Sym,
        Pos::Verb,
        Pos::X,
    ];

    /// Position of this tag within [`Pos::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Pos::Adj => "ADJ",
            Pos::Adp => "ADP",
            Pos::Adv => "ADV",
            Pos::Aux => "AUX",
            Pos::Cconj => "CCONJ",
            Pos::Det => "DET",
            Pos::Intj => "INTJ",
            Pos::Noun => "NOUN",
            Pos::Num => "NUM",
            Pos::Part => "PART",
            Pos::Pron => "PRON",
            Pos::Propn => "PROPN",
            Pos::Punct => "PUNCT",
            Pos::Sconj => "SCONJ",
            Pos::Sym => "SYM",
            Pos::Verb => "VERB",
            Pos::X => "X",
        }
    }

    pub fn is_nominal(self) -> bool {
        matches!(self, Pos::Noun | Pos::Propn | Pos::Pron)
    }

    pub fn is_verbal(self) -> bool {
        matches!(self, Pos::Verb | Pos::Aux)
    }
}

impl FromStr for Pos {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        Pos::ALL.iter().copied().find(|p| p.as_str() == s).ok_or(())
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Token {
    pub surface: String,
    pub pos: Pos,
    /// Index of the dependency head, `None` for the root.
    pub head: Option<usize>,
    pub deprel: String,
}

impl Token {
    pub fn new(surface: impl Into<String>, pos: Pos, head: Option<usize>, deprel: impl Into<String>) -> Self {
        Token {
            surface: surface.into(),
            pos,
            head,
            deprel: deprel.into(),
        }
    }

    /// Case-folded surface used for all lexical matching.
    pub fn normalized(&self) -> String {
        self.surface.to_lowercase()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TriggerCategory {
    Action,
    Scene,
    Character,
    Onomatopoeia,
}

/// Inclusive token span `start..=end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Span { start, end }
    }

    pub fn single(index: usize) -> Self {
        Span {
            start: index,
            end: index,
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, index: usize) -> bool {
        (self.start..=self.end).contains(&index)
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnotatedTrigger {
    pub i: usize,
    pub j: usize,
    pub category: TriggerCategory,
    pub confidence: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<bool>,
}

impl AnnotatedTrigger {
    pub fn span(&self) -> Span {
        Span::new(self.i, self.j)
    }

    pub fn is_confident(&self) -> bool {
        self.confidence > 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sentence {
    pub story_id: String,
    pub index: usize,
    pub tokens: Vec<Token>,
    pub triggers: Vec<AnnotatedTrigger>,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn normalized_tokens(&self) -> Vec<String> {
        self.tokens.iter().map(Token::normalized).collect()
    }

    /// Surface forms joined by single spaces.
    pub fn text(&self) -> String {
        let mut out = String::new();
        for (n, tok) in self.tokens.iter().enumerate() {
            if n > 0 {
                out.push(' ');
            }
            out.push_str(&tok.surface);
        }
        out
    }

    /// Byte range `[start, end)` of `span` within [`Sentence::text`].
    pub fn byte_range(&self, span: Span) -> (usize, usize) {
        let mut offset = 0;
        let mut start = 0;
        for (n, tok) in self.tokens.iter().enumerate() {
            if n == span.start {
                start = offset;
            }
            offset += tok.surface.len();
            if n == span.end {
                return (start, offset);
            }
            offset += 1;
        }
        (start, offset.saturating_sub(1))
    }

    pub fn contains_span(&self, span: Span) -> bool {
        span.start <= span.end && span.end < self.tokens.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Story {
    pub id: String,
    pub sentences: Vec<Sentence>,
}

impl Story {
    pub fn triggers(&self) -> impl Iterator<Item = &AnnotatedTrigger> {
        self.sentences.iter().flat_map(|s| s.triggers.iter())
    }
}

/// Sentences grouped by story, in order of first appearance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StoryCollection {
    pub stories: Vec<Story>,
}

impl StoryCollection {
    pub fn from_sentences(sentences: impl IntoIterator<Item = Sentence>) -> Self {
        let mut stories: Vec<Story> = Vec::new();
        let mut position = std::collections::HashMap::new();
        for sentence in sentences {
            let slot = *position.entry(sentence.story_id.clone()).or_insert_with(|| {
                stories.push(Story {
                    id: sentence.story_id.clone(),
                    sentences: Vec::new(),
                });
                stories.len() - 1
            });
            stories[slot].sentences.push(sentence);
        }
        StoryCollection { stories }
    }

    pub fn is_empty(&self) -> bool {
        self.stories.is_empty()
    }

    pub fn sentences(&self) -> impl Iterator<Item = &Sentence> {
        self.stories.iter().flat_map(|s| s.sentences.iter())
    }

    pub fn sentence_count(&self) -> usize {
        self.stories.iter().map(|s| s.sentences.len()).sum()
    }

    /// Writes the collection back in the line-delimited corpus format.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for sentence in self.sentences() {
            serde_json::to_writer(&mut out, sentence)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawToken {
    surface: String,
    pos: String,
    head: Option<i64>,
    deprel: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrigger {
    i: usize,
    j: usize,
    category: TriggerCategory,
    confidence: u8,
    #[serde(default)]
    label: Option<bool>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSentence {
    story_id: String,
    index: usize,
    tokens: Vec<RawToken>,
    #[serde(default)]
    triggers: Vec<RawTrigger>,
}

/// Parses one corpus record; `line` is 1-based and only used for errors.
pub fn parse_sentence(record: &str, line: usize) -> Result<Sentence> {
    let de = &mut serde_json::Deserializer::from_str(record);
    let raw: RawSentence = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        Error::parse(line, field, e.into_inner())
    })?;

    if raw.tokens.is_empty() {
        return Err(Error::parse(line, "tokens", "sentence has no tokens"));
    }
    let len = raw.tokens.len();
    let mut tokens = Vec::with_capacity(len);
    for (n, t) in raw.tokens.into_iter().enumerate() {
        let pos = t.pos.parse::<Pos>().map_err(|_| Error::UnknownPos {
            line,
            tag: t.pos.clone(),
        })?;
        let head = match t.head {
            None => None,
            Some(h) if h >= 0 && (h as usize) < len => Some(h as usize),
            Some(h) => {
                return Err(Error::InvalidHead {
                    line,
                    token: n,
                    head: h,
                    len,
                })
            }
        };
        tokens.push(Token {
            surface: t.surface,
            pos,
            head,
            deprel: t.deprel,
        });
    }

    let mut triggers = Vec::with_capacity(raw.triggers.len());
    for (n, t) in raw.triggers.into_iter().enumerate() {
        if t.i > t.j || t.j >= len {
            return Err(Error::parse(
                line,
                format!("triggers[{n}]"),
                format!("span {}..={} outside sentence of {len} tokens", t.i, t.j),
            ));
        }
        if t.confidence > 2 {
            return Err(Error::parse(
                line,
                format!("triggers[{n}].confidence"),
                format!("{} not in {{0, 1, 2}}", t.confidence),
            ));
        }
        triggers.push(AnnotatedTrigger {
            i: t.i,
            j: t.j,
            category: t.category,
            confidence: t.confidence,
            label: t.label,
        });
    }

    Ok(Sentence {
        story_id: raw.story_id,
        index: raw.index,
        tokens,
        triggers,
    })
}

pub fn read_stories<R: BufRead>(reader: R) -> Result<StoryCollection> {
    let mut sentences = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::parse(n + 1, "record", e))?;
        if line.trim().is_empty() {
            continue;
        }
        sentences.push(parse_sentence(&line, n + 1)?);
    }
    Ok(StoryCollection::from_sentences(sentences))
}

pub fn load_stories(path: impl AsRef<Path>) -> Result<StoryCollection> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_stories(BufReader::new(file))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationStats {
    pub n_stories: usize,
    pub n_triggers: usize,
    pub n_confident: usize,
    pub mean_triggers: f64,
    pub mean_confident: f64,
    pub std_triggers: f64,
    pub std_confident: f64,
}

impl AnnotationStats {
    /// Builds statistics from per-story `(triggers, confident)` counts.
    pub fn from_counts(per_story: &[(usize, usize)]) -> Result<Self> {
        if per_story.is_empty() {
            return Err(Error::NoStories);
        }
        let triggers: Vec<usize> = per_story.iter().map(|c| c.0).collect();
        let confident: Vec<usize> = per_story.iter().map(|c| c.1).collect();
        let n_triggers = triggers.iter().sum();
        let n_confident = confident.iter().sum();
        let n = per_story.len() as f64;
        Ok(AnnotationStats {
            n_stories: per_story.len(),
            n_triggers,
            n_confident,
            mean_triggers: n_triggers as f64 / n,
            mean_confident: n_confident as f64 / n,
            std_triggers: sample_std(&triggers),
            std_confident: sample_std(&confident),
        })
    }
}

/// Sample standard deviation (n - 1 denominator); 0 for a single value.
pub fn sample_std(values: &[usize]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<usize>() as f64 / n;
    let ss: f64 = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum();
    (ss / (n - 1.0)).sqrt()
}

pub fn annotation_stats(collection: &StoryCollection) -> Result<AnnotationStats> {
    let counts: Vec<(usize, usize)> = collection
        .stories
        .iter()
        .map(|story| {
            let total = story.triggers().count();
            let confident = story.triggers().filter(|t| t.is_confident()).count();
            (total, confident)
        })
        .collect();
    AnnotationStats::from_counts(&counts)
}
