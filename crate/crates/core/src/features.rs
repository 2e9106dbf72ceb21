//! Fixed 64-dimensional context features for a (sentence, trigger) pair.
//!
//! | dims    | content                                              |
//! |---------|------------------------------------------------------|
//! | 0..7    | special-word counts, [`LexiconCategory`] order       |
//! | 7..24   | POS one-hot of the token before the trigger          |
//! | 24..41  | POS one-hot of the trigger head token                |
//! | 41..58  | POS one-hot of the token after the trigger           |
//! | 58..64  | dependency class of the trigger head token           |

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::ops::Index;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{LexiconCategory, LexiconSet, Pos, Sentence, Span};
use crate::error::{Error, Result};

pub const FEATURE_DIM: usize = 64;
pub const SPECIAL_OFFSET: usize = 0;
pub const POS_BEFORE_OFFSET: usize = 7;
pub const POS_HEAD_OFFSET: usize = 24;
pub const POS_AFTER_OFFSET: usize = 41;
pub const DEP_OFFSET: usize = 58;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_DIM]);

impl FeatureVector {
    pub fn zeros() -> Self {
        FeatureVector([0.0; FEATURE_DIM])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let arr: [f64; FEATURE_DIM] = values.try_into().map_err(|_| Error::DimensionMismatch {
            expected: FEATURE_DIM,
            found: values.len(),
        })?;
        Ok(FeatureVector(arr))
    }
}

impl Default for FeatureVector {
    fn default() -> Self {
        Self::zeros()
    }
}

impl Index<usize> for FeatureVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DepClass {
    Subject,
    Object,
    AttributeOfVerb,
    AttributeOfNoun,
    Adverbial,
    Other,
}

impl DepClass {
    pub const ALL: [DepClass; 6] = [
        DepClass::Subject,
        DepClass::Object,
        DepClass::AttributeOfVerb,
        DepClass::AttributeOfNoun,
        DepClass::Adverbial,
        DepClass::Other,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Target of a deprel mapping entry. `Attribute` is resolved to
/// [`DepClass::AttributeOfVerb`] or [`DepClass::AttributeOfNoun`] by the POS of
/// the token the trigger attaches to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeprelTarget {
    Subject,
    Object,
    Attribute,
    Adverbial,
    Other,
}

impl FromStr for DeprelTarget {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "Subject" => Ok(DeprelTarget::Subject),
            "Object" => Ok(DeprelTarget::Object),
            "Attribute" => Ok(DeprelTarget::Attribute),
            "Adverbial" => Ok(DeprelTarget::Adverbial),
            "Other" => Ok(DeprelTarget::Other),
            _ => Err(format!("unknown dependency class `{s}`")),
        }
    }
}

/// Dependency label -> coarse class. Labels are matched exactly first, then by
/// the part before a `:` subtype (`nsubj:pass` falls back to `nsubj`).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DeprelMap {
    entries: HashMap<String, DeprelTarget>,
}

impl DeprelMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, label: &str, target: DeprelTarget) {
        self.entries.insert(label.to_string(), target);
    }

    pub fn with(mut self, label: &str, target: DeprelTarget) -> Self {
        self.insert(label, target);
        self
    }

    pub fn get(&self, label: &str) -> Option<DeprelTarget> {
        self.entries.get(label).copied().or_else(|| {
            label
                .split_once(':')
                .and_then(|(base, _)| self.entries.get(base).copied())
        })
    }

    /// `label class` per line, whitespace separated, `#` comments.
    pub fn parse(body: &str) -> Result<Self> {
        let mut map = DeprelMap::new();
        for (n, line) in body.lines().enumerate() {
            let line = line.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let (Some(label), Some(class), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(Error::parse(n + 1, "deprel", "expected `label class`"));
            };
            let target = class.parse().map_err(|e| Error::parse(n + 1, "class", e))?;
            map.insert(label, target);
        }
        Ok(map)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&body)
    }
}

/// Counts lexicon hits per category. Each start position counts at most once
/// per category, whatever the number of entries matching there.
pub fn count_special_words(sentence: &Sentence, lexicons: &LexiconSet) -> [u32; LexiconCategory::COUNT] {
    let words = sentence.normalized_tokens();
    let mut counts = [0; LexiconCategory::COUNT];
    for category in LexiconCategory::ALL {
        let entries = lexicons.entries(category);
        counts[category.index()] = (0..words.len())
            .filter(|&start| {
                entries
                    .iter()
                    .any(|e| words.len() - start >= e.len() && words[start..start + e.len()] == e[..])
            })
            .count() as u32;
    }
    counts
}

/// The span token whose head lies outside the span (first such), else the
/// last token of the span.
pub fn trigger_head(sentence: &Sentence, span: Span) -> usize {
    (span.start..=span.end)
        .find(|&t| match sentence.tokens[t].head {
            None => true,
            Some(h) => !span.contains(h),
        })
        .unwrap_or(span.end)
}

pub fn pos_one_hot(sentence: &Sentence, span: Span) -> [f64; 3 * Pos::COUNT] {
    let mut out = [0.0; 3 * Pos::COUNT];
    let before = span.start.checked_sub(1);
    let head = Some(trigger_head(sentence, span));
    let after = Some(span.end + 1).filter(|&a| a < sentence.len());
    for (block, slot) in [before, head, after].into_iter().enumerate() {
        if let Some(t) = slot {
            out[block * Pos::COUNT + sentence.tokens[t].pos.index()] = 1.0;
        }
    }
    out
}

pub fn dep_class(sentence: &Sentence, span: Span, map: &DeprelMap) -> DepClass {
    let token = &sentence.tokens[trigger_head(sentence, span)];
    match map.get(&token.deprel) {
        Some(DeprelTarget::Subject) => DepClass::Subject,
        Some(DeprelTarget::Object) => DepClass::Object,
        Some(DeprelTarget::Adverbial) => DepClass::Adverbial,
        Some(DeprelTarget::Attribute) => match token.head.map(|h| sentence.tokens[h].pos) {
            Some(p) if p.is_verbal() => DepClass::AttributeOfVerb,
            Some(p) if p.is_nominal() => DepClass::AttributeOfNoun,
            _ => DepClass::Other,
        },
        Some(DeprelTarget::Other) | None => DepClass::Other,
    }
}

pub fn dep_one_hot(sentence: &Sentence, span: Span, map: &DeprelMap) -> [f64; DepClass::ALL.len()] {
    let mut out = [0.0; DepClass::ALL.len()];
    out[dep_class(sentence, span, map).index()] = 1.0;
    out
}

#[derive(Debug, Clone, Default)]
pub struct FeatureExtractor {
    pub lexicons: LexiconSet,
    pub deprels: DeprelMap,
}

impl FeatureExtractor {
    pub fn new(lexicons: LexiconSet, deprels: DeprelMap) -> Self {
        FeatureExtractor { lexicons, deprels }
    }

    pub fn extract(&self, sentence: &Sentence, span: Span) -> Result<FeatureVector> {
        if !sentence.contains_span(span) {
            return Err(Error::InvalidArgument(format!(
                "span {}..={} outside sentence of {} tokens",
                span.start,
                span.end,
                sentence.len()
            )));
        }
        let mut v = FeatureVector::zeros();
        for (k, c) in count_special_words(sentence, &self.lexicons).into_iter().enumerate() {
            v.0[SPECIAL_OFFSET + k] = c as f64;
        }
        v.0[POS_BEFORE_OFFSET..DEP_OFFSET].copy_from_slice(&pos_one_hot(sentence, span));
        v.0[DEP_OFFSET..].copy_from_slice(&dep_one_hot(sentence, span, &self.deprels));
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureGroup {
    SpecialWords,
    ActionWords,
    NowWords,
    #[serde(rename = "POS")]
    Pos,
    Syntactic,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 5] = [
        FeatureGroup::SpecialWords,
        FeatureGroup::ActionWords,
        FeatureGroup::NowWords,
        FeatureGroup::Pos,
        FeatureGroup::Syntactic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureGroup::SpecialWords => "SpecialWords",
            FeatureGroup::ActionWords => "ActionWords",
            FeatureGroup::NowWords => "NowWords",
            FeatureGroup::Pos => "POS",
            FeatureGroup::Syntactic => "Syntactic",
        }
    }

    pub fn dims(self) -> std::ops::Range<usize> {
        match self {
            FeatureGroup::SpecialWords => SPECIAL_OFFSET..POS_BEFORE_OFFSET,
            FeatureGroup::ActionWords => {
                let d = SPECIAL_OFFSET + LexiconCategory::Action.index();
                d..d + 1
            }
            FeatureGroup::NowWords => {
                let d = SPECIAL_OFFSET + LexiconCategory::Now.index();
                d..d + 1
            }
            FeatureGroup::Pos => POS_BEFORE_OFFSET..DEP_OFFSET,
            FeatureGroup::Syntactic => DEP_OFFSET..FEATURE_DIM,
        }
    }
}

impl FromStr for FeatureGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureGroup::ALL
            .iter()
            .copied()
            .find(|g| g.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown feature group `{s}`")))
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Set of dimensions forced to zero.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct FeatureMask(BTreeSet<usize>);

impl FeatureMask {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn group(group: FeatureGroup) -> Self {
        FeatureMask(group.dims().collect())
    }

    pub fn from_dims(dims: impl IntoIterator<Item = usize>) -> Result<Self> {
        let set: BTreeSet<usize> = dims.into_iter().collect();
        if let Some(&bad) = set.iter().find(|&&d| d >= FEATURE_DIM) {
            return Err(Error::InvalidArgument(format!("mask dimension {bad} out of range")));
        }
        Ok(FeatureMask(set))
    }

    pub fn union(mut self, other: &FeatureMask) -> Self {
        self.0.extend(other.0.iter().copied());
        self
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, dim: usize) -> bool {
        self.0.contains(&dim)
    }

    pub fn dims(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    /// Zeroes the masked dimensions of `x` that exist.
    pub fn zero(&self, x: &mut [f64]) {
        for &d in self.0.range(..x.len()) {
            x[d] = 0.0;
        }
    }

    /// `None` (empty) or a `+`-joined list of group names, e.g. `POS+Syntactic`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec.eq_ignore_ascii_case("none") || spec.is_empty() {
            return Ok(Self::none());
        }
        spec.split('+')
            .map(|g| g.trim().parse::<FeatureGroup>().map(FeatureMask::group))
            .try_fold(Self::none(), |acc, m| Ok(acc.union(&m?)))
    }
}

impl TryFrom<Vec<usize>> for FeatureMask {
    type Error = Error;

    fn try_from(dims: Vec<usize>) -> Result<Self> {
        FeatureMask::from_dims(dims)
    }
}

impl From<FeatureMask> for Vec<usize> {
    fn from(m: FeatureMask) -> Self {
        m.0.into_iter().collect()
    }
}

pub fn apply_mask(v: &FeatureVector, mask: &FeatureMask) -> FeatureVector {
    let mut out = *v;
    mask.zero(&mut out.0);
    out
}
