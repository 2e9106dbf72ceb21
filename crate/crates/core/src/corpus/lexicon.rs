use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Special-word categories, in feature-vector order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LexiconCategory {
    Subjunctive,
    Action,
    Weather,
    Negative,
    Past,
    Now,
    Future,
}

impl LexiconCategory {
    pub const COUNT: usize = 7;

    pub const ALL: [LexiconCategory; LexiconCategory::COUNT] = [
        LexiconCategory::Subjunctive,
        LexiconCategory::Action,
        LexiconCategory::Weather,
        LexiconCategory::Negative,
        LexiconCategory::Past,
        LexiconCategory::Now,
        LexiconCategory::Future,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            LexiconCategory::Subjunctive => "subjunctive",
            LexiconCategory::Action => "action",
            LexiconCategory::Weather => "weather",
            LexiconCategory::Negative => "negative",
            LexiconCategory::Past => "past",
            LexiconCategory::Now => "now",
            LexiconCategory::Future => "future",
        }
    }
}

impl FromStr for LexiconCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LexiconCategory::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown lexicon category `{s}`")))
    }
}

impl fmt::Display for LexiconCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Seven word/phrase lists. Entries are case-folded token sequences.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LexiconSet {
    entries: [Vec<Vec<String>>; LexiconCategory::COUNT],
}

impl LexiconSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a phrase; duplicates and blank phrases are ignored.
    pub fn insert(&mut self, category: LexiconCategory, phrase: &str) {
        let entry: Vec<String> = phrase.split_whitespace().map(str::to_lowercase).collect();
        if entry.is_empty() {
            return;
        }
        let list = &mut self.entries[category.index()];
        if !list.contains(&entry) {
            list.push(entry);
        }
    }

    pub fn with(mut self, category: LexiconCategory, phrases: &[&str]) -> Self {
        for p in phrases {
            self.insert(category, p);
        }
        self
    }

    pub fn entries(&self, category: LexiconCategory) -> &[Vec<String>] {
        &self.entries[category.index()]
    }

    /// Parses one lexicon file body: one entry per line, `#` starts a comment.
    pub fn parse_into(&mut self, category: LexiconCategory, body: &str) {
        for line in body.lines() {
            let line = match line.find('#') {
                Some(at) => &line[..at],
                None => line,
            };
            self.insert(category, line);
        }
    }

    /// Loads `<category>.txt` files from `dir`. Missing categories stay empty;
    /// a `.txt` file whose stem is not a category is an error.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut set = LexiconSet::new();
        let mut paths: Vec<_> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "txt"))
            .collect();
        paths.sort();
        for path in paths {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            let category: LexiconCategory = stem.parse()?;
            let body = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            set.parse_into(category, &body);
        }
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_skips_comments_and_duplicates() {
        let mut set = LexiconSet::new();
        set.parse_into(
            LexiconCategory::Subjunctive,
            "# wishes and plans\nplan\nPlans\n\nplan   # again\nwant to\n",
        );
        let got = set.entries(LexiconCategory::Subjunctive);
        assert_eq!(
            got,
            [
                vec!["plan".to_string()],
                vec!["plans".into()],
                vec!["want".into(), "to".into()]
            ]
        );
        assert!(set.entries(LexiconCategory::Action).is_empty());
    }

    #[test]
    fn load_dir_maps_file_stems() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("action.txt"), "knock\ncry\n").unwrap();
        fs::write(dir.path().join("now.txt"), "now\n").unwrap();
        fs::write(dir.path().join("README.md"), "ignored").unwrap();
        let set = LexiconSet::load_dir(dir.path()).unwrap();
        assert_eq!(set.entries(LexiconCategory::Action).len(), 2);
        assert_eq!(set.entries(LexiconCategory::Now).len(), 1);

        fs::write(dir.path().join("colour.txt"), "red\n").unwrap();
        assert!(LexiconSet::load_dir(dir.path()).is_err());
    }

    #[test]
    fn category_order_matches_feature_layout() {
        let names: Vec<_> = LexiconCategory::ALL.iter().map(|c| c.name()).collect();
        assert_eq!(
            names,
            ["subjunctive", "action", "weather", "negative", "past", "now", "future"]
        );
    }
}
