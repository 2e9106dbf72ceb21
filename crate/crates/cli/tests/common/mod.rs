#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

/// (surface, POS, head, deprel); `N` is replaced by a character name.
type Tok = (&'static str, &'static str, Option<usize>, &'static str);

struct Template {
    tokens: &'static [Tok],
    /// (i, j, category, label)
    trigger: Option<(usize, usize, &'static str, bool)>,
}

const TEMPLATES: &[Template] = &[
    Template {
        tokens: &[
            ("A", "DET", Some(1), "det"),
            ("thunder", "NOUN", Some(3), "nsubj"),
            ("suddenly", "ADV", Some(3), "advmod"),
            ("booms", "VERB", None, "root"),
            ("over", "ADP", Some(6), "case"),
            ("the", "DET", Some(6), "det"),
            ("heads", "NOUN", Some(3), "obl"),
            (".", "PUNCT", Some(3), "punct"),
        ],
        trigger: Some((1, 1, "scene", true)),
    },
    Template {
        tokens: &[
            ("N", "PROPN", Some(1), "nsubj"),
            ("runs", "VERB", None, "root"),
            ("into", "ADP", Some(4), "case"),
            ("the", "DET", Some(4), "det"),
            ("forest", "NOUN", Some(1), "obl"),
            (".", "PUNCT", Some(1), "punct"),
        ],
        trigger: Some((4, 4, "scene", true)),
    },
    Template {
        tokens: &[
            ("The", "DET", Some(1), "det"),
            ("rain", "NOUN", Some(2), "nsubj"),
            ("falls", "VERB", None, "root"),
            ("on", "ADP", Some(5), "case"),
            ("the", "DET", Some(5), "det"),
            ("roof", "NOUN", Some(2), "obl"),
            ("now", "ADV", Some(2), "advmod"),
            (".", "PUNCT", Some(2), "punct"),
        ],
        trigger: Some((1, 1, "scene", true)),
    },
    Template {
        tokens: &[
            ("N", "PROPN", Some(1), "nsubj"),
            ("knocked", "VERB", None, "root"),
            ("on", "ADP", Some(4), "case"),
            ("the", "DET", Some(4), "det"),
            ("door", "NOUN", Some(1), "obl"),
            ("twice", "ADV", Some(1), "advmod"),
            (".", "PUNCT", Some(1), "punct"),
        ],
        trigger: Some((4, 4, "action", true)),
    },
    Template {
        tokens: &[
            ("The", "DET", Some(3), "det"),
            ("new", "ADJ", Some(2), "amod"),
            ("year", "NOUN", Some(3), "compound"),
            ("party", "NOUN", Some(4), "nsubj"),
            ("starts", "VERB", None, "root"),
            ("with", "ADP", Some(7), "case"),
            ("a", "DET", Some(7), "det"),
            ("boom", "NOUN", Some(4), "obl"),
            (".", "PUNCT", Some(4), "punct"),
        ],
        trigger: Some((1, 3, "scene", true)),
    },
    Template {
        tokens: &[
            ("N", "PROPN", Some(1), "nsubj"),
            ("plans", "VERB", None, "root"),
            ("to", "PART", Some(3), "mark"),
            ("go", "VERB", Some(1), "xcomp"),
            ("on", "ADP", Some(6), "case"),
            ("a", "DET", Some(6), "det"),
            ("picnic", "NOUN", Some(3), "obl"),
            ("in", "ADP", Some(9), "case"),
            ("the", "DET", Some(9), "det"),
            ("forest", "NOUN", Some(3), "obl"),
            (".", "PUNCT", Some(1), "punct"),
        ],
        trigger: Some((9, 9, "scene", false)),
    },
    Template {
        tokens: &[
            ("N", "PROPN", Some(1), "nsubj"),
            ("said", "VERB", None, "root"),
            (":", "PUNCT", Some(1), "punct"),
            ("\"", "PUNCT", Some(7), "punct"),
            ("the", "DET", Some(5), "det"),
            ("thunder", "NOUN", Some(7), "nsubj"),
            ("will", "AUX", Some(7), "aux"),
            ("come", "VERB", Some(1), "ccomp"),
            ("tomorrow", "NOUN", Some(7), "obl"),
            ("\"", "PUNCT", Some(7), "punct"),
            (".", "PUNCT", Some(1), "punct"),
        ],
        trigger: Some((5, 5, "scene", false)),
    },
    Template {
        tokens: &[
            ("N", "PROPN", Some(1), "nsubj"),
            ("shouted", "VERB", None, "root"),
            (":", "PUNCT", Some(1), "punct"),
            ("a", "DET", Some(4), "det"),
            ("thunder", "NOUN", Some(6), "nsubj"),
            ("suddenly", "ADV", Some(6), "advmod"),
            ("booms", "VERB", Some(1), "ccomp"),
            ("!", "PUNCT", Some(1), "punct"),
        ],
        trigger: Some((4, 4, "scene", false)),
    },
    Template {
        tokens: &[
            ("N", "PROPN", Some(1), "nsubj"),
            ("roared", "VERB", None, "root"),
            ("like", "ADP", Some(4), "case"),
            ("a", "DET", Some(4), "det"),
            ("thunder", "NOUN", Some(1), "obl"),
            (".", "PUNCT", Some(1), "punct"),
        ],
        trigger: Some((4, 4, "scene", false)),
    },
    Template {
        tokens: &[
            ("N", "PROPN", Some(3), "nsubj"),
            ("does", "AUX", Some(3), "aux"),
            ("not", "PART", Some(3), "advmod"),
            ("like", "VERB", None, "root"),
            ("the", "DET", Some(5), "det"),
            ("rain", "NOUN", Some(3), "obj"),
            (".", "PUNCT", Some(3), "punct"),
        ],
        trigger: Some((5, 5, "scene", false)),
    },
    Template {
        tokens: &[
            ("The", "DET", Some(2), "det"),
            ("forest", "NOUN", Some(2), "compound"),
            ("doctor", "NOUN", Some(3), "nsubj"),
            ("visits", "VERB", None, "root"),
            ("N", "PROPN", Some(3), "obj"),
            (".", "PUNCT", Some(3), "punct"),
        ],
        trigger: Some((1, 1, "scene", false)),
    },
    Template {
        tokens: &[
            ("N", "PROPN", Some(2), "nsubj"),
            ("is", "AUX", Some(2), "cop"),
            ("happy", "ADJ", None, "root"),
            (".", "PUNCT", Some(2), "punct"),
        ],
        trigger: None,
    },
];

const NAMES: &[&str] = &["Bear", "Rabbit", "Piggy", "Fox", "Duck", "Mole"];

fn sentence(story_id: &str, index: usize, t: &Template, name: &str) -> Value {
    let tokens: Vec<Value> = t
        .tokens
        .iter()
        .map(|&(s, pos, head, deprel)| {
            json!({"surface": if s == "N" { name } else { s }, "pos": pos, "head": head, "deprel": deprel})
        })
        .collect();
    let triggers: Vec<Value> = t
        .trigger
        .iter()
        .map(|&(i, j, category, label)| json!({"i": i, "j": j, "category": category, "confidence": 2, "label": label}))
        .collect();
    json!({"story_id": story_id, "index": index, "tokens": tokens, "triggers": triggers})
}

/// `n` stories of 3 to 6 sentences drawn from the templates.
pub fn stories_jsonl(n: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for s in 0..n {
        let id = format!("story-{s:03}");
        let len = rng.gen_range(3..=6);
        for index in 0..len {
            let t = TEMPLATES.choose(&mut rng).unwrap();
            let name = NAMES.choose(&mut rng).unwrap();
            out.push_str(&sentence(&id, index, t, name).to_string());
            out.push('\n');
        }
    }
    out
}

pub fn bank_jsonl() -> String {
    let sounds = [
        json!({"id": "door-01", "category": "action", "audio_ref": "sfx/door_knock.wav",
               "description_tokens": [["knock", "VERB"], ["on", "ADP"], ["door", "NOUN"]]}),
        json!({"id": "forest-01", "category": "scene", "scene": "forest", "audio_ref": "sfx/forest_birds.wav",
               "description_tokens": [["birds", "NOUN"], ["in", "ADP"], ["forest", "NOUN"]]}),
        json!({"id": "party-01", "category": "scene", "scene": "party", "audio_ref": "sfx/party.wav",
               "description_tokens": [["new year party", "NOUN"], ["crowd", "NOUN"]]}),
        json!({"id": "rain-01", "category": "scene", "scene": "rain", "audio_ref": "sfx/rain.wav",
               "description_tokens": [["heavy", "ADJ"], ["rain", "NOUN"]]}),
        json!({"id": "thunder-01", "category": "scene", "scene": "thunder", "audio_ref": "sfx/thunder.wav",
               "description_tokens": [["thunder", "NOUN"], ["rumbles", "VERB"]]}),
    ];
    sounds.iter().map(|s| format!("{s}\n")).collect()
}

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub stories: PathBuf,
    pub bank: PathBuf,
    pub lexicons: PathBuf,
    pub deprel_map: PathBuf,
}

impl Fixture {
    pub fn new(n_stories: usize, seed: u64) -> Fixture {
        let dir = tempfile::tempdir().unwrap();
        let stories = dir.path().join("stories.jsonl");
        let bank = dir.path().join("bank.jsonl");
        fs::write(&stories, stories_jsonl(n_stories, seed)).unwrap();
        fs::write(&bank, bank_jsonl()).unwrap();
        Fixture {
            dir,
            stories,
            bank,
            lexicons: data_dir().join("lexicons"),
            deprel_map: data_dir().join("deprel.map"),
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}
