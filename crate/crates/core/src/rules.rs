//! Post-classification suppression rules: no sound for triggers inside quoted
//! speech or after a colon, and none for triggers right after a simile marker.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::Prediction;
use crate::corpus::{Sentence, Span};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleConfig {
    pub quote_pairs: Vec<(char, char)>,
    pub colon_chars: Vec<char>,
    pub simile_markers: Vec<String>,
    pub simile_window: usize,
    pub enabled: bool,
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig {
            quote_pairs: vec![
                ('"', '"'),
                ('\u{201c}', '\u{201d}'),
                ('\u{300c}', '\u{300d}'),
                ('\u{2018}', '\u{2019}'),
            ],
            colon_chars: vec![':', '\u{ff1a}'],
            simile_markers: vec!["as if".into(), "as though".into(), "like".into()],
            simile_window: 5,
            enabled: true,
        }
    }
}

impl RuleConfig {
    pub fn disabled() -> Self {
        RuleConfig {
            enabled: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.simile_window == 0 {
            return Err(Error::InvalidArgument("simile_window must be at least 1".into()));
        }
        if self.enabled && self.simile_markers.iter().all(|m| m.trim().is_empty()) {
            return Err(Error::InvalidArgument("simile_markers must not be empty".into()));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: RuleConfig = serde_json::from_str(&body).map_err(|e| Error::parse(e.line(), "rules", e))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// True when the trigger starts inside a quotation (an unclosed quote runs to
/// the end of the sentence) or any earlier token carries a colon.
pub fn in_quotation_or_after_colon(sentence: &Sentence, span: Span, cfg: &RuleConfig) -> bool {
    let mut open: Option<char> = None;
    for token in &sentence.tokens[..span.start.min(sentence.len())] {
        for ch in token.surface.chars() {
            if cfg.colon_chars.contains(&ch) {
                return true;
            }
            match open {
                Some(close) if ch == close => open = None,
                Some(_) => {}
                None => {
                    if let Some(&(_, close)) = cfg.quote_pairs.iter().find(|(o, _)| *o == ch) {
                        open = Some(close);
                    }
                }
            }
        }
    }
    open.is_some()
}

/// True when a simile marker ends within the `simile_window` tokens right
/// before the trigger.
pub fn near_simile_marker(sentence: &Sentence, span: Span, cfg: &RuleConfig) -> bool {
    let words = sentence.normalized_tokens();
    let start = span.start.min(words.len());
    let lo = start.saturating_sub(cfg.simile_window);
    cfg.simile_markers.iter().any(|marker| {
        let marker: Vec<String> = marker.split_whitespace().map(str::to_lowercase).collect();
        if marker.is_empty() {
            return false;
        }
        // marker occupies [end + 1 - len, end] with lo <= end < start
        (lo..start).any(|end| end + 1 >= marker.len() && words[end + 1 - marker.len()..=end] == marker[..])
    })
}

pub fn fires(sentence: &Sentence, span: Span, cfg: &RuleConfig) -> bool {
    cfg.enabled && (in_quotation_or_after_colon(sentence, span, cfg) || near_simile_marker(sentence, span, cfg))
}

/// Turns positive predictions into negatives where a rule fires. Margins are
/// kept, so a suppressed prediction may carry a positive margin.
pub fn apply_rules(
    predictions: &[Prediction],
    instances: &[(&Sentence, Span)],
    cfg: &RuleConfig,
) -> Result<Vec<Prediction>> {
    if predictions.len() != instances.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: instances.len(),
        });
    }
    Ok(predictions
        .iter()
        .zip(instances)
        .map(|(p, &(sentence, span))| {
            if p.label && fires(sentence, span, cfg) {
                Prediction { label: false, ..*p }
            } else {
                *p
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::flat;
    use crate::corpus::Pos;

    fn find(s: &Sentence, word: &str) -> Span {
        Span::single(s.tokens.iter().position(|t| t.surface == word).unwrap())
    }

    #[test]
    fn quoted_after_colon() {
        let s = flat(r#"Bear said : " the river is beautiful ""#, Pos::Noun);
        let cfg = RuleConfig::default();
        assert!(in_quotation_or_after_colon(&s, find(&s, "river"), &cfg));
        let no_colon = flat(r#"Bear said " the river is beautiful ""#, Pos::Noun);
        assert!(in_quotation_or_after_colon(&no_colon, find(&no_colon, "river"), &cfg));
        let no_quote = flat("Bear said : the river is beautiful", Pos::Noun);
        assert!(in_quotation_or_after_colon(&no_quote, find(&no_quote, "river"), &cfg));
    }

    #[test]
    fn plain_sentence_is_clear() {
        let s = flat("Silly Bear runs over a rapid river", Pos::Noun);
        let cfg = RuleConfig::default();
        assert!(!in_quotation_or_after_colon(&s, find(&s, "river"), &cfg));
        assert!(!near_simile_marker(&s, find(&s, "river"), &cfg));
    }

    #[test]
    fn colon_after_trigger_only() {
        let s = flat("the river flows : fast", Pos::Noun);
        assert!(!in_quotation_or_after_colon(
            &s,
            find(&s, "river"),
            &RuleConfig::default()
        ));
    }

    #[test]
    fn closed_quote_before_trigger() {
        let s = flat(r#"" hello " he said by the river"#, Pos::Noun);
        assert!(!in_quotation_or_after_colon(
            &s,
            find(&s, "river"),
            &RuleConfig::default()
        ));
        let s = flat("\u{201c}hello\u{201d} by the river", Pos::Noun);
        assert!(!in_quotation_or_after_colon(
            &s,
            find(&s, "river"),
            &RuleConfig::default()
        ));
        let s = flat("\u{300c} the river", Pos::Noun);
        assert!(in_quotation_or_after_colon(
            &s,
            find(&s, "river"),
            &RuleConfig::default()
        ));
        let s = flat("he said\u{ff1a} the river", Pos::Noun);
        assert!(in_quotation_or_after_colon(
            &s,
            find(&s, "river"),
            &RuleConfig::default()
        ));
    }

    #[test]
    fn simile_marker_two_tokens_before() {
        let s = flat("quiet like a forest", Pos::Noun);
        assert!(near_simile_marker(&s, find(&s, "forest"), &RuleConfig::default()));
        let s = flat("he roared as if a thunder struck", Pos::Noun);
        assert!(near_simile_marker(&s, find(&s, "thunder"), &RuleConfig::default()));
    }

    #[test]
    fn simile_window_arithmetic() {
        let s = flat("like a b c d e f g forest", Pos::Noun);
        let span = find(&s, "forest");
        assert_eq!(span.start, 8);
        assert!(!near_simile_marker(&s, span, &RuleConfig::default()));
        let wide = RuleConfig {
            simile_window: 8,
            ..RuleConfig::default()
        };
        assert!(near_simile_marker(&s, span, &wide));
        let s = flat("like a b c d forest", Pos::Noun);
        assert!(near_simile_marker(&s, find(&s, "forest"), &RuleConfig::default()));
    }

    #[test]
    fn marker_after_trigger_ignored() {
        let s = flat("the forest looks like home", Pos::Noun);
        assert!(!near_simile_marker(&s, find(&s, "forest"), &RuleConfig::default()));
    }

    #[test]
    fn apply_rules_behaviour() {
        let quoted = flat(r#"" the forest ""#, Pos::Noun);
        let plain = flat("the forest", Pos::Noun);
        let inst = [(&quoted, find(&quoted, "forest")), (&plain, find(&plain, "forest"))];
        let cfg = RuleConfig::default();

        let neg = [Prediction::from_margin(-1.0), Prediction::from_margin(-0.5)];
        assert_eq!(apply_rules(&neg, &inst, &cfg).unwrap(), neg);

        let pos = [Prediction::from_margin(1.0), Prediction::from_margin(2.0)];
        let out = apply_rules(&pos, &inst, &cfg).unwrap();
        assert!(!out[0].label);
        assert_eq!(out[0].margin, 1.0);
        assert!(out[1].label);

        assert_eq!(apply_rules(&pos, &inst, &RuleConfig::disabled()).unwrap(), pos);
        assert!(apply_rules(&pos[..1], &inst, &cfg).is_err());

        let again = apply_rules(&out, &inst, &cfg).unwrap();
        assert_eq!(again, out);
    }

    #[test]
    fn config_file_defaults_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rules.json");
        fs::write(&path, r#"{"simile_window": 3}"#).unwrap();
        let cfg = RuleConfig::load(&path).unwrap();
        assert_eq!(cfg.simile_window, 3);
        assert_eq!(cfg.simile_markers.len(), 3);
        fs::write(&path, r#"{"simile_window": 0}"#).unwrap();
        assert!(RuleConfig::load(&path).is_err());
        fs::write(&path, r#"{"simile_markers": []}"#).unwrap();
        assert!(RuleConfig::load(&path).is_err());
        let round: RuleConfig = serde_json::from_str(&serde_json::to_string(&RuleConfig::default()).unwrap()).unwrap();
        assert_eq!(round, RuleConfig::default());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn rules_only_remove_positives(
                words in proptest::collection::vec(proptest::sample::select(vec!["like", "the", "\"", ":", "forest", "as", "if", "rain"]), 1..10),
                margins in proptest::collection::vec(-2.0f64..2.0, 1..10),
                enabled in any::<bool>(),
            ) {
                let s = flat(&words.join(" "), Pos::Noun);
                let n = margins.len().min(s.len());
                let inst: Vec<(&Sentence, Span)> = (0..n).map(|i| (&s, Span::single(i))).collect();
                let preds: Vec<Prediction> = margins[..n].iter().map(|&m| Prediction::from_margin(m)).collect();
                let cfg = RuleConfig { enabled, ..RuleConfig::default() };
                let out = apply_rules(&preds, &inst, &cfg).unwrap();
                for (a, b) in preds.iter().zip(&out) {
                    prop_assert!(!b.label || a.label);
                    prop_assert_eq!(a.margin, b.margin);
                }
                prop_assert_eq!(apply_rules(&out, &inst, &cfg).unwrap(), out);
            }
        }
    }
}
