//! End-to-end cue-sheet generation: detect, extract, classify, filter.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::classifier::LinearModel;
use crate::corpus::{Sentence, StoryCollection};
use crate::error::{Error, Result};
use crate::features::{FeatureExtractor, FEATURE_DIM};
use crate::retrieval::{CandidateTrigger, Retriever};
use crate::rules::{self, RuleConfig};
use crate::soundbank::Scene;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CueEntry {
    pub story_id: String,
    pub sentence_index: usize,
    /// Byte offsets `[start, end)` into the sentence tokens joined by spaces.
    pub char_start: usize,
    pub char_end: usize,
    pub trigger: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<Scene>,
    pub sound_id: String,
    pub audio_ref: String,
    pub retrieval_score: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CueSheet {
    pub entries: Vec<CueEntry>,
}

impl CueSheet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for e in &self.entries {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// One detected trigger with its classifier verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub trigger: CandidateTrigger,
    pub margin: f64,
    pub predicted: bool,
    pub suppressed: bool,
}

impl Decision {
    pub fn accepted(&self) -> bool {
        self.predicted && !self.suppressed
    }
}

pub struct Pipeline<'a> {
    pub retriever: &'a Retriever,
    pub extractor: &'a FeatureExtractor,
    pub model: &'a LinearModel,
    pub rules: &'a RuleConfig,
}

impl Pipeline<'_> {
    pub fn check(&self) -> Result<()> {
        if self.model.dim() != FEATURE_DIM {
            return Err(Error::DimensionMismatch {
                expected: FEATURE_DIM,
                found: self.model.dim(),
            }
            .in_stage("model"));
        }
        self.rules.validate().map_err(|e| e.in_stage("rules"))
    }

    pub fn decide(&self, sentence: &Sentence) -> Result<Vec<Decision>> {
        let triggers = self
            .retriever
            .detect_triggers(sentence)
            .map_err(|e| e.in_stage("detect"))?;
        triggers
            .into_iter()
            .map(|trigger| {
                let x = self
                    .extractor
                    .extract(sentence, trigger.span)
                    .map_err(|e| e.in_stage("extract"))?;
                let p = self.model.predict(x.as_slice()).map_err(|e| e.in_stage("predict"))?;
                let suppressed = p.label && rules::fires(sentence, trigger.span, self.rules);
                Ok(Decision {
                    trigger,
                    margin: p.margin,
                    predicted: p.label,
                    suppressed,
                })
            })
            .collect()
    }

    pub fn run(&self, stories: &StoryCollection) -> Result<CueSheet> {
        self.check()?;
        let mut entries = Vec::new();
        for sentence in stories.sentences() {
            let text = sentence.text();
            for d in self.decide(sentence)?.into_iter().filter(Decision::accepted) {
                let (start, end) = sentence.byte_range(d.trigger.span);
                let audio_ref = self
                    .retriever
                    .sound(&d.trigger.sound_id)
                    .map(|s| s.sound.audio_ref.clone())
                    .unwrap_or_default();
                entries.push(CueEntry {
                    story_id: sentence.story_id.clone(),
                    sentence_index: sentence.index,
                    char_start: start,
                    char_end: end,
                    trigger: text[start..end].to_string(),
                    scene: d.trigger.scene,
                    sound_id: d.trigger.sound_id,
                    audio_ref,
                    retrieval_score: d.trigger.retrieval_score,
                    margin: d.margin,
                });
            }
        }
        entries.sort_by(|a, b| {
            (&a.story_id, a.sentence_index, a.char_start).cmp(&(&b.story_id, b.sentence_index, b.char_start))
        });
        Ok(CueSheet { entries })
    }
}

pub fn run_pipeline(
    stories: &StoryCollection,
    retriever: &Retriever,
    extractor: &FeatureExtractor,
    model: &LinearModel,
    rules: &RuleConfig,
) -> Result<CueSheet> {
    Pipeline {
        retriever,
        extractor,
        model,
        rules,
    }
    .run(stories)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{Hyper, Scaler, MODEL_FORMAT_VERSION};
    use crate::corpus::fixtures::flat;
    use crate::corpus::{Pos, TriggerCategory};
    use crate::features::FeatureMask;
    use crate::retrieval::RetrievalConfig;
    use crate::soundbank::{ExpandedTag, SoundEffect, TagSource, TaggedSound};

    fn bias_model(b: f64) -> LinearModel {
        LinearModel {
            format_version: MODEL_FORMAT_VERSION,
            w: vec![0.0; FEATURE_DIM],
            b,
            scaler: Scaler {
                means: vec![0.0; FEATURE_DIM],
                stds: vec![0.0; FEATURE_DIM],
            },
            hyper: Hyper::default(),
            mask: FeatureMask::none(),
        }
    }

    fn thunder_retriever() -> Retriever {
        let bank = vec![TaggedSound {
            sound: SoundEffect {
                id: "thunder-01".into(),
                category: TriggerCategory::Scene,
                scene: Some(Scene::Thunder),
                audio_ref: "sfx/thunder.wav".into(),
                description_tokens: vec![("thunder".into(), Pos::Noun)],
            },
            tags: vec![ExpandedTag {
                tag: "thunder".into(),
                source: TagSource::Original,
                weight: 1.0,
            }],
        }];
        Retriever::new(bank, RetrievalConfig::default()).unwrap()
    }

    fn story(words: &str) -> StoryCollection {
        let mut s = flat(words, Pos::Noun);
        s.story_id = "s1".into();
        StoryCollection::from_sentences([s])
    }

    #[test]
    fn empty_stories_empty_sheet() {
        let sheet = run_pipeline(
            &StoryCollection::default(),
            &thunder_retriever(),
            &FeatureExtractor::default(),
            &bias_model(10.0),
            &RuleConfig::default(),
        )
        .unwrap();
        assert!(sheet.is_empty());
    }

    #[test]
    fn forced_positive_model_emits_cue() {
        let stories = story("A thunder suddenly booms over the heads .");
        let sheet = run_pipeline(
            &stories,
            &thunder_retriever(),
            &FeatureExtractor::default(),
            &bias_model(10.0),
            &RuleConfig::default(),
        )
        .unwrap();
        assert_eq!(sheet.len(), 1);
        let e = &sheet.entries[0];
        assert_eq!(e.trigger, "thunder");
        assert_eq!((e.char_start, e.char_end), (2, 9));
        assert_eq!(e.audio_ref, "sfx/thunder.wav");
        assert_eq!(e.margin, 10.0);
        assert_eq!(e.scene, Some(Scene::Thunder));
    }

    #[test]
    fn quoted_trigger_suppressed_with_rules() {
        let stories = story(r#"He said " a thunder booms ""#);
        let run = |rules: &RuleConfig| {
            run_pipeline(
                &stories,
                &thunder_retriever(),
                &FeatureExtractor::default(),
                &bias_model(10.0),
                rules,
            )
            .unwrap()
        };
        assert_eq!(run(&RuleConfig::default()).len(), 0);
        assert_eq!(run(&RuleConfig::disabled()).len(), 1);
    }

    #[test]
    fn negative_model_emits_nothing() {
        let stories = story("A thunder booms");
        let sheet = run_pipeline(
            &stories,
            &thunder_retriever(),
            &FeatureExtractor::default(),
            &bias_model(0.0),
            &RuleConfig::disabled(),
        )
        .unwrap();
        assert!(sheet.is_empty());
    }

    #[test]
    fn wrong_model_dimension_is_stage_error() {
        let mut m = bias_model(1.0);
        m.w.truncate(10);
        m.scaler.means.truncate(10);
        m.scaler.stds.truncate(10);
        let err = run_pipeline(
            &story("thunder"),
            &thunder_retriever(),
            &FeatureExtractor::default(),
            &m,
            &RuleConfig::default(),
        )
        .unwrap_err();
        assert!(err.to_string().starts_with("model:"), "{err}");
    }
}
