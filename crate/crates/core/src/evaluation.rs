//! Balanced sampling, k-fold cross-validation, metrics and the feature-group
//! ablation driver.

use std::fmt::Write as _;
use std::sync::Arc;
use std::thread;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::{train_masked, Hyper, Prediction};
use crate::corpus::{Sentence, Span, StoryCollection, TriggerCategory};
use crate::error::{Error, Result};
use crate::features::{FeatureExtractor, FeatureGroup, FeatureMask, FeatureVector};
use crate::rules::{apply_rules, RuleConfig};

/// A labeled (sentence, trigger) pair with its feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub sentence: Arc<Sentence>,
    pub span: Span,
    pub features: FeatureVector,
    pub label: bool,
}

/// Labeled annotated triggers from a corpus, optionally restricted to one
/// trigger category. Triggers without a label are skipped.
pub fn instances_from_corpus(
    corpus: &StoryCollection,
    extractor: &FeatureExtractor,
    category: Option<TriggerCategory>,
) -> Result<Vec<Instance>> {
    let mut out = Vec::new();
    for sentence in corpus.sentences() {
        let shared = Arc::new(sentence.clone());
        for trigger in &sentence.triggers {
            let Some(label) = trigger.label else { continue };
            if category.is_some_and(|c| c != trigger.category) {
                continue;
            }
            let span = trigger.span();
            out.push(Instance {
                sentence: Arc::clone(&shared),
                span,
                features: extractor.extract(sentence, span)?,
                label,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn metrics(&self) -> Metrics {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(self.tp, self.tp + self.fp);
        let recall = ratio(self.tp, self.tp + self.fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Metrics {
            precision,
            recall,
            accuracy: ratio(self.tp + self.tn, self.total()),
            f1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub f1: f64,
}

impl Metrics {
    /// Unweighted mean.
    pub fn mean(items: &[Metrics]) -> Metrics {
        let n = items.len().max(1) as f64;
        let sum = |f: fn(&Metrics) -> f64| items.iter().map(f).sum::<f64>() / n;
        Metrics {
            precision: sum(|m| m.precision),
            recall: sum(|m| m.recall),
            accuracy: sum(|m| m.accuracy),
            f1: sum(|m| m.f1),
        }
    }
}

pub fn confusion(y_true: &[bool], y_pred: &[bool]) -> Result<Confusion> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut c = Confusion::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

pub fn compute_metrics(y_true: &[bool], y_pred: &[bool]) -> Result<Metrics> {
    confusion(y_true, y_pred).map(|c| c.metrics())
}

/// Share of each row in the total.
pub fn label_distribution(counts: &[usize]) -> Result<Vec<f64>> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::InvalidArgument("label distribution over zero sentences".into()));
    }
    Ok(counts.iter().map(|&c| c as f64 / total as f64).collect())
}

pub fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

/// Indices of a class-balanced subsample: every minority instance plus an
/// equal-size seeded draw without replacement from the majority, returned in
/// original order.
pub fn balance_indices(labels: &[bool], seed: u64) -> Result<Vec<usize>> {
    let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::DegenerateLabels);
    }
    let (minority, majority) = if pos.len() <= neg.len() { (pos, neg) } else { (neg, pos) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = minority;
    keep.extend(
        index::sample(&mut rng, majority.len(), keep.len())
            .into_iter()
            .map(|k| majority[k]),
    );
    keep.sort_unstable();
    Ok(keep)
}

pub fn balance_sample(instances: &[Instance], seed: u64) -> Result<Vec<Instance>> {
    let labels: Vec<bool> = instances.iter().map(|i| i.label).collect();
    Ok(balance_indices(&labels, seed)?
        .into_iter()
        .map(|i| instances[i].clone())
        .collect())
}

/// Seeded shuffle of `0..n` cut into `k` contiguous chunks; the first `n % k`
/// chunks get one extra element.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > n {
        return Err(Error::InvalidArgument(format!("fold count {k} must lie in [2, {n}]")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut at = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        folds.push(order[at..at + size].to_vec());
        at += size;
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub k: usize,
    pub seed: u64,
    pub mask: FeatureMask,
    pub rules: RuleConfig,
    pub hyper: Hyper,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            k: 5,
            seed: 42,
            mask: FeatureMask::none(),
            rules: RuleConfig::disabled(),
            hyper: Hyper::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub confusion: Confusion,
    pub metrics: Metrics,
    /// Same fold and model before rule suppression, when rules are enabled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub without_rules: Option<Metrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub mean: Metrics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_without_rules: Option<Metrics>,
    pub folds: Vec<FoldReport>,
}

fn run_fold(instances: &[Instance], test: &[usize], fold: usize, cfg: &EvalConfig) -> Result<FoldReport> {
    let mut in_test = vec![false; instances.len()];
    for &i in test {
        in_test[i] = true;
    }
    let train_set: Vec<&Instance> = instances
        .iter()
        .zip(&in_test)
        .filter(|(_, &t)| !t)
        .map(|(inst, _)| inst)
        .collect();
    let x: Vec<&[f64]> = train_set.iter().map(|i| i.features.as_slice()).collect();
    let y: Vec<bool> = train_set.iter().map(|i| i.label).collect();
    let model = train_masked(&x, &y, cfg.hyper, cfg.mask.clone())?.model;

    let y_true: Vec<bool> = test.iter().map(|&i| instances[i].label).collect();
    let raw: Vec<Prediction> = test
        .iter()
        .map(|&i| model.predict(instances[i].features.as_slice()))
        .collect::<Result<_>>()?;

    let labels = |p: &[Prediction]| p.iter().map(|p| p.label).collect::<Vec<_>>();
    let (final_preds, without_rules) = if cfg.rules.enabled {
        let ctx: Vec<(&Sentence, Span)> = test
            .iter()
            .map(|&i| (instances[i].sentence.as_ref(), instances[i].span))
            .collect();
        let ruled = apply_rules(&raw, &ctx, &cfg.rules)?;
        (ruled, Some(compute_metrics(&y_true, &labels(&raw))?))
    } else {
        (raw, None)
    };
    let confusion = confusion(&y_true, &labels(&final_preds))?;
    Ok(FoldReport {
        fold,
        n_train: train_set.len(),
        n_test: test.len(),
        confusion,
        metrics: confusion.metrics(),
        without_rules,
    })
}

/// k-fold cross-validation; folds train in parallel and are reported in fold
/// order. The reported mean is the unweighted mean over folds.
pub fn cross_validate(instances: &[Instance], cfg: &EvalConfig) -> Result<CvReport> {
    cfg.rules.validate()?;
    let folds = kfold_split(instances.len(), cfg.k, cfg.seed)?;
    let results: Vec<Result<FoldReport>> = thread::scope(|scope| {
        let handles: Vec<_> = folds
            .iter()
            .enumerate()
            .map(|(f, test)| scope.spawn(move || run_fold(instances, test, f, cfg)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("fold worker panicked"))
            .collect()
    });
    let folds = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mean = Metrics::mean(&folds.iter().map(|f| f.metrics).collect::<Vec<_>>());
    let mean_without_rules = cfg
        .rules
        .enabled
        .then(|| Metrics::mean(&folds.iter().filter_map(|f| f.without_rules).collect::<Vec<_>>()));
    Ok(CvReport {
        mean,
        mean_without_rules,
        folds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub name: String,
    pub mask: FeatureMask,
    pub report: CvReport,
}

/// The excluded-group rows: None, SpecialWords, ActionWords, NowWords, POS,
/// Syntactic.
pub fn standard_ablation_masks() -> Vec<(String, FeatureMask)> {
    let mut rows = vec![("None".to_string(), FeatureMask::none())];
    rows.extend(
        [
            FeatureGroup::SpecialWords,
            FeatureGroup::ActionWords,
            FeatureGroup::NowWords,
            FeatureGroup::Pos,
            FeatureGroup::Syntactic,
        ]
        .into_iter()
        .map(|g| (g.name().to_string(), FeatureMask::group(g))),
    );
    rows
}

/// One cross-validation per mask, all on the same folds. Each row's mask is
/// added to `cfg.mask`.
pub fn ablation_suite(
    instances: &[Instance],
    masks: &[(String, FeatureMask)],
    cfg: &EvalConfig,
) -> Result<Vec<AblationRow>> {
    masks
        .iter()
        .map(|(name, mask)| {
            let row_cfg = EvalConfig {
                mask: cfg.mask.clone().union(mask),
                ..cfg.clone()
            };
            Ok(AblationRow {
                name: name.clone(),
                mask: mask.clone(),
                report: cross_validate(instances, &row_cfg)?,
            })
        })
        .collect()
}

pub const TABLE_HEADER: &str = "mask\tprecision\trecall\taccuracy\tf1";

pub fn table_row(name: &str, m: &Metrics) -> String {
    format!(
        "{name}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
        m.precision, m.recall, m.accuracy, m.f1
    )
}

pub fn format_table<'a>(rows: impl IntoIterator<Item = (&'a str, &'a Metrics)>) -> String {
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for (name, m) in rows {
        let _ = writeln!(out, "{}", table_row(name, m));
    }
    out
}
