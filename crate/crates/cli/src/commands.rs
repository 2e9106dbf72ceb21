use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sfx_core::classifier::{train_masked, Hyper};
use sfx_core::corpus::{annotation_stats, load_stories, EmbeddingTable, LexiconSet, StoryCollection, TriggerCategory};
use sfx_core::evaluation::{
    ablation_suite, balance_sample, cross_validate, format_table, instances_from_corpus, label_distribution,
    standard_ablation_masks, EvalConfig, Instance,
};
use sfx_core::features::{DeprelMap, FeatureExtractor, FeatureGroup, FeatureMask};
use sfx_core::pipeline::Pipeline;
use sfx_core::retrieval::{RetrievalConfig, Retriever};
use sfx_core::rules::RuleConfig;
use sfx_core::soundbank::{build_database, load_bank, load_synonyms, write_database, ExpansionConfig, SynonymMap};

use crate::{
    Bm25Args, BuildDbArgs, Category, Cli, Command, CueArgs, EvalArgs, ExtractArgs, FeatureArgs, HyperArgs, Preset,
    RetrieveArgs, StatsArgs, Toggle, TrainArgs,
};

/// Bad flag values that clap cannot check on its own.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::BuildDb(a) => build_db(a),
        Command::Retrieve(a) => retrieve(a),
        Command::ExtractFeatures(a) => extract(a),
        Command::Train(a) => train(cli, a),
        Command::Eval(a) => eval(cli, a, false),
        Command::Ablate(a) => eval(cli, a, true),
        Command::Cue(a) => cue(cli, a),
        Command::Stats(a) => stats(a),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = output(Some(path))?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn build_db(a: &BuildDbArgs) -> Result<()> {
    if !(0.0..=1.0).contains(&a.min_sim) {
        return Err(UsageError(format!("--min-sim {} outside [0, 1]", a.min_sim)).into());
    }
    let sounds: Vec<_> = load_bank(&a.bank)?.into_iter().map(|t| t.sound).collect();
    let embeddings = match &a.embeddings {
        Some(p) => EmbeddingTable::load(p)?,
        None => EmbeddingTable::default(),
    };
    let synonyms = match &a.synonyms {
        Some(p) => load_synonyms(p)?,
        None => SynonymMap::new(),
    };
    let cfg = ExpansionConfig {
        k: a.k,
        min_sim: a.min_sim,
    };
    let db = build_database(&sounds, &embeddings, &synonyms, cfg)?;
    let mut out = output(a.out.as_deref())?;
    write_database(&db, &mut out)?;
    out.flush()?;
    Ok(())
}

fn retriever(bank: &Path, bm25: &Bm25Args) -> Result<Retriever> {
    let cfg = RetrievalConfig { k1: bm25.k1, b: bm25.b };
    cfg.validate().map_err(|e| UsageError(e.to_string()))?;
    Ok(Retriever::new(load_bank(bank)?, cfg)?)
}

fn retrieve(a: &RetrieveArgs) -> Result<()> {
    let retriever = retriever(&a.bank, &a.bm25)?;
    let stories = load_stories(&a.stories)?;
    let mut out = output(a.out.as_deref())?;
    for sentence in stories.sentences() {
        for c in retriever.detect_triggers(sentence)? {
            serde_json::to_writer(&mut out, &c)?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()?;
    Ok(())
}

fn extractor(lexicons: &Path, deprel_map: &Path) -> Result<FeatureExtractor> {
    Ok(FeatureExtractor::new(
        LexiconSet::load_dir(lexicons)?,
        DeprelMap::load(deprel_map)?,
    ))
}

fn category(c: Option<Category>) -> Option<TriggerCategory> {
    c.map(|c| match c {
        Category::Action => TriggerCategory::Action,
        Category::Scene => TriggerCategory::Scene,
        Category::Character => TriggerCategory::Character,
        Category::Onomatopoeia => TriggerCategory::Onomatopoeia,
    })
}

fn instances(f: &FeatureArgs) -> Result<Vec<Instance>> {
    let stories = load_stories(&f.stories)?;
    let ex = extractor(&f.lexicons, &f.deprel_map)?;
    Ok(instances_from_corpus(&stories, &ex, category(f.category))?)
}

fn extract(a: &ExtractArgs) -> Result<()> {
    let mut out = output(a.out.as_deref())?;
    for inst in instances(&a.features)? {
        write!(out, "{}", u8::from(inst.label))?;
        for v in inst.features.as_slice() {
            write!(out, "\t{v}")?;
        }
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn mask(cli: &Cli, h: &HyperArgs) -> Result<FeatureMask> {
    let mut mask = FeatureMask::parse(&h.mask).map_err(|e| UsageError(format!("--mask: {e}")))?;
    if cli.preset == Some(Preset::PaperBest) {
        mask = mask.union(&FeatureMask::group(FeatureGroup::NowWords));
    }
    Ok(mask)
}

fn hyper(cli: &Cli, h: &HyperArgs) -> Result<Hyper> {
    if !(h.lambda > 0.0 && h.lambda.is_finite()) {
        return Err(UsageError(format!("--lambda must be positive, got {}", h.lambda)).into());
    }
    Ok(Hyper {
        lambda: h.lambda,
        epochs: h.epochs,
        seed: cli.seed,
    })
}

fn rule_config(cli: &Cli, path: Option<&PathBuf>) -> Result<RuleConfig> {
    let mut cfg = match path {
        Some(p) => RuleConfig::load(p)?,
        None => RuleConfig::default(),
    };
    cfg.enabled = cli.rules == Toggle::On;
    Ok(cfg)
}

fn train(cli: &Cli, a: &TrainArgs) -> Result<()> {
    let mask = mask(cli, &a.hyper)?;
    let hyper = hyper(cli, &a.hyper)?;
    let mut data = instances(&a.features)?;
    if !a.no_balance {
        data = balance_sample(&data, cli.seed)?;
    }
    let x: Vec<&[f64]> = data.iter().map(|i| i.features.as_slice()).collect();
    let y: Vec<bool> = data.iter().map(|i| i.label).collect();
    let report = train_masked(&x, &y, hyper, mask)?;
    report.model.save(&a.out)?;
    eprintln!(
        "trained on {} instances, final objective {:.6}",
        data.len(),
        report.objective.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

#[derive(Serialize)]
struct Detail<'a, T: Serialize> {
    config: &'a EvalConfig,
    n_instances: usize,
    n_balanced: usize,
    label_distribution: Vec<f64>,
    results: T,
}

fn eval(cli: &Cli, a: &EvalArgs, ablate: bool) -> Result<()> {
    if a.k < 2 {
        return Err(UsageError(format!("--k must be at least 2, got {}", a.k)).into());
    }
    let cfg = EvalConfig {
        k: a.k,
        seed: cli.seed,
        mask: mask(cli, &a.hyper)?,
        rules: rule_config(cli, a.rule_config.as_ref())?,
        hyper: hyper(cli, &a.hyper)?,
    };
    let all = instances(&a.features)?;
    let positives = all.iter().filter(|i| i.label).count();
    let data = balance_sample(&all, cli.seed)?;
    let distribution = label_distribution(&[all.len() - positives, positives])?;
    let mut stdout = output(None)?;

    let detail = if ablate {
        let rows = ablation_suite(&data, &standard_ablation_masks(), &cfg)?;
        let table = format_table(rows.iter().map(|r| (r.name.as_str(), &r.report.mean)));
        stdout.write_all(table.as_bytes())?;
        serde_json::to_value(&rows)?
    } else {
        let report = cross_validate(&data, &cfg)?;
        let name = if a.hyper.mask.trim().is_empty() {
            "None"
        } else {
            a.hyper.mask.trim()
        };
        let mut rows = Vec::new();
        let with_rules = format!("{name} w/ rules");
        if let Some(before) = &report.mean_without_rules {
            rows.push((name, before));
            rows.push((with_rules.as_str(), &report.mean));
        } else {
            rows.push((name, &report.mean));
        }
        stdout.write_all(format_table(rows).as_bytes())?;
        serde_json::to_value(&report)?
    };
    stdout.flush()?;

    if let Some(path) = &a.detail {
        write_json(
            path,
            &Detail {
                config: &cfg,
                n_instances: all.len(),
                n_balanced: data.len(),
                label_distribution: distribution,
                results: detail,
            },
        )?;
    }
    Ok(())
}

fn cue(cli: &Cli, a: &CueArgs) -> Result<()> {
    let retriever = retriever(&a.bank, &a.bm25)?;
    let extractor = extractor(&a.lexicons, &a.deprel_map)?;
    let model = sfx_core::classifier::LinearModel::load(&a.model)?;
    let rules = rule_config(cli, a.rule_config.as_ref())?;
    let stories: StoryCollection = load_stories(&a.stories)?;
    let sheet = Pipeline {
        retriever: &retriever,
        extractor: &extractor,
        model: &model,
        rules: &rules,
    }
    .run(&stories)?;
    let mut out = output(a.out.as_deref())?;
    sheet.write_jsonl(&mut out)?;
    out.flush()?;
    Ok(())
}

fn stats(a: &StatsArgs) -> Result<()> {
    let stories = load_stories(&a.stories)?;
    let stats = annotation_stats(&stories)?;
    let mut out = output(None)?;
    serde_json::to_writer_pretty(&mut out, &stats)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}
