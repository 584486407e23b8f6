use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::{
    AttnStatsArgs, Command, EmbedArgs, GenInstancesArgs, ProbeArgs, ProjectArgs, SegmentArgs, TrainArgs,
};
use crate::corpus::{
    build_training_corpus, default_posterior_table, load_corpus, load_keywords, load_labeled_dataset,
    load_posterior_table, load_word_vectors, LabeledDataset, LabeledInput, PosteriorTable, DEFAULT_KEYWORDS,
};
use crate::error::{Error, Result};
use crate::instances::{build_training_set_with, read_instances, write_instances, DEV_FRACTION};
use crate::model::{load_checkpoint, save_checkpoint, train, Model, ModelConfig};
use crate::probe::{
    attention_stats, f1_metrics, item_features, kfold_cv, message_features_or_self_pair, project_2d,
    train_linear, FeatureKind, FeatureMatrix, LinearConfig, MetricsReport,
};
use crate::segment::{segment_message, SegmentedMessage};

/// One line of `embeddings.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Mean over adjacent pairs, or the self-pair vector of a one-argument message.
    pub vector: Vec<f64>,
    pub pairs: Vec<PairEmbedding>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEmbedding {
    pub arg1: usize,
    pub arg2: usize,
    pub connective: Option<String>,
    pub vector: Vec<f64>,
}

pub(super) fn run(command: &Command) -> Result<()> {
    match command {
        Command::Segment(a) => segment(a),
        Command::GenInstances(a) => gen_instances(a),
        Command::Train(a) => train_stage(a),
        Command::Embed(a) => embed(a),
        Command::Probe(a) => probe(a),
        Command::AttnStats(a) => attn_stats(a),
        Command::Project(a) => project(a),
    }
}

/// Fails before any work if an input is missing.
fn require_inputs(paths: &[Option<&Path>]) -> Result<()> {
    for p in paths.iter().flatten() {
        if !p.is_file() {
            return Err(Error::io(
                *p,
                std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found"),
            ));
        }
    }
    Ok(())
}

fn table(path: Option<&PathBuf>) -> Result<PosteriorTable> {
    match path {
        Some(p) => load_posterior_table(p),
        None => Ok(default_posterior_table()),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_jsonl<T: Serialize>(path: &Path, records: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = create(path)?;
    for r in records {
        serde_json::to_writer(&mut w, &r).map_err(|e| Error::Invalid(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| Error::format(path, i + 1, format!("malformed {what}: {e}")))?;
        out.push(rec);
    }
    Ok(out)
}

fn segment(a: &SegmentArgs) -> Result<()> {
    require_inputs(&[Some(&a.input), a.posteriors.as_deref(), a.keywords.as_deref()])?;
    let table = table(a.posteriors.as_ref())?;
    let mut corpus = load_corpus(&a.input)?;
    if a.keywords.is_some() || a.cap.is_some() {
        let keywords = match &a.keywords {
            Some(p) => load_keywords(p)?,
            None => DEFAULT_KEYWORDS.iter().map(|s| s.to_string()).collect(),
        };
        let before = corpus.len();
        corpus = build_training_corpus(&corpus, &keywords, a.cap.unwrap_or(usize::MAX))?;
        info!("keyword filter kept {} of {before} messages", corpus.len());
    }
    let segmented: Vec<SegmentedMessage> = corpus.iter().map(|m| segment_message(m, &table)).collect();
    let pairs: usize = segmented.iter().map(|s| s.pairs.len()).sum();
    info!("segmented {} messages into {pairs} pairs", segmented.len());
    write_jsonl(&a.out, &segmented)
}

fn gen_instances(a: &GenInstancesArgs) -> Result<()> {
    require_inputs(&[Some(&a.segments), a.posteriors.as_deref()])?;
    let table = table(a.posteriors.as_ref())?;
    let segments: Vec<SegmentedMessage> = read_jsonl(&a.segments, "segment record")?;
    let fraction = if a.dev.is_some() { DEV_FRACTION } else { 0.0 };
    let set = build_training_set_with(&segments, &table, fraction);
    if set.unknown_connectives > 0 {
        warn!("{} pairs had connectives missing from the table", set.unknown_connectives);
    }
    info!(
        "{} train and {} dev instances; {} implicit variants dropped",
        set.train.len(),
        set.dev.len(),
        set.implicit_skipped
    );
    write_instances(&a.out, &set.train, table.labels())?;
    if let Some(dev) = &a.dev {
        write_instances(dev, &set.dev, table.labels())?;
    }
    Ok(())
}

fn train_stage(a: &TrainArgs) -> Result<()> {
    require_inputs(&[Some(&a.train), a.dev.as_deref(), Some(&a.vectors)])?;
    let (train_set, labels) = read_instances(&a.train)?;
    let labels = labels.ok_or_else(|| Error::Invalid(format!("{}: no training instances", a.train.display())))?;
    let dev_set = match &a.dev {
        Some(p) => {
            let (d, dev_labels) = read_instances(p)?;
            if dev_labels.as_ref().is_some_and(|l| *l != labels) {
                return Err(Error::Invalid("train and dev label vocabularies differ".into()));
            }
            d
        }
        None => Vec::new(),
    };
    let vectors = load_word_vectors(&a.vectors)?;
    let config = ModelConfig {
        d_word: vectors.dim(),
        d_hidden: a.hidden,
        dropout_rate: a.dropout,
        levels: labels.sizes(),
        learning_rate: a.lr,
        epochs: a.epochs,
        seed: a.seed,
        loss: a.loss.parse()?,
        ..ModelConfig::default()
    };
    info!("model config: {config:?}");
    info!("seed: {}", config.seed);
    let mut model = Model::new(config, labels, vectors)?;
    let report = train(&mut model, &train_set, &dev_set)?;
    info!("kept epoch {} of {}", report.best_epoch, report.epochs.len());
    save_checkpoint(&model, &a.out)
}

fn embed(a: &EmbedArgs) -> Result<()> {
    require_inputs(&[Some(&a.model), Some(&a.segments)])?;
    let model = load_checkpoint(&a.model)?;
    let segments: Vec<SegmentedMessage> = read_jsonl(&a.segments, "segment record")?;
    let mut records = Vec::with_capacity(segments.len());
    for s in &segments {
        if s.is_empty() || s.arguments.iter().any(Vec::is_empty) {
            warn!("skipping message {:?}: no usable arguments", s.id);
            continue;
        }
        let pairs = s
            .adjacent_pairs()
            .into_iter()
            .map(|p| {
                Ok(PairEmbedding {
                    vector: model.extract_discre(s, &p)?,
                    arg1: p.arg1,
                    arg2: p.arg2,
                    connective: p.connective,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        records.push(EmbeddingRecord {
            id: s.id.clone(),
            label: s.label.clone(),
            vector: message_features_or_self_pair(s, &model)?,
            pairs,
        });
    }
    info!("embedded {} messages", records.len());
    write_jsonl(&a.out, &records)
}

fn features(data: &LabeledDataset, kind: FeatureKind, model: &Model, table: &PosteriorTable) -> Result<FeatureMatrix> {
    let mut rows = Vec::with_capacity(data.len());
    for item in &data.items {
        let v = item_features(item, kind, model, table)
            .map_err(|e| Error::Invalid(format!("item {:?}: {e}", item.id)))?;
        rows.push(v);
    }
    FeatureMatrix::new(rows, data.items.iter().map(|i| i.label.clone()).collect())
}

fn held_out_report(train: &FeatureMatrix, test: &FeatureMatrix, config: LinearConfig) -> Result<MetricsReport> {
    let model = train_linear(train, config)?;
    let predictions = model.predict_all(&test.rows);
    let mut labels = train.label_set();
    for l in test.label_set() {
        if !labels.contains(&l) {
            labels.push(l);
        }
    }
    f1_metrics(&test.labels, &predictions, &labels)
}

fn probe(a: &ProbeArgs) -> Result<()> {
    require_inputs(&[
        Some(&a.model),
        a.data.as_deref(),
        a.train_split.as_deref(),
        a.test_split.as_deref(),
        a.posteriors.as_deref(),
    ])?;
    let kind: FeatureKind = a.features.parse()?;
    let model = load_checkpoint(&a.model)?;
    let table = table(a.posteriors.as_ref())?;
    let linear = LinearConfig {
        c: a.c,
        epochs: a.svm_epochs,
        seed: a.seed,
    };
    info!("probe config: {linear:?}, features {kind:?}");

    let report = if let (Some(tr), Some(te)) = (&a.train_split, &a.test_split) {
        let train = features(&load_labeled_dataset(tr)?, kind, &model, &table)?;
        let test = features(&load_labeled_dataset(te)?, kind, &model, &table)?;
        held_out_report(&train, &test, linear)?
    } else {
        let path = a
            .data
            .as_ref()
            .ok_or_else(|| Error::Config("probe needs --data or --train-split/--test-split".into()))?;
        let data = load_labeled_dataset(path)?;
        let sections: Option<Vec<u32>> = data
            .items
            .iter()
            .map(|i| match &i.input {
                LabeledInput::Pair { section, .. } => *section,
                LabeledInput::Message(_) => None,
            })
            .collect();
        let fm = features(&data, kind, &model, &table)?;
        match (a.cv, sections) {
            (None, Some(sections)) => {
                info!("section split: 2-21 train, 23 test");
                let train_idx: Vec<usize> = (0..fm.len()).filter(|&i| (2..=21).contains(&sections[i])).collect();
                let test_idx: Vec<usize> = (0..fm.len()).filter(|&i| sections[i] == 23).collect();
                if train_idx.is_empty() || test_idx.is_empty() {
                    return Err(Error::Invalid("section split needs items in sections 2-21 and 23".into()));
                }
                held_out_report(&fm.subset(&train_idx), &fm.subset(&test_idx), linear)?
            }
            (k, _) => {
                let k = k.unwrap_or(10);
                info!("{k}-fold cross-validation over {} items", fm.len());
                let ids: Vec<String> = data.items.iter().map(|i| i.id.clone()).collect();
                kfold_cv(&fm, &ids, k, linear)?.report
            }
        }
    };
    info!("micro F1 {:.4}, macro F1 {:.4}", report.micro_f1, report.macro_f1);
    let mut w = create(&a.report)?;
    serde_json::to_writer_pretty(&mut w, &report).map_err(|e| Error::Invalid(e.to_string()))?;
    w.write_all(b"\n").map_err(|e| Error::io(&a.report, e))?;
    w.flush().map_err(|e| Error::io(&a.report, e))
}

fn attn_stats(a: &AttnStatsArgs) -> Result<()> {
    require_inputs(&[Some(&a.model), Some(&a.segments), a.keywords.as_deref(), a.posteriors.as_deref()])?;
    let model = load_checkpoint(&a.model)?;
    let segments: Vec<SegmentedMessage> = read_jsonl(&a.segments, "segment record")?;
    let keywords = match &a.keywords {
        Some(p) => load_keywords(p)?,
        None => DEFAULT_KEYWORDS.iter().map(|s| s.to_string()).collect(),
    };
    let table = table(a.posteriors.as_ref())?;
    let stats = attention_stats(&segments, &model, &keywords, Some(&table))?;
    for g in &stats.groups {
        info!("{}: mean {:.4} over {} occurrences", g.group.name(), g.mean, g.occurrences);
    }
    std::fs::write(&a.out, stats.to_tsv()).map_err(|e| Error::io(&a.out, e))
}

fn project(a: &ProjectArgs) -> Result<()> {
    require_inputs(&[Some(&a.embeddings)])?;
    let records: Vec<EmbeddingRecord> = read_jsonl(&a.embeddings, "embedding record")?;
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for r in records {
        if a.pairs {
            for p in r.pairs {
                ids.push(format!("{}:{}-{}", r.id, p.arg1, p.arg2));
                labels.push(p.connective.unwrap_or_default());
                rows.push(p.vector);
            }
        } else {
            ids.push(r.id);
            labels.push(r.label.unwrap_or_default());
            rows.push(r.vector);
        }
    }
    let coords = project_2d(&rows)?;
    let mut w = csv::Writer::from_path(&a.out).map_err(|e| Error::Invalid(format!("{}: {e}", a.out.display())))?;
    let csv_err = |e: csv::Error| Error::Invalid(format!("{}: {e}", a.out.display()));
    w.write_record(["id", "label", "x", "y"]).map_err(csv_err)?;
    for ((id, label), [x, y]) in ids.iter().zip(&labels).zip(coords) {
        w.write_record([id.as_str(), label.as_str(), &x.to_string(), &y.to_string()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(&a.out, e))
}
