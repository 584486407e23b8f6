//! One PASS/FAIL line per acceptance criterion. Runs without the libtest
//! harness so the lines are always printed.

mod common;

use std::cell::OnceCell;
use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use discre::corpus::{
    default_posterior_table, load_posterior_table, LabelVocab, Level, PosteriorTable, RawMessage,
    DEFAULT_KEYWORDS,
};
use discre::instances::{build_training_set_with, InstanceKind, TargetDistribution, TrainingInstance};
use discre::model::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, train, Model, ModelConfig};
use discre::probe::{attention_stats, f1_metrics, kfold_cv, FeatureMatrix, LinearConfig, WordGroup};
use discre::segment::{segment_message, SegmentedMessage};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn labels(sizes: [usize; 3]) -> LabelVocab {
    let names = |p: &str, n: usize| (0..n).map(|i| format!("{p}{i}")).collect();
    LabelVocab {
        class: names("C", sizes[0]),
        type_: names("T", sizes[1]),
        subtype: names("S", sizes[2]),
    }
}

fn random_instance<R: Rng>(rng: &mut R, sizes: [usize; 3]) -> TrainingInstance {
    let vocab = common::vocabulary();
    let k = rng.gen_range(2..=5);
    let context: Vec<Vec<String>> = (0..k)
        .map(|_| (0..rng.gen_range(1..=7)).map(|_| vocab.choose(rng).unwrap().clone()).collect())
        .collect();
    let a1 = rng.gen_range(0..k);
    let a2 = (a1 + rng.gen_range(1..k)) % k;
    let mut dist = |n: usize| {
        let raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / s).collect()
    };
    let levels = sizes.map(&mut dist);
    TrainingInstance {
        message_id: "rand".into(),
        context,
        arg1_idx: a1,
        arg2_idx: a2,
        targets: TargetDistribution { levels },
        kind: InstanceKind::Explicit,
        connective: "because".into(),
    }
}

fn tiny_model(d: usize, h: usize, sizes: [usize; 3], seed: u64) -> Model {
    let config = ModelConfig { d_word: d, d_hidden: h, levels: sizes, seed, ..ModelConfig::default() };
    Model::new(config, labels(sizes), common::random_vectors(d, seed + 1)).unwrap()
}

fn gradient_oracle() -> Outcome {
    let start = Instant::now();
    let sizes = [4, 6, 8];
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for s in 0..3u64 {
        let model = tiny_model(8, 8, sizes, 10 + s);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let inst = random_instance(&mut rng, sizes);
        let (_, grad) = ok(model.gradients(&inst))?;
        let lens: Vec<usize> = model.params.tensors().iter().map(|t| t.data.len()).collect();
        let total: usize = lens.iter().sum();
        let mut done = 0;
        while done < 30 {
            let mut flat = rng.gen_range(0..total);
            let mut ti = 0;
            while flat >= lens[ti] {
                flat -= lens[ti];
                ti += 1;
            }
            let mut m = model.clone();
            let orig = m.params.tensors()[ti].data[flat];
            m.params.tensors_mut()[ti].data[flat] = orig + h;
            let lp = ok(m.instance_loss(&inst))?;
            let pattern = ok(m.relu_pattern(&inst.context))?;
            m.params.tensors_mut()[ti].data[flat] = orig - h;
            let lm = ok(m.instance_loss(&inst))?;
            // A step across a ReLU kink has no derivative to compare against.
            if pattern != ok(m.relu_pattern(&inst.context))? {
                continue;
            }
            let numeric = (lp - lm) / (2.0 * h);
            let analytic = grad.tensors()[ti].data[flat];
            worst = worst.max((analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6));
            done += 1;
        }
        checked += done;
    }
    let elapsed = start.elapsed();
    ensure!(worst < 1e-4, "max relative error {worst:.3e} over {checked} coordinates");
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!("{checked} coordinates, max relative error {worst:.2e}, {elapsed:.1?}"))
}

const TWO_CONNECTIVE_TABLE: &str = "\
class\tbecause\tContingency\t0.8
class\tbecause\tTemporal\t0.2
class\tbut\tComparison\t0.9
class\tbut\tExpansion\t0.1
type\tbecause\tCause\t1
type\tbut\tContrast\t0.7
type\tbut\tConcession\t0.3
subtype\tbecause\tReason\t0.6
subtype\tbecause\tResult\t0.4
subtype\tbut\tjuxtaposition\t0.75
subtype\tbut\topposition\t0.25
";

fn segment_all(msgs: &[RawMessage], table: &PosteriorTable) -> Vec<SegmentedMessage> {
    msgs.iter().map(|m| segment_message(m, table)).collect()
}

fn overfit() -> Outcome {
    let start = Instant::now();
    let table = ok(PosteriorTable::parse(TWO_CONNECTIVE_TABLE, Path::new("two-connectives")))?;
    let segs = segment_all(&common::two_family_corpus(20, 5), &table);
    let set = build_training_set_with(&segs, &table, 0.0);
    ensure!(!set.train.is_empty(), "no instances");
    let bound = set.train.iter().map(|i| i.targets.entropy()).sum::<f64>() / set.train.len() as f64;
    let config = ModelConfig {
        d_word: 8,
        d_hidden: 8,
        levels: table.labels().sizes(),
        epochs: 500,
        seed: 7,
        ..ModelConfig::default()
    };
    let mut model = ok(Model::new(config, table.labels().clone(), common::random_vectors(8, 3)))?;
    ok(train(&mut model, &set.train, &[]))?;
    let loss = ok(model.mean_loss(&set.train))?;
    let mut hits = 0;
    for inst in &set.train {
        let out = ok(model.forward(&inst.context, inst.arg1_idx, inst.arg2_idx))?;
        if (TargetDistribution { levels: out.probs.clone() }).argmax() == inst.targets.argmax() {
            hits += 1;
        }
    }
    let elapsed = start.elapsed();
    let gap = loss - bound;
    ensure!(gap.abs() < 1e-2, "loss {loss:.5} vs minimum {bound:.5}");
    ensure!(hits == set.train.len(), "argmax matched on {hits}/{}", set.train.len());
    ensure!(elapsed < Duration::from_secs(120), "took {elapsed:?}");
    Ok(format!(
        "{} instances, gap {gap:.1e}, argmax {hits}/{}, {elapsed:.1?}",
        set.train.len(),
        set.train.len()
    ))
}

/// The model and corpus shared by the probe and attention criteria.
struct Probed {
    model: Model,
    segments: Vec<SegmentedMessage>,
    features: FeatureMatrix,
    ids: Vec<String>,
}

fn probe_setup() -> Result<Probed, String> {
    let table = default_posterior_table();
    let segments = segment_all(&common::two_family_corpus(200, 1), &table);
    let set = build_training_set_with(&segments, &table, 0.1);
    let config = ModelConfig {
        d_word: 16,
        d_hidden: 16,
        levels: table.labels().sizes(),
        epochs: 15,
        learning_rate: 5e-3,
        seed: 7,
        ..ModelConfig::default()
    };
    let mut model = ok(Model::new(config, table.labels().clone(), common::random_vectors(16, 1)))?;
    ok(train(&mut model, &set.train, &set.dev))?;

    let mut rows = Vec::new();
    let mut y = Vec::new();
    let mut ids = Vec::new();
    for m in &segments {
        let pair = m.pairs.iter().find(|p| p.connective.is_some()).ok_or(format!("{}: no explicit pair", m.id))?;
        rows.push(ok(model.extract_discre(m, pair))?);
        y.push(m.label.clone().unwrap());
        ids.push(m.id.clone());
    }
    let features = ok(FeatureMatrix::new(rows, y))?;
    Ok(Probed { model, segments, features, ids })
}

fn discriminability(p: &Probed) -> Outcome {
    let cfg = LinearConfig::default();
    let real = ok(kfold_cv(&p.features, &p.ids, 5, cfg))?.report.macro_f1;
    let mut shuffled_labels = p.features.labels.clone();
    shuffled_labels.shuffle(&mut ChaCha8Rng::seed_from_u64(99));
    let shuffled = ok(FeatureMatrix::new(p.features.rows.clone(), shuffled_labels))?;
    let null = ok(kfold_cv(&shuffled, &p.ids, 5, cfg))?.report.macro_f1;
    ensure!(real >= 0.9, "macro F1 {real:.3} < 0.9");
    ensure!(null <= 0.6, "shuffled macro F1 {null:.3} > 0.6");
    Ok(format!("macro F1 {real:.3}, shuffled {null:.3}"))
}

fn segmentation_golden() -> Outcome {
    use common::golden::GOLDEN;
    let table = default_posterior_table();
    let mut failures = Vec::new();
    for g in GOLDEN {
        let s = segment_message(&RawMessage::text("g", g.text), &table);
        let args: Vec<String> = s.arguments.iter().map(|a| a.join(" ")).collect();
        let pairs: Vec<(usize, usize, Option<&str>)> =
            s.pairs.iter().map(|p| (p.arg1, p.arg2, p.connective.as_deref())).collect();
        if args != g.arguments || pairs != g.pairs {
            failures.push(format!("{} ({:?}): got {args:?} {pairs:?}", g.rule, g.text));
        }
    }
    ensure!(GOLDEN.len() >= 10, "only {} cases", GOLDEN.len());
    ensure!(failures.is_empty(), "{}", failures.join("; "));
    Ok(format!("{} cases", GOLDEN.len()))
}

fn metrics_oracle() -> Outcome {
    let r = ok(f1_metrics(&["A", "A", "B"], &["A", "B", "B"], &["A", "B"]))?;
    ensure!((r.micro_f1 - 2.0 / 3.0).abs() < 1e-9, "micro {}", r.micro_f1);
    ensure!((r.macro_f1 - 2.0 / 3.0).abs() < 1e-9, "macro {}", r.macro_f1);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let classes = ["a", "b", "c", "d", "e"];
    for trial in 0..1000 {
        let k = rng.gen_range(2..=5);
        // The label set may include classes that never occur.
        let scored = &classes[..k];
        let set = &classes[..rng.gen_range(1..=k)];
        let n = rng.gen_range(1..40);
        let gold: Vec<&str> = (0..n).map(|_| *set.choose(&mut rng).unwrap()).collect();
        let pred: Vec<&str> = (0..n).map(|_| *set.choose(&mut rng).unwrap()).collect();
        let r = ok(f1_metrics(&gold, &pred, scored))?;
        let (mut tp, mut fp, mut fnn) = (0usize, 0usize, 0usize);
        for c in scored {
            for (g, p) in gold.iter().zip(&pred) {
                match (g == c, p == c) {
                    (true, true) => tp += 1,
                    (false, true) => fp += 1,
                    (true, false) => fnn += 1,
                    _ => {}
                }
            }
        }
        let expected = if tp == 0 { 0.0 } else { 2.0 * tp as f64 / (2 * tp + fp + fnn) as f64 };
        ensure!((r.micro_f1 - expected).abs() < 1e-9, "trial {trial}: micro {} vs pooled {expected}", r.micro_f1);
        let mean = r.per_class.iter().map(|c| c.f1).sum::<f64>() / scored.len() as f64;
        ensure!((r.macro_f1 - mean).abs() < 1e-9, "trial {trial}: macro mismatch");
    }
    Ok("hand example 0.667, 1000 random pooled sets".into())
}

fn shape_and_simplex() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut inputs = 0;
    for c in 0..3 {
        let d = rng.gen_range(2..=12);
        let h = rng.gen_range(1..=10);
        let sizes = [rng.gen_range(2..=5), rng.gen_range(2..=9), rng.gen_range(2..=12)];
        let model = tiny_model(d, h, sizes, 30 + c);
        for _ in 0..100 {
            let inst = random_instance(&mut rng, sizes);
            let out = ok(model.forward(&inst.context, inst.arg1_idx, inst.arg2_idx))?;
            let v = out.discre_vector();
            ensure!(
                v.len() == 4 * h + sizes.iter().sum::<usize>(),
                "config {c}: length {} for h={h} sizes={sizes:?}",
                v.len()
            );
            for (l, p) in out.probs.iter().enumerate() {
                let s: f64 = p.iter().sum();
                ensure!((s - 1.0).abs() < 1e-6, "config {c}: level {l} sums to {s}");
            }
            for a in &out.attention {
                let s: f64 = a.iter().sum();
                ensure!((s - 1.0).abs() < 1e-6, "config {c}: attention sums to {s}");
            }
            inputs += 1;
        }
    }
    Ok(format!("3 configs, {inputs} inputs"))
}

fn run_pipeline(dir: &Path) -> Result<Vec<u8>, String> {
    common::write_corpus(&common::two_family_corpus(30, 4), &dir.join("corpus.jsonl"));
    common::write_vectors(&common::random_vectors(8, 4), &dir.join("vectors.txt"));
    let f = |n: &str| dir.join(n).to_str().unwrap().to_string();
    let steps: [Vec<String>; 4] = [
        vec!["segment".into(), "--in".into(), f("corpus.jsonl"), "--out".into(), f("seg.jsonl")],
        vec![
            "gen-instances".into(), "--segments".into(), f("seg.jsonl"), "--out".into(), f("train.jsonl"),
            "--dev".into(), f("dev.jsonl"),
        ],
        vec![
            "train".into(), "--train".into(), f("train.jsonl"), "--dev".into(), f("dev.jsonl"), "--vectors".into(),
            f("vectors.txt"), "--out".into(), f("model.ckpt"), "--hidden".into(), "6".into(), "--epochs".into(),
            "4".into(), "--seed".into(), "3".into(),
        ],
        vec!["embed".into(), "--model".into(), f("model.ckpt"), "--segments".into(), f("seg.jsonl"), "--out".into(), f("emb.jsonl")],
    ];
    for step in steps {
        let code = discre::cli::dispatch(["discre", "--log-level", "warn"].map(String::from).into_iter().chain(step.iter().cloned()));
        ensure!(code == 0, "{} exited with {code}", step[0]);
    }
    ok(std::fs::read(dir.join("emb.jsonl")))
}

fn determinism() -> Outcome {
    let a = ok(tempfile::tempdir())?;
    let b = ok(tempfile::tempdir())?;
    let ea = run_pipeline(a.path())?;
    let eb = run_pipeline(b.path())?;
    ensure!(!ea.is_empty(), "empty embeddings file");
    ensure!(ea == eb, "embeddings differ between runs");

    let model = ok(load_checkpoint(a.path().join("model.ckpt")))?;
    let copy = a.path().join("copy.ckpt");
    ok(save_checkpoint(&model, &copy))?;
    let reloaded = ok(load_checkpoint(&copy))?;
    ensure!(ok(encode_checkpoint(&model))? == ok(std::fs::read(&copy))?, "re-save changed bytes");
    let table = default_posterior_table();
    let segs = segment_all(&common::two_family_corpus(30, 4), &table);
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for m in &segs {
        for pair in m.adjacent_pairs() {
            let x = ok(model.extract_discre(m, &pair))?;
            let y = ok(reloaded.extract_discre(m, &pair))?;
            for (p, q) in x.iter().zip(&y) {
                worst = worst.max((p - q).abs());
            }
            n += 1;
        }
    }
    ensure!(worst <= 1e-12, "extract_discre differs by {worst:e}");
    let round = ok(decode_checkpoint(&ok(encode_checkpoint(&reloaded))?))?;
    ensure!(round.params == model.params, "parameters not bit-exact");
    Ok(format!("{} byte embeddings identical, {n} pairs bit-exact after reload", ea.len()))
}

fn posterior_hygiene() -> Outcome {
    let dir = ok(tempfile::tempdir())?;
    let path = dir.path().join("counts.tsv");
    // Raw counts; the loader normalizes them.
    std::fs::write(&path, "class\tso\tContingency\t30\nclass\tso\tExpansion\t7\ntype\tso\tCause\t5\nsubtype\tso\tResult\t2\nsubtype\tso\tReason\t1\n")
        .unwrap();
    let loaded = ok(load_posterior_table(&path))?;
    let mut rows = 0;
    for table in [&loaded, &default_posterior_table()] {
        for conn in table.connectives() {
            for level in Level::ALL {
                // Absent levels fall back to a uniform target at labeling time.
                let Some(p) = table.posterior(conn, level) else {
                    ensure!(level != Level::Class, "{conn}: no class row");
                    continue;
                };
                let s: f64 = p.iter().sum();
                ensure!((s - 1.0).abs() < 1e-9, "{conn} {level:?} sums to {s}");
                rows += 1;
            }
        }
    }

    let table = default_posterior_table();
    let segs = segment_all(&common::two_family_corpus(200, 8), &table);
    let set = build_training_set_with(&segs, &table, 0.1);
    let all: Vec<&TrainingInstance> = set.train.iter().chain(&set.dev).collect();
    let mut kinds: BTreeMap<&str, usize> = BTreeMap::new();
    for inst in &all {
        let conn_tokens: Vec<&str> = inst.connective.split(' ').collect();
        match inst.kind {
            InstanceKind::Explicit => *kinds.entry("explicit").or_default() += 1,
            InstanceKind::Implicit => {
                *kinds.entry("implicit").or_default() += 1;
                ensure!(
                    !inst.arg2().windows(conn_tokens.len()).any(|w| w.iter().eq(conn_tokens.iter())),
                    "{}: implicit Arg2 {:?} still has {:?}",
                    inst.message_id,
                    inst.arg2(),
                    inst.connective
                );
                ensure!(!inst.arg2().is_empty(), "{}: empty implicit Arg2", inst.message_id);
            }
        }
    }
    let explicit = kinds.get("explicit").copied().unwrap_or(0);
    let implicit = kinds.get("implicit").copied().unwrap_or(0);
    ensure!(explicit > 0 && implicit > 0, "explicit {explicit}, implicit {implicit}");
    Ok(format!("{rows} posterior rows, {explicit} explicit, {implicit} implicit clean"))
}

fn attention_sanity(p: &Probed) -> Outcome {
    let table = default_posterior_table();
    let stats = ok(attention_stats(&p.segments, &p.model, &DEFAULT_KEYWORDS, Some(&table)))?;
    let connective = stats.pooled_mean(&[WordGroup::KeyDc, WordGroup::NonKeyDc]).ok_or("no connective words")?;
    let other = stats.pooled_mean(&[WordGroup::Other]).ok_or("no other words")?;
    ensure!(connective > other, "connective {connective:.4} <= other {other:.4}");
    Ok(format!("connective {connective:.3} > other {other:.3}"))
}

fn main() {
    let start = Instant::now();
    let probed: OnceCell<Result<Probed, String>> = OnceCell::new();
    let shared = || probed.get_or_init(probe_setup).as_ref().map_err(Clone::clone);
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut record = |n: u32, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or(e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or("panic".into()))
        });
        let (tag, detail) = match &r {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("criterion {n} [{name}]: {tag} ({detail})");
        results.push((n, name, r));
    };
    record(1, "gradient oracle", &mut gradient_oracle);
    record(2, "loss bound and overfit", &mut overfit);
    record(3, "discriminability probe", &mut || {
        let t = Instant::now();
        let d = discriminability(shared()?)?;
        let e = t.elapsed();
        ensure!(e < Duration::from_secs(300), "took {e:?}");
        Ok(format!("{d}, {e:.1?}"))
    });
    record(4, "segmentation golden suite", &mut segmentation_golden);
    record(5, "metrics oracle", &mut metrics_oracle);
    record(6, "shape and simplex", &mut shape_and_simplex);
    record(7, "determinism and persistence", &mut determinism);
    record(8, "posterior hygiene", &mut posterior_hygiene);
    record(9, "attention sanity", &mut || attention_sanity(shared()?));
    let failed = results.iter().filter(|r| r.2.is_err()).count();
    println!("acceptance: {} passed, {failed} failed in {:.1?}", results.len() - failed, start.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}
