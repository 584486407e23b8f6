mod common;

use std::path::Path;

use discre::corpus::{
    build_training_corpus, default_posterior_table, LabelVocab, Level, PosteriorTable, RawMessage,
    WordVectorTable,
};
use discre::instances::{
    build_training_set_with, is_dev_message, InstanceKind, TargetDistribution, TrainingInstance,
};
use discre::model::{loss, LevelOutputs, LossKind, Model, ModelConfig};
use discre::probe::{
    f1_metrics, kfold_cv, message_features, train_linear, FeatureMatrix, LinearConfig,
};
use discre::segment::{
    detect_connectives, message_tokens, segment_message, segment_tokens, SegmentedMessage, URL_TOKEN,
    USER_TOKEN,
};
use proptest::prelude::*;
use proptest::sample::{select, subsequence};

const PIECES: &[&str] = &[
    "i", "we", "she", "like", "saw", "is", "was", "the", "dog", "cake", "happy", "Tired", "because",
    "but", "if", "when", "and", "so", "then", "for example", "as soon as", ".", ",", "!", "?", "😂",
    "🎉", "@bob", "http://t.co/x", "#win", "lol", "Because",
];

fn message_text() -> impl Strategy<Value = String> {
    prop::collection::vec((select(PIECES), prop::bool::weighted(0.8)), 0..24).prop_map(|parts| {
        let mut s = String::new();
        for (p, space) in parts {
            if space && !s.is_empty() {
                s.push(' ');
            }
            s.push_str(p);
        }
        s
    })
}

fn distribution(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.01f64..1.0], n).prop_map(|mut v| {
        if v.iter().all(|&x| x == 0.0) {
            v[0] = 1.0;
        }
        let s: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= s);
        v
    })
}

fn labels(sizes: [usize; 3]) -> LabelVocab {
    let names = |p: &str, n: usize| (0..n).map(|i| format!("{p}{i}")).collect();
    LabelVocab {
        class: names("C", sizes[0]),
        type_: names("T", sizes[1]),
        subtype: names("S", sizes[2]),
    }
}

fn small_model(d: usize, h: usize, sizes: [usize; 3], seed: u64) -> Model {
    let config = ModelConfig {
        d_word: d,
        d_hidden: h,
        levels: sizes,
        seed,
        ..ModelConfig::default()
    };
    Model::new(config, labels(sizes), common::random_vectors(d, seed)).unwrap()
}

fn context() -> impl Strategy<Value = (Vec<Vec<String>>, usize, usize)> {
    let vocab = common::vocabulary();
    let word = prop_oneof![9 => select(vocab), 1 => Just("unseen-word".to_string())];
    prop::collection::vec(prop::collection::vec(word, 1..6), 2..5).prop_flat_map(|ctx| {
        let k = ctx.len();
        (Just(ctx), 0..k, 1..k).prop_map(move |(c, a1, off)| (c, a1, (a1 + off) % k))
    })
}

fn segmented(texts: &[String]) -> Vec<SegmentedMessage> {
    let table = default_posterior_table();
    texts
        .iter()
        .enumerate()
        .map(|(i, t)| segment_message(&RawMessage::text(format!("m{i}"), t.clone()), &table))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn parsed_posteriors_are_normalized(
        counts in prop::collection::vec((select(&["so", "but", "for example"][..]), 0usize..3, 0usize..4, 1u32..50), 1..20)
    ) {
        let level_names = ["class", "type", "subtype"];
        let mut text = String::new();
        for (conn, level, label, n) in &counts {
            text.push_str(&format!("{}\t{conn}\tL{label}\t{n}\n", level_names[*level]));
        }
        // Every connective needs a class row and every level a label.
        text.push_str("class\tso\tL0\t1\ntype\tso\tL0\t1\nsubtype\tso\tL0\t1\n");
        for (conn, ..) in &counts {
            text.push_str(&format!("class\t{conn}\tL0\t1\n"));
        }
        let table = PosteriorTable::parse(&text, Path::new("p")).unwrap();
        for conn in table.connectives() {
            prop_assert!(table.posterior(conn, Level::Class).is_some());
            for level in Level::ALL {
                if let Some(p) = table.posterior(conn, level) {
                    prop_assert!(p.iter().all(|&x| x >= 0.0));
                    prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn vector_lookup_is_total(token in "\\PC{0,12}", dim in 1usize..6) {
        let table: WordVectorTable = common::random_vectors(dim, 1);
        let v = table.lookup(&token);
        prop_assert_eq!(v.len(), dim);
        if !table.contains(&token) {
            prop_assert_eq!(v, table.unk_vector());
        }
    }

    #[test]
    fn training_corpus_is_idempotent_and_capped(texts in prop::collection::vec(message_text(), 0..30), cap in 1usize..4) {
        let corpus: Vec<RawMessage> = texts.iter().enumerate().map(|(i, t)| RawMessage::text(format!("m{i}"), t.clone())).collect();
        let keywords = ["because", "but", "for example", "if"];
        let once = build_training_corpus(&corpus, &keywords, cap).unwrap();
        let twice = build_training_corpus(&once, &keywords, cap).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert!(once.len() <= cap * keywords.len());
    }

    #[test]
    fn tokens_are_well_formed(text in message_text()) {
        for t in message_tokens(&RawMessage::text("t", text.clone())) {
            prop_assert!(!t.text.is_empty());
            prop_assert!(t.span.0 < t.span.1);
            if t.is_url { prop_assert_eq!(t.text.as_str(), URL_TOKEN); }
            if t.is_mention { prop_assert_eq!(t.text.as_str(), USER_TOKEN); }
        }
    }

    #[test]
    fn segmentation_covers_message(text in message_text()) {
        let table = default_posterior_table();
        let tokens = message_tokens(&RawMessage::text("t", text.clone()));
        let seg = segment_tokens(&tokens, &table);

        // Every non-whitespace character is inside some token.
        let chars: Vec<char> = text.chars().collect();
        let mut covered = vec![false; chars.len()];
        for t in &tokens {
            covered[t.span.0..t.span.1].iter_mut().for_each(|c| *c = true);
        }
        for (i, c) in chars.iter().enumerate() {
            prop_assert!(c.is_whitespace() || covered[i], "char {i} {c:?} not in any token");
        }

        // Arguments partition the tokens in order.
        if tokens.is_empty() {
            prop_assert!(seg.is_empty());
        } else {
            prop_assert!(!seg.arguments.is_empty());
            let mut next = 0;
            for a in &seg.arguments {
                prop_assert_eq!(a.start, next);
                prop_assert!(a.end > a.start);
                next = a.end;
            }
            prop_assert_eq!(next, tokens.len());
        }
        for p in &seg.pairs {
            prop_assert!(p.arg1 < seg.arguments.len() && p.arg2 < seg.arguments.len() && p.arg1 != p.arg2);
        }
    }

    #[test]
    fn explicit_pairs_hold_connective_and_verbs(text in message_text()) {
        let table = default_posterior_table();
        let tokens = message_tokens(&RawMessage::text("t", text.clone()));
        let seg = segment_tokens(&tokens, &table);
        for p in seg.pairs.iter() {
            let Some(conn) = &p.connective else { continue };
            let words: Vec<&str> = conn.split(' ').collect();
            let arg2 = &tokens[seg.arguments[p.arg2].range()];
            let arg1 = &tokens[seg.arguments[p.arg1].range()];
            prop_assert!(
                arg2.windows(words.len()).any(|w| w.iter().map(|t| t.text.as_str()).eq(words.iter().copied())),
                "connective {conn:?} not inside Arg2"
            );
            prop_assert!(arg2.iter().any(|t| t.is_verb()), "Arg2 without verb");
            prop_assert!(arg1.iter().any(|t| t.is_verb()), "Arg1 without verb");
        }
        for m in detect_connectives(&tokens, &table) {
            prop_assert!(m.start < m.end && m.end <= tokens.len());
            if let Some(entry) = &m.lexicon_entry {
                prop_assert!(table.contains(entry));
            }
        }
    }

    #[test]
    fn segmentation_is_deterministic(text in message_text()) {
        let table = default_posterior_table();
        let m = RawMessage::text("t", text);
        prop_assert_eq!(segment_message(&m, &table), segment_message(&m, &table));
    }

    #[test]
    fn generated_instances_conserve_targets(texts in prop::collection::vec(message_text(), 1..20)) {
        let table = default_posterior_table();
        let segs = segmented(&texts);
        let set = build_training_set_with(&segs, &table, 0.3);
        let all: Vec<&TrainingInstance> = set.train.iter().chain(&set.dev).collect();
        for inst in &all {
            prop_assert_ne!(inst.arg1_idx, inst.arg2_idx);
            for level in Level::ALL {
                let w = inst.targets.level(level);
                prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
                let y = inst.targets.support(level);
                prop_assert!(w.iter().zip(&y).all(|(&wj, &yj)| yj == (wj > 0.0)));
            }
        }
        let explicit: Vec<&&TrainingInstance> = all.iter().filter(|i| i.kind == InstanceKind::Explicit).collect();
        let implicit: Vec<&&TrainingInstance> = all.iter().filter(|i| i.kind == InstanceKind::Implicit).collect();
        prop_assert!(implicit.len() <= explicit.len());
        for imp in implicit {
            let src = explicit.iter().find(|e| {
                e.message_id == imp.message_id && e.arg1_idx == imp.arg1_idx && e.arg2_idx == imp.arg2_idx
            });
            prop_assert!(src.is_some(), "implicit instance without explicit source");
            let src = src.unwrap();
            prop_assert_eq!(&src.targets, &imp.targets);
            prop_assert_eq!(&src.connective, &imp.connective);
            for (k, (a, b)) in src.context.iter().zip(&imp.context).enumerate() {
                if k != imp.arg2_idx {
                    prop_assert_eq!(a, b);
                }
            }
            prop_assert_ne!(src.arg2(), imp.arg2());
        }
    }

    #[test]
    fn dev_split_depends_only_on_id(id in "\\PC{0,16}", other in "\\PC{0,16}") {
        let table = default_posterior_table();
        let a = is_dev_message(&id, 0.1);
        prop_assert_eq!(a, is_dev_message(&id, 0.1));
        // Same id with different content lands on the same side.
        let m1 = segment_message(&RawMessage::text(id.clone(), "i left because i was tired"), &table);
        let m2 = segment_message(&RawMessage::text(id.clone(), format!("{other} but she is happy")), &table);
        let s = build_training_set_with(&[m1, m2], &table, 0.1);
        prop_assert!(s.dev.iter().all(|i| a && i.message_id == id));
        prop_assert!(s.train.iter().all(|i| !a && i.message_id == id));
    }

    #[test]
    fn loss_is_at_least_target_entropy(
        (w, f) in (2usize..6, 2usize..6, 2usize..6).prop_flat_map(|(a, b, c)| (
            (distribution(a), distribution(b), distribution(c)),
            (distribution(a), distribution(b), distribution(c)),
        ))
    ) {
        let targets = TargetDistribution { levels: [w.0, w.1, w.2] };
        let outputs = LevelOutputs {
            probs: [f.0, f.1, f.2],
            attention: vec![],
            contextual: vec![],
            arg1_idx: 0,
            arg2_idx: 1,
        };
        let l = loss(&outputs, &targets, LossKind::SoftmaxCe, [1.0; 3]).unwrap();
        prop_assert!(l >= targets.entropy() - 1e-9, "loss {l} < entropy {}", targets.entropy());
    }

    #[test]
    fn micro_f1_matches_pooled_counts(
        pairs in prop::collection::vec((0usize..4, 0usize..4), 1..60),
        k in 1usize..4,
    ) {
        let names = ["a", "b", "c", "d"];
        let gold: Vec<&str> = pairs.iter().map(|p| names[p.0]).collect();
        let pred: Vec<&str> = pairs.iter().map(|p| names[p.1]).collect();
        let r = f1_metrics(&gold, &pred, &names).unwrap();
        let tp = pairs.iter().filter(|p| p.0 == p.1).count() as f64;
        let n = pairs.len() as f64;
        // With every label scored, each miss is one FP and one FN.
        prop_assert!((r.micro_f1 - 2.0 * tp / (2.0 * tp + 2.0 * (n - tp))).abs() < 1e-12);
        for c in &r.per_class {
            prop_assert!((0.0..=1.0).contains(&c.precision) && (0.0..=1.0).contains(&c.recall) && (0.0..=1.0).contains(&c.f1));
        }
        // Rotating the label set changes neither score.
        let mut rotated = names.to_vec();
        rotated.rotate_left(k);
        let r2 = f1_metrics(&gold, &pred, &rotated).unwrap();
        prop_assert!((r.macro_f1 - r2.macro_f1).abs() < 1e-12);
        prop_assert!((r.micro_f1 - r2.micro_f1).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn outputs_are_simplices_and_vector_has_fixed_length(
        d in 2usize..8, h in 1usize..6, sizes in (2usize..5, 2usize..6, 2usize..8), seed in 0u64..1000,
        (ctx, a1, a2) in context(),
    ) {
        let sizes = [sizes.0, sizes.1, sizes.2];
        let model = small_model(d, h, sizes, seed);
        let out = model.forward(&ctx, a1, a2).unwrap();
        for p in &out.probs {
            prop_assert!(p.iter().all(|&x| x >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
        }
        prop_assert_eq!(out.attention.len(), ctx.len());
        for a in &out.attention {
            prop_assert!((a.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
        }
        let v = model.discre_vector(&ctx, a1, a2).unwrap();
        prop_assert_eq!(v.len(), 4 * h + sizes.iter().sum::<usize>());
        prop_assert_eq!(v, out.discre_vector());
    }

    #[test]
    fn message_features_ignore_pair_order(texts in prop::collection::vec(message_text(), 1..6), seed in 0u64..100) {
        let model = small_model(4, 3, [4, 16, 23], seed);
        for mut m in segmented(&texts) {
            if m.arguments.len() < 2 || m.arguments.iter().any(|a| a.is_empty()) {
                continue;
            }
            let before = message_features(&m, &model).unwrap();
            m.pairs.reverse();
            let after = message_features(&m, &model).unwrap();
            prop_assert_eq!(before, after);
        }
    }

    #[test]
    fn cv_predictions_never_see_held_out_labels(
        rows in prop::collection::vec((prop::collection::vec(-1.0f64..1.0, 3), 0usize..3), 12..30),
        seed in 0u64..50,
        order in subsequence((0..6).collect::<Vec<usize>>(), 6),
    ) {
        let names = ["x", "y", "z"];
        let labels: Vec<String> = rows.iter().map(|r| names[r.1].to_string()).collect();
        prop_assume!(labels.iter().collect::<std::collections::BTreeSet<_>>().len() >= 2);
        let data = FeatureMatrix::new(rows.iter().map(|r| r.0.clone()).collect(), labels.clone()).unwrap();
        let ids: Vec<String> = (0..rows.len()).map(|i| format!("r{i}")).collect();
        let cfg = LinearConfig { epochs: 20, seed, ..LinearConfig::default() };
        let cv = kfold_cv(&data, &ids, 3, cfg).unwrap();
        for f in 0..3 {
            let held: Vec<usize> = (0..rows.len()).filter(|&i| cv.folds[i] == f).collect();
            let kept: Vec<usize> = (0..rows.len()).filter(|&i| cv.folds[i] != f).collect();
            if held.is_empty() || kept.iter().map(|&i| &labels[i]).collect::<std::collections::BTreeSet<_>>().len() < 2 {
                continue;
            }
            // Scramble the held-out labels, then retrain on the other folds.
            let mut scrambled = labels.clone();
            for (j, &i) in held.iter().enumerate() {
                scrambled[i] = names[(order[j % order.len()] + j) % 3].to_string();
            }
            let noisy = FeatureMatrix::new(data.rows.clone(), scrambled).unwrap();
            let model = train_linear(&noisy.subset(&kept), cfg).unwrap();
            for &i in &held {
                prop_assert_eq!(model.predict(&data.rows[i]), cv.predictions[i].as_str());
            }
        }
    }

    #[test]
    fn linear_training_is_deterministic(
        rows in prop::collection::vec((prop::collection::vec(-1.0f64..1.0, 2), prop::bool::ANY), 4..20),
        seed in 0u64..100,
    ) {
        let labels: Vec<String> = rows.iter().map(|r| if r.1 { "p" } else { "n" }.to_string()).collect();
        prop_assume!(labels.iter().any(|l| l == "p") && labels.iter().any(|l| l == "n"));
        let data = FeatureMatrix::new(rows.iter().map(|r| r.0.clone()).collect(), labels).unwrap();
        let cfg = LinearConfig { epochs: 10, seed, ..LinearConfig::default() };
        let a = train_linear(&data, cfg).unwrap();
        let b = train_linear(&data, cfg).unwrap();
        prop_assert_eq!(a.weights, b.weights);
        prop_assert_eq!(a.biases, b.biases);
    }
}
