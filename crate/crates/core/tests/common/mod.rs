//! Synthetic corpora and word vectors shared by the integration tests.
#![allow(dead_code)]

pub mod golden;

use std::io::Write;
use std::path::Path;

use discre::corpus::{MessageContent, RawMessage, WordVectorTable};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SUBJECTS: [&str; 5] = ["i", "we", "they", "she", "he"];
pub const VERBS: [&str; 6] = ["like", "love", "saw", "made", "want", "got"];
pub const OBJECTS: [&str; 6] = ["the dog", "the cake", "the game", "my friend", "the movie", "the car"];
pub const COPULAS: [&str; 3] = ["is", "was", "are"];
pub const ADJECTIVES: [&str; 8] = ["happy", "sad", "tired", "kind", "funny", "late", "busy", "nice"];

/// Every word the generators can emit, plus connectives and punctuation.
pub fn vocabulary() -> Vec<String> {
    let mut words: Vec<String> = SUBJECTS
        .iter()
        .chain(&VERBS)
        .chain(&COPULAS)
        .chain(&ADJECTIVES)
        .map(|s| s.to_string())
        .collect();
    for o in OBJECTS {
        words.extend(o.split(' ').map(str::to_string));
    }
    words.extend(["because", "but", "so", "and", ".", ","].map(str::to_string));
    words.sort();
    words.dedup();
    words
}

pub fn random_vectors(dim: usize, seed: u64) -> WordVectorTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    WordVectorTable::from_entries(
        dim,
        vocabulary()
            .into_iter()
            .map(|w| (w, (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())),
    )
    .unwrap()
}

pub fn write_vectors(table: &WordVectorTable, path: &Path) {
    let mut f = std::fs::File::create(path).unwrap();
    let d = table.dim();
    for (i, w) in table.words().iter().enumerate() {
        let row: Vec<String> = table.raw_data()[i * d..(i + 1) * d].iter().map(|x| format!("{x}")).collect();
        writeln!(f, "{w} {}", row.join(" ")).unwrap();
    }
}

fn clause<R: Rng>(rng: &mut R) -> String {
    format!(
        "{} {} {}",
        SUBJECTS.choose(rng).unwrap(),
        VERBS.choose(rng).unwrap(),
        OBJECTS.choose(rng).unwrap()
    )
}

fn state<R: Rng>(rng: &mut R) -> String {
    format!(
        "{} {} {}",
        SUBJECTS.choose(rng).unwrap(),
        COPULAS.choose(rng).unwrap(),
        ADJECTIVES.choose(rng).unwrap()
    )
}

/// Messages of the form `<clause> <connective> <state>`, optionally followed
/// by a connective-free sentence. Both families draw from the same content
/// vocabulary, so only the connective separates them. Labels are "cause"
/// (because) and "contrast" (but), alternating.
pub fn two_family_corpus(n: usize, seed: u64) -> Vec<RawMessage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let (conn, label) = if i % 2 == 0 { ("because", "cause") } else { ("but", "contrast") };
            let mut text = format!("{} {conn} {}", clause(&mut rng), state(&mut rng));
            if rng.gen_bool(0.3) {
                text.push_str(&format!(". {}", clause(&mut rng)));
            }
            RawMessage {
                id: format!("syn-{i:04}"),
                content: MessageContent::Text(text),
                label: Some(label.to_string()),
            }
        })
        .collect()
}

pub fn write_corpus(messages: &[RawMessage], path: &Path) {
    let mut f = std::fs::File::create(path).unwrap();
    for m in messages {
        let MessageContent::Text(text) = &m.content else {
            panic!("synthetic messages are plain text");
        };
        let mut rec = serde_json::json!({ "id": m.id, "text": text });
        if let Some(l) = &m.label {
            rec["label"] = serde_json::Value::String(l.clone());
        }
        writeln!(f, "{rec}").unwrap();
    }
}
