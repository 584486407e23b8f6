use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::token::{Tag, Token};
use crate::corpus::PosteriorTable;

/// Arguments beyond this count are folded into the last kept argument.
pub const MAX_ARGUMENTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Position {
    /// Connective opens the message; Arg2 runs from the message start to
    /// the token index `arg2_end` (exclusive).
    Begin { arg2_end: usize },
    /// Connective splits the text: Arg1 ends where the connective starts.
    Middle,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectiveMention {
    /// Contiguous token indices of the connective.
    pub start: usize,
    pub end: usize,
    /// The matched table connective. `None` only for a coordinating
    /// conjunction (ARK `&`) that is not itself in the table.
    pub lexicon_entry: Option<String>,
    pub position: Position,
}

impl ConnectiveMention {
    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscourseArgument {
    pub start: usize,
    pub end: usize,
    pub is_emoji: bool,
}

impl DiscourseArgument {
    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }
}

/// An `(Arg1, Arg2)` pair over argument indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgPair {
    pub arg1: usize,
    pub arg2: usize,
    pub connective: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ArgumentSegmentation {
    pub arguments: Vec<DiscourseArgument>,
    pub pairs: Vec<ArgPair>,
}

impl ArgumentSegmentation {
    pub fn is_empty(&self) -> bool {
        self.arguments.is_empty()
    }
}

/// A maximal emoji run, or one sentence of text.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Unit {
    range: Range<usize>,
    emoji: bool,
}

fn is_sentence_final(token: &Token) -> bool {
    token.is_punct() && matches!(token.text.as_str(), "." | "!" | "?" | "…")
}

fn units(tokens: &[Token]) -> Vec<Unit> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let start = i;
        if tokens[i].is_emoji {
            while i < tokens.len() && tokens[i].is_emoji {
                i += 1;
            }
            out.push(Unit {
                range: start..i,
                emoji: true,
            });
            continue;
        }
        // One sentence: up to and including a run of sentence-final punctuation.
        while i < tokens.len() && !tokens[i].is_emoji && !is_sentence_final(&tokens[i]) {
            i += 1;
        }
        while i < tokens.len() && !tokens[i].is_emoji && is_sentence_final(&tokens[i]) {
            i += 1;
        }
        out.push(Unit {
            range: start..i,
            emoji: false,
        });
    }
    out
}

fn has_verb(tokens: &[Token], range: Range<usize>) -> bool {
    tokens[range].iter().any(Token::is_verb)
}

fn tag(tokens: &[Token], i: usize) -> Option<Tag> {
    tokens.get(i).and_then(|t| t.pos)
}

#[derive(Debug, Clone)]
struct Candidate {
    range: Range<usize>,
    entry: Option<String>,
}

/// Connective candidates in `range`: longest table matches first, then
/// leftmost; plus uncovered coordinating conjunctions.
fn candidates(
    tokens: &[Token],
    range: Range<usize>,
    lexicon: &[(Vec<String>, String)],
) -> Vec<Candidate> {
    let mut matches: Vec<Candidate> = Vec::new();
    for i in range.clone() {
        for (words, entry) in lexicon {
            let end = i + words.len();
            if end <= range.end
                && tokens[i..end]
                    .iter()
                    .zip(words)
                    .all(|(t, w)| t.text == *w)
            {
                matches.push(Candidate {
                    range: i..end,
                    entry: Some(entry.clone()),
                });
            }
        }
    }
    matches.sort_by_key(|c| (std::cmp::Reverse(c.range.len()), c.range.start));
    let mut chosen: Vec<Candidate> = Vec::new();
    for m in matches {
        if chosen
            .iter()
            .all(|c| m.range.end <= c.range.start || c.range.end <= m.range.start)
        {
            chosen.push(m);
        }
    }
    for i in range {
        if tag(tokens, i) == Some(Tag::Coordinating)
            && chosen.iter().all(|c| !c.range.contains(&i))
        {
            chosen.push(Candidate {
                range: i..i + 1,
                entry: None,
            });
        }
    }
    chosen.sort_by_key(|c| c.range.start);
    chosen
}

// Tags that may precede a message-initial connective without blocking the
// Begin rule ("<USER> : because ...", "rt <USER> if ...").
fn is_preamble(tag: Option<Tag>) -> bool {
    matches!(
        tag,
        Some(Tag::Mention | Tag::Discourse | Tag::Punctuation | Tag::Url)
    )
}

/// End (exclusive) of Arg2 for a message-initial connective: the first
/// verb phrase, closed by punctuation, the next connective candidate, or
/// the start of the next clause's subject.
fn begin_arg2_end(
    tokens: &[Token],
    connective: &Range<usize>,
    sentence_end: usize,
    next_candidate: Option<usize>,
) -> Option<usize> {
    let first_verb = (connective.end..sentence_end).find(|&i| tokens[i].is_verb())?;

    // Verb group: auxiliaries, particles, adverbs sandwiched between verbs.
    let mut group_end = first_verb + 1;
    while group_end < sentence_end {
        match tag(tokens, group_end) {
            Some(Tag::Verb | Tag::Particle) => group_end += 1,
            Some(Tag::Adverb)
                if group_end + 1 < sentence_end && tokens[group_end + 1].is_verb() =>
            {
                group_end += 1
            }
            _ => break,
        }
    }

    let mut end = sentence_end;
    if let Some(p) = (first_verb + 1..sentence_end).find(|&i| tokens[i].is_punct()) {
        end = end.min(p + 1);
    }
    if let Some(q) = next_candidate.filter(|&q| q > first_verb) {
        end = end.min(q);
    }
    if let Some(k) = next_clause_start(tokens, group_end, sentence_end) {
        end = end.min(k);
    }
    Some(end)
}

fn next_clause_start(tokens: &[Token], from: usize, to: usize) -> Option<usize> {
    let fused = (from..to).find(|&i| {
        matches!(
            tag(tokens, i),
            Some(Tag::NominalVerbal | Tag::ProperVerbal | Tag::ExistentialVerbal)
        )
    });
    let second_verb = (from..to)
        .find(|&i| tokens[i].is_verb())
        .filter(|&v| v > from);
    let subject = second_verb.and_then(|v| {
        let mut k = v;
        if k > from && matches!(tag(tokens, k - 1), Some(Tag::Pronoun | Tag::ProperNoun | Tag::Existential)) {
            k -= 1;
        } else {
            while k > from
                && matches!(
                    tag(tokens, k - 1),
                    Some(Tag::Noun | Tag::Adjective | Tag::Numeral | Tag::NominalPossessive | Tag::ProperPossessive)
                )
            {
                k -= 1;
            }
            if k < v && k > from && tag(tokens, k - 1) == Some(Tag::Determiner) {
                k -= 1;
            }
        }
        (k < v).then_some(k)
    });
    match (fused, subject) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

fn connective_lexicon(table: &PosteriorTable) -> Vec<(Vec<String>, String)> {
    table
        .connectives()
        .iter()
        .map(|c| (c.split_whitespace().map(str::to_string).collect(), c.clone()))
        .collect()
}

/// Finds connectives and keeps those whose induced Arg1 and Arg2 both
/// contain a verb. Tokens must be tagged.
pub fn detect_connectives(tokens: &[Token], table: &PosteriorTable) -> Vec<ConnectiveMention> {
    let lexicon = connective_lexicon(table);
    let units = units(tokens);
    let mut accepted = Vec::new();

    // Runs of consecutive text sentences; emoji arguments break a run.
    let mut u = 0;
    while u < units.len() {
        if units[u].emoji {
            u += 1;
            continue;
        }
        let run_start = u;
        while u < units.len() && !units[u].emoji {
            u += 1;
        }
        let sentences = &units[run_start..u];
        plan_run(tokens, sentences, &lexicon, &mut accepted);
    }
    accepted
}

fn plan_run(
    tokens: &[Token],
    sentences: &[Unit],
    lexicon: &[(Vec<String>, String)],
    accepted: &mut Vec<ConnectiveMention>,
) {
    let run = sentences[0].range.start..sentences[sentences.len() - 1].range.end;
    let boundaries: Vec<usize> = sentences.iter().map(|s| s.range.start).collect();
    let sentence_end = |i: usize| {
        sentences
            .iter()
            .find(|s| s.range.contains(&i))
            .map_or(run.end, |s| s.range.end)
    };

    let cands = candidates(tokens, run.clone(), lexicon);
    let next_start = |k: usize| cands.get(k + 1).map(|c| c.range.start);

    let mut split = run.start;
    let mut first = 0;

    if let Some(c0) = cands.first() {
        let at_message_start = run.start == 0 && (0..c0.range.start).all(|i| is_preamble(tag(tokens, i)));
        if at_message_start && c0.entry.is_some() {
            let s_end = sentence_end(c0.range.start);
            if let Some(b) = begin_arg2_end(tokens, &c0.range, s_end, next_start(0)) {
                if has_verb(tokens, 0..b) && has_verb(tokens, b..s_end) {
                    accepted.push(ConnectiveMention {
                        start: c0.range.start,
                        end: c0.range.end,
                        lexicon_entry: c0.entry.clone(),
                        position: Position::Begin { arg2_end: b },
                    });
                    split = b;
                    first = 1;
                }
            }
        }
    }

    for (k, cand) in cands.iter().enumerate().skip(first) {
        let start = cand.range.start;
        if start < split {
            continue;
        }
        // Arg1 starts at the latest split before the connective: an accepted
        // mention or a sentence start. For a sentence-initial connective this
        // is the previous sentence.
        let arg1_start = boundaries
            .iter()
            .copied()
            .filter(|&b| b < start)
            .chain(std::iter::once(split))
            .max()
            .unwrap_or(split);
        let arg2_end = next_start(k)
            .unwrap_or(run.end)
            .min(sentence_end(start));
        if arg1_start < start
            && has_verb(tokens, arg1_start..start)
            && has_verb(tokens, start..arg2_end)
        {
            accepted.push(ConnectiveMention {
                start,
                end: cand.range.end,
                lexicon_entry: cand.entry.clone(),
                position: Position::Middle,
            });
            split = start;
        }
    }
}

/// Builds arguments and pairs from tagged tokens and the mentions returned
/// by [`detect_connectives`].
pub fn extract_arguments(tokens: &[Token], mentions: &[ConnectiveMention]) -> ArgumentSegmentation {
    if tokens.is_empty() {
        return ArgumentSegmentation::default();
    }
    let mentions: Vec<&ConnectiveMention> = mentions
        .iter()
        .filter(|m| m.start < m.end && m.end <= tokens.len())
        .collect();

    let mut cuts: Vec<usize> = Vec::new();
    for m in &mentions {
        match m.position {
            Position::Begin { arg2_end } if arg2_end <= tokens.len() => cuts.push(arg2_end),
            Position::Begin { .. } => {}
            Position::Middle => cuts.push(m.start),
        }
    }

    let mut chunks: Vec<DiscourseArgument> = Vec::new();
    for unit in units(tokens) {
        let mut points: Vec<usize> = cuts
            .iter()
            .copied()
            .filter(|&c| c > unit.range.start && c < unit.range.end)
            .collect();
        points.sort_unstable();
        points.dedup();
        let mut start = unit.range.start;
        for p in points.into_iter().chain(std::iter::once(unit.range.end)) {
            let arg = DiscourseArgument {
                start,
                end: p,
                is_emoji: unit.emoji,
            };
            let punct_only = !arg.is_emoji && tokens[arg.range()].iter().all(Token::is_punct);
            match chunks.last_mut() {
                Some(prev) if punct_only => prev.end = arg.end,
                _ => chunks.push(arg),
            }
            start = p;
        }
    }
    // A leading punctuation-only chunk folds into its successor.
    if chunks.len() > 1
        && !chunks[0].is_emoji
        && tokens[chunks[0].range()].iter().all(Token::is_punct)
    {
        let first = chunks.remove(0);
        chunks[0].start = first.start;
    }

    let index_at = |pos: usize| chunks.iter().position(|c| c.start == pos);
    let mut pairs = Vec::new();
    for m in &mentions {
        let connective = m.lexicon_entry.clone();
        match m.position {
            Position::Begin { arg2_end } => {
                if let (Some(arg2), Some(arg1)) = (index_at(0), index_at(arg2_end)) {
                    pairs.push(ArgPair { arg1, arg2, connective });
                }
            }
            Position::Middle => {
                if let Some(arg2) = index_at(m.start).filter(|&i| i > 0) {
                    pairs.push(ArgPair {
                        arg1: arg2 - 1,
                        arg2,
                        connective,
                    });
                }
            }
        }
    }
    for k in 1..chunks.len() {
        if chunks[k - 1].is_emoji != chunks[k].is_emoji {
            pairs.push(ArgPair {
                arg1: k - 1,
                arg2: k,
                connective: None,
            });
        }
    }

    if chunks.len() > MAX_ARGUMENTS {
        let last = chunks.len() - 1;
        chunks[MAX_ARGUMENTS - 1].end = chunks[last].end;
        chunks[MAX_ARGUMENTS - 1].is_emoji = chunks[MAX_ARGUMENTS - 1..].iter().all(|c| c.is_emoji);
        chunks.truncate(MAX_ARGUMENTS);
        pairs.retain(|p| p.arg1 < MAX_ARGUMENTS && p.arg2 < MAX_ARGUMENTS)
    }
    pairs.sort_by_key(|p| (p.arg1.min(p.arg2), p.arg1.max(p.arg2)));
    pairs.dedup_by(|a, b| a.arg1 == b.arg1 && a.arg2 == b.arg2);

    ArgumentSegmentation {
        arguments: chunks,
        pairs,
    }
}
