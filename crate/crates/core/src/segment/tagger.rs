use std::collections::HashMap;
use std::sync::OnceLock;

use super::token::{Tag, Token};

const LEXICON: &str = include_str!("../../data/ark_lexicon.tsv");

fn lexicon() -> &'static HashMap<&'static str, Tag> {
    static LEX: OnceLock<HashMap<&'static str, Tag>> = OnceLock::new();
    LEX.get_or_init(|| {
        LEXICON
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
            .filter_map(|l| {
                let (word, tag) = l.split_once('\t')?;
                Some((word, tag.trim().parse().ok()?))
            })
            .collect()
    })
}

/// Fallback tag for a single untagged token.
pub fn guess_tag(token: &Token) -> Tag {
    if token.is_emoji {
        return Tag::Emoticon;
    }
    if token.is_url {
        return Tag::Url;
    }
    if token.is_mention {
        return Tag::Mention;
    }
    let text = token.text.as_str();
    if let Some(&tag) = lexicon().get(text) {
        return tag;
    }
    if text.len() > 1 && text.starts_with('#') {
        return Tag::Hashtag;
    }
    if text.chars().all(|c| !c.is_alphanumeric()) {
        return Tag::Punctuation;
    }
    if text.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',' || c == ':')
        && text.chars().any(|c| c.is_ascii_digit())
    {
        return Tag::Numeral;
    }
    suffix_tag(text)
}

fn suffix_tag(word: &str) -> Tag {
    let n = word.chars().count();
    if let Some(stem) = word.strip_suffix("'s") {
        if !stem.is_empty() {
            return Tag::NominalPossessive;
        }
    }
    if word.ends_with("n't") {
        return Tag::Verb;
    }
    if n >= 5 && word.ends_with("ing") {
        return Tag::Verb;
    }
    if n >= 4 && word.ends_with("ed") && !word.ends_with("eed") {
        return Tag::Verb;
    }
    if n >= 4 && word.ends_with("ly") {
        return Tag::Adverb;
    }
    const ADJ: [&str; 7] = ["ous", "ful", "ive", "able", "ible", "less", "ish"];
    if n >= 5 && ADJ.iter().any(|s| word.ends_with(s)) {
        return Tag::Adjective;
    }
    Tag::Noun
}

/// Assigns ARK tags to untagged tokens. Tokens that already carry a tag are
/// left unchanged, except that the emoji flag always forces `E`.
pub fn pos_tag(tokens: &mut [Token]) {
    for token in tokens {
        match token.pos {
            Some(_) if !token.is_emoji => {}
            _ => token.pos = Some(guess_tag(token)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segment::preprocess;

    fn tags(text: &str) -> Vec<Tag> {
        let mut toks = preprocess(text);
        pos_tag(&mut toks);
        toks.iter().map(|t| t.pos.unwrap()).collect()
    }

    #[test]
    fn ing_suffix_is_verb() {
        assert_eq!(tags("running"), [Tag::Verb]);
        assert_eq!(tags("jumped"), [Tag::Verb]);
    }

    #[test]
    fn emoji_is_emoticon() {
        assert_eq!(tags("🎉"), [Tag::Emoticon]);
    }

    #[test]
    fn pre_tagged_passes_through() {
        let mut toks = preprocess("running dogs");
        toks[0].pos = Some(Tag::Noun);
        toks[1].pos = Some(Tag::Verb);
        pos_tag(&mut toks);
        assert_eq!(toks[0].pos, Some(Tag::Noun));
        assert_eq!(toks[1].pos, Some(Tag::Verb));
    }

    #[test]
    fn unknown_word_defaults_to_noun() {
        assert_eq!(tags("zorblax"), [Tag::Noun]);
    }

    #[test]
    fn lexicon_and_specials() {
        use Tag::*;
        assert_eq!(
            tags("i like him because he is kind , @joe http://t.co 42 #tbt"),
            [Pronoun, Verb, Pronoun, Preposition, Pronoun, Verb, Adjective, Punctuation, Mention, Url, Numeral, Hashtag]
        );
    }

    #[test]
    fn lexicon_parses_completely() {
        let entries = LEXICON.lines().filter(|l| !l.starts_with('#') && !l.is_empty()).count();
        assert_eq!(lexicon().len(), entries);
    }
}
