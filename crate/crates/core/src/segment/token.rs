use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// ARK Twitter part-of-speech tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tag {
    /// `N` common noun
    Noun,
    /// `O` pronoun (personal/wh, not possessive)
    Pronoun,
    /// `^` proper noun
    ProperNoun,
    /// `S` nominal + possessive
    NominalPossessive,
    /// `Z` proper noun + possessive
    ProperPossessive,
    /// `V` verb including copula and auxiliaries
    Verb,
    /// `L` nominal + verbal ("i'm")
    NominalVerbal,
    /// `M` proper noun + verbal
    ProperVerbal,
    /// `A` adjective
    Adjective,
    /// `R` adverb
    Adverb,
    /// `!` interjection
    Interjection,
    /// `D` determiner
    Determiner,
    /// `P` pre- or postposition, subordinating conjunction
    Preposition,
    /// `&` coordinating conjunction
    Coordinating,
    /// `T` verb particle
    Particle,
    /// `X` existential "there", predeterminers
    Existential,
    /// `Y` `X` + verbal
    ExistentialVerbal,
    /// `#` hashtag
    Hashtag,
    /// `@` at-mention
    Mention,
    /// `~` discourse marker, retweet indicator
    Discourse,
    /// `U` URL or email
    Url,
    /// `E` emoticon or emoji
    Emoticon,
    /// `$` numeral
    Numeral,
    /// `,` punctuation
    Punctuation,
    /// `G` other abbreviations, foreign words, symbols
    Other,
}

impl Tag {
    pub const ALL: [Tag; 25] = [
        Tag::Noun,
        Tag::Pronoun,
        Tag::ProperNoun,
        Tag::NominalPossessive,
        Tag::ProperPossessive,
        Tag::Verb,
        Tag::NominalVerbal,
        Tag::ProperVerbal,
        Tag::Adjective,
        Tag::Adverb,
        Tag::Interjection,
        Tag::Determiner,
        Tag::Preposition,
        Tag::Coordinating,
        Tag::Particle,
        Tag::Existential,
        Tag::ExistentialVerbal,
        Tag::Hashtag,
        Tag::Mention,
        Tag::Discourse,
        Tag::Url,
        Tag::Emoticon,
        Tag::Numeral,
        Tag::Punctuation,
        Tag::Other,
    ];

    pub fn symbol(self) -> char {
        match self {
            Tag::Noun => 'N',
            Tag::Pronoun => 'O',
            Tag::ProperNoun => '^',
            Tag::NominalPossessive => 'S',
            Tag::ProperPossessive => 'Z',
            Tag::Verb => 'V',
            Tag::NominalVerbal => 'L',
            Tag::ProperVerbal => 'M',
            Tag::Adjective => 'A',
            Tag::Adverb => 'R',
            Tag::Interjection => '!',
            Tag::Determiner => 'D',
            Tag::Preposition => 'P',
            Tag::Coordinating => '&',
            Tag::Particle => 'T',
            Tag::Existential => 'X',
            Tag::ExistentialVerbal => 'Y',
            Tag::Hashtag => '#',
            Tag::Mention => '@',
            Tag::Discourse => '~',
            Tag::Url => 'U',
            Tag::Emoticon => 'E',
            Tag::Numeral => '$',
            Tag::Punctuation => ',',
            Tag::Other => 'G',
        }
    }

    pub fn from_symbol(c: char) -> Option<Tag> {
        Tag::ALL.into_iter().find(|t| t.symbol() == c)
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

impl FromStr for Tag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Tag::from_symbol(c),
            _ => None,
        }
        .ok_or_else(|| Error::Invalid(format!("not an ARK tag: {s:?}")))
    }
}

impl Serialize for Tag {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Tag {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub const URL_TOKEN: &str = "<URL>";
pub const USER_TOKEN: &str = "<USER>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    /// `None` until tagged.
    pub pos: Option<Tag>,
    pub is_emoji: bool,
    pub is_url: bool,
    pub is_mention: bool,
    /// Character (not byte) offsets `[start, end)` in the source text.
    pub span: (usize, usize),
}

impl Token {
    fn word(text: String, span: (usize, usize)) -> Self {
        Token {
            text,
            pos: None,
            is_emoji: false,
            is_url: false,
            is_mention: false,
            span,
        }
    }

    pub fn tag(&self) -> Option<Tag> {
        self.pos
    }

    pub fn is_verb(&self) -> bool {
        self.pos == Some(Tag::Verb)
    }

    pub fn is_punct(&self) -> bool {
        self.pos == Some(Tag::Punctuation)
    }
}

/// True for codepoints in the emoji pictograph blocks.
pub fn is_emoji_char(c: char) -> bool {
    matches!(c as u32,
        0x1F000..=0x1F0FF   // mahjong, domino, playing cards
        | 0x1F100..=0x1F1FF // enclosed alphanumerics, regional indicators
        | 0x1F200..=0x1F2FF
        | 0x1F300..=0x1F5FF // misc symbols and pictographs
        | 0x1F600..=0x1F64F // emoticons
        | 0x1F680..=0x1F6FF // transport
        | 0x1F700..=0x1F77F
        | 0x1F780..=0x1F7FF
        | 0x1F800..=0x1F8FF
        | 0x1F900..=0x1F9FF // supplemental symbols
        | 0x1FA00..=0x1FAFF
        | 0x2600..=0x26FF   // misc symbols
        | 0x2700..=0x27BF   // dingbats
        | 0x2B50 | 0x2B55 | 0x203C | 0x2049 | 0x2122 | 0x2139
        | 0x2194..=0x21AA | 0x231A | 0x231B | 0x2328 | 0x23CF | 0x23E9..=0x23FA
    )
}

// Combining marks that belong to the preceding emoji: variation selectors,
// skin tone modifiers, keycap, tag characters.
fn is_emoji_modifier(c: char) -> bool {
    matches!(c as u32, 0xFE0E | 0xFE0F | 0x1F3FB..=0x1F3FF | 0x20E3 | 0xE0020..=0xE007F)
}

const ZWJ: char = '\u{200D}';

fn is_emoticon(chunk: &str) -> bool {
    const EMOTICONS: &[&str] = &[
        ":)", ":-)", ":(", ":-(", ":d", ":-d", ":p", ":-p", ";)", ";-)", ":/", ":-/", ":'(",
        ":o", ":-o", "=)", "=(", "=d", ":|", ":-|", "<3", "</3", "xd", ":*", ":-*", "^_^", "-_-",
        ":]", ":[", ";p", ";d", "xp", "d:",
    ];
    let lower = chunk.to_lowercase();
    EMOTICONS.contains(&lower.as_str())
}

fn is_url(chunk: &str) -> bool {
    let lower = chunk.to_ascii_lowercase();
    lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.")
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Tokenizes and normalizes raw message text.
///
/// URLs become `<URL>`, at-mentions `<USER>`, each emoji (with its modifiers
/// and ZWJ continuations) is one token, runs of word characters are
/// lowercased, and every other non-space character is its own token.
/// Apostrophes and hyphens between word characters stay inside the word, and
/// a leading `#` stays attached to a hashtag.
pub fn preprocess(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let chunk_start = i;
        let mut chunk_end = i;
        while chunk_end < chars.len() && !chars[chunk_end].is_whitespace() {
            chunk_end += 1;
        }
        let chunk: String = chars[chunk_start..chunk_end].iter().collect();

        if is_url(&chunk) {
            let mut t = Token::word(URL_TOKEN.to_string(), (chunk_start, chunk_end));
            t.is_url = true;
            tokens.push(t);
            i = chunk_end;
            continue;
        }
        if is_emoticon(&chunk) {
            let mut t = Token::word(chunk.to_lowercase(), (chunk_start, chunk_end));
            t.is_emoji = true;
            tokens.push(t);
            i = chunk_end;
            continue;
        }
        split_chunk(&chars, chunk_start, chunk_end, &mut tokens);
        i = chunk_end;
    }
    tokens
}

fn split_chunk(chars: &[char], start: usize, end: usize, out: &mut Vec<Token>) {
    let mut i = start;
    while i < end {
        let c = chars[i];
        if c == '@' && i + 1 < end && is_word_char(chars[i + 1]) {
            let mut j = i + 1;
            while j < end && is_word_char(chars[j]) {
                j += 1;
            }
            let mut t = Token::word(USER_TOKEN.to_string(), (i, j));
            t.is_mention = true;
            out.push(t);
            i = j;
        } else if is_emoji_char(c) {
            let mut j = i + 1;
            // Regional indicator pairs form one flag.
            if is_regional(c) && j < end && is_regional(chars[j]) {
                j += 1;
            }
            loop {
                while j < end && is_emoji_modifier(chars[j]) {
                    j += 1;
                }
                if j + 1 < end && chars[j] == ZWJ && is_emoji_char(chars[j + 1]) {
                    j += 2;
                    continue;
                }
                break;
            }
            let mut t = Token::word(chars[i..j].iter().collect(), (i, j));
            t.is_emoji = true;
            out.push(t);
            i = j;
        } else if is_word_char(c) || (c == '#' && i + 1 < end && is_word_char(chars[i + 1])) {
            let mut j = i + 1;
            while j < end {
                if is_word_char(chars[j]) {
                    j += 1;
                } else if (chars[j] == '\'' || chars[j] == '’' || chars[j] == '-')
                    && j + 1 < end
                    && is_word_char(chars[j + 1])
                {
                    j += 2;
                } else {
                    break;
                }
            }
            let text: String = chars[i..j].iter().collect::<String>().to_lowercase();
            out.push(Token::word(text.replace('’', "'"), (i, j)));
            i = j;
        } else if is_emoji_modifier(c) || c == ZWJ {
            // Stray modifier without a base: attach to the previous emoji if any.
            match out.last_mut() {
                Some(prev) if prev.is_emoji && prev.span.1 == i => {
                    prev.text.push(c);
                    prev.span.1 = i + 1;
                }
                _ => out.push(Token::word(c.to_string(), (i, i + 1))),
            }
            i += 1;
        } else {
            out.push(Token::word(c.to_string(), (i, i + 1)));
            i += 1;
        }
    }
}

fn is_regional(c: char) -> bool {
    matches!(c as u32, 0x1F1E6..=0x1F1FF)
}
