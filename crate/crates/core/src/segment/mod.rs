//! Tokenization, tagging and PDTB-style argument extraction for short texts.
//!
//! The pipeline per message is [`preprocess`] → [`pos_tag`] →
//! [`detect_connectives`] → [`extract_arguments`]; [`segment_message`] runs
//! all four and produces the serializable [`SegmentedMessage`].

mod arguments;
mod tagger;
mod token;

use serde::{Deserialize, Serialize};

pub use arguments::{
    detect_connectives, extract_arguments, ArgPair, ArgumentSegmentation, ConnectiveMention,
    DiscourseArgument, Position, MAX_ARGUMENTS,
};
pub use tagger::{guess_tag, pos_tag};
pub use token::{is_emoji_char, preprocess, Tag, Token, URL_TOKEN, USER_TOKEN};

use crate::corpus::{MessageContent, PosteriorTable, RawMessage};

/// One line of `segments.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentedMessage {
    pub id: String,
    pub arguments: Vec<Vec<String>>,
    pub pairs: Vec<ArgPair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl SegmentedMessage {
    pub fn from_segmentation(
        id: impl Into<String>,
        tokens: &[Token],
        segmentation: &ArgumentSegmentation,
    ) -> Self {
        SegmentedMessage {
            id: id.into(),
            arguments: segmentation
                .arguments
                .iter()
                .map(|a| tokens[a.range()].iter().map(|t| t.text.clone()).collect())
                .collect(),
            pairs: segmentation.pairs.clone(),
            label: None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.arguments.is_empty()
    }

    /// Every `(k, k+1)` argument pair, oriented as in `pairs` when the
    /// segmentation already relates the two arguments.
    pub fn adjacent_pairs(&self) -> Vec<ArgPair> {
        (1..self.arguments.len())
            .map(|k| {
                self.pairs
                    .iter()
                    .find(|p| p.arg1.min(p.arg2) == k - 1 && p.arg1.max(p.arg2) == k)
                    .cloned()
                    .unwrap_or(ArgPair {
                        arg1: k - 1,
                        arg2: k,
                        connective: None,
                    })
            })
            .collect()
    }
}

/// Tokens for a corpus record: tokenized and tagged text, or the supplied
/// pre-tagged tokens normalized the same way.
pub fn message_tokens(message: &RawMessage) -> Vec<Token> {
    match &message.content {
        MessageContent::Text(text) => {
            let mut tokens = preprocess(text);
            pos_tag(&mut tokens);
            tokens
        }
        MessageContent::Tagged(words) => {
            let mut tokens = Vec::with_capacity(words.len());
            let mut offset = 0;
            for w in words {
                let len = w.text.chars().count();
                let span = (offset, offset + len);
                offset += len + 1;
                let lower = w.text.to_lowercase();
                let is_url = w.pos == Tag::Url
                    || lower.starts_with("http://")
                    || lower.starts_with("https://")
                    || lower.starts_with("www.");
                let is_mention = !is_url && (w.pos == Tag::Mention || (lower.starts_with('@') && lower.len() > 1));
                let is_emoji = w.pos == Tag::Emoticon || lower.chars().next().is_some_and(is_emoji_char);
                let text = if is_url {
                    URL_TOKEN.to_string()
                } else if is_mention {
                    USER_TOKEN.to_string()
                } else {
                    lower
                };
                tokens.push(Token {
                    text,
                    pos: Some(w.pos),
                    is_emoji,
                    is_url,
                    is_mention,
                    span,
                });
            }
            pos_tag(&mut tokens);
            tokens
        }
    }
}

/// Segments tagged tokens into arguments and pairs.
pub fn segment_tokens(tokens: &[Token], table: &PosteriorTable) -> ArgumentSegmentation {
    let mentions = detect_connectives(tokens, table);
    extract_arguments(tokens, &mentions)
}

pub fn segment_message(message: &RawMessage, table: &PosteriorTable) -> SegmentedMessage {
    let tokens = message_tokens(message);
    let segmentation = segment_tokens(&tokens, table);
    let mut out = SegmentedMessage::from_segmentation(message.id.clone(), &tokens, &segmentation);
    out.label = message.label.clone();
    out
}
