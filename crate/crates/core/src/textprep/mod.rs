//! Review text normalization.
//!
//! A review is split on whitespace and the first letter of every word is
//! lowercased. Code-like words are then replaced by one of four reserved
//! keywords, checked in this order:
//!
//! 1. any uppercase letter: `keywordvariable`
//! 2. contains `.h` or `#`: `keyworddoth`
//! 3. contains `_`: `keywordunderscore`
//! 4. contains `(` or `)`: `keywordfunction`
//!
//! Remaining words lose their punctuation, are stemmed and finally collapsed
//! through the synonym dictionary.

mod stemmer;
mod synonyms;

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::Deref;

pub use stemmer::stem;
pub use synonyms::{collapse_synonyms, SynonymMap};

pub const KEYWORD_VARIABLE: &str = "keywordvariable";
pub const KEYWORD_DOTH: &str = "keyworddoth";
pub const KEYWORD_UNDERSCORE: &str = "keywordunderscore";
pub const KEYWORD_FUNCTION: &str = "keywordfunction";

pub const RESERVED_KEYWORDS: [&str; 4] = [
    KEYWORD_VARIABLE,
    KEYWORD_DOTH,
    KEYWORD_UNDERSCORE,
    KEYWORD_FUNCTION,
];

/// Ordered tokens of one review. Never contains empty tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    /// Drops empty tokens.
    pub fn new(tokens: Vec<String>) -> Self {
        Self(tokens.into_iter().filter(|t| !t.is_empty()).collect())
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }
}

impl Deref for TokenSequence {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

impl<S: Into<String>> FromIterator<S> for TokenSequence {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self::new(iter.into_iter().map(Into::into).collect())
    }
}

/// Whitespace split with the first letter of each word lowercased.
pub fn tokenize(text: &str) -> TokenSequence {
    text.split_whitespace().map(lowercase_first).collect()
}

fn lowercase_first(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// The reserved keyword a token is replaced with, if any rule fires.
pub fn special_keyword(token: &str) -> Option<&'static str> {
    if token.chars().any(char::is_uppercase) {
        Some(KEYWORD_VARIABLE)
    } else if token.contains(".h") || token.contains('#') {
        Some(KEYWORD_DOTH)
    } else if token.contains('_') {
        Some(KEYWORD_UNDERSCORE)
    } else if token.contains('(') || token.contains(')') {
        Some(KEYWORD_FUNCTION)
    } else {
        None
    }
}

pub fn map_special_token(token: &str) -> String {
    special_keyword(token).unwrap_or(token).to_string()
}

fn strip_punctuation(token: &str) -> String {
    token.chars().filter(|c| c.is_alphanumeric()).collect()
}

/// Normalizes one word that did not trigger a special rule. Returns `None`
/// when nothing is left after punctuation removal.
fn normalize_word(token: &str, synonyms: &SynonymMap) -> Option<String> {
    let stripped = strip_punctuation(token);
    if stripped.is_empty() {
        return None;
    }
    let stemmed = stem(&stripped);
    Some(synonyms.collapse(&stemmed).to_string())
}

/// Full normalization of one review.
pub fn preprocess_review(text: &str, synonyms: &SynonymMap) -> TokenSequence {
    let mut out = Vec::new();
    for token in tokenize(text).iter() {
        match special_keyword(token) {
            Some(keyword) => out.push(keyword.to_string()),
            None => out.extend(normalize_word(token, synonyms)),
        }
    }
    TokenSequence(out)
}

/// Token to position mapping, in first-occurrence order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from words in the given order; repeats are ignored.
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut vocab = Self::default();
        for w in words {
            vocab.insert(w.as_ref());
        }
        vocab
    }

    fn insert(&mut self, word: &str) {
        if !self.index.contains_key(word) {
            self.index.insert(word.to_string(), self.words.len());
            self.words.push(word.to_string());
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, index: usize) -> Option<&str> {
        self.words.get(index).map(String::as_str)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }
}

/// All distinct tokens in first-occurrence order over the sequences.
pub fn build_vocabulary<'a, I>(corpus: I) -> Vocabulary
where
    I: IntoIterator<Item = &'a TokenSequence>,
{
    let mut vocab = Vocabulary::default();
    for seq in corpus {
        for token in seq.iter() {
            vocab.insert(token);
        }
    }
    vocab
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("Line over 80 characters").tokens(), toks(&["line", "over", "80", "characters"]));
        assert!(tokenize("").is_empty());
        assert!(tokenize("   \n\t").is_empty());
        assert_eq!(tokenize("xxx_resource() calls").tokens(), toks(&["xxx_resource()", "calls"]));
        // only the first letter is lowercased
        assert_eq!(tokenize("NULL isEnabled").tokens(), toks(&["nULL", "isEnabled"]));
    }

    #[test]
    fn special_rules() {
        assert_eq!(map_special_token("isEnabled"), KEYWORD_VARIABLE);
        assert_eq!(map_special_token("stdio.h"), KEYWORD_DOTH);
        assert_eq!(map_special_token("#endif"), KEYWORD_DOTH);
        assert_eq!(map_special_token("foo_bar"), KEYWORD_UNDERSCORE);
        assert_eq!(map_special_token("foo()"), KEYWORD_FUNCTION);
        assert_eq!(map_special_token("(foo"), KEYWORD_FUNCTION);
        assert_eq!(map_special_token("plain"), "plain");
    }

    /// Enumerates which rules match a token, independently of the if/else
    /// chain, and checks the first one wins.
    #[test]
    fn rule_precedence_by_enumeration() {
        let rules: [(&str, fn(&str) -> bool); 4] = [
            (KEYWORD_VARIABLE, |t| t.chars().any(|c| c.is_uppercase())),
            (KEYWORD_DOTH, |t| t.contains(".h") || t.contains('#')),
            (KEYWORD_UNDERSCORE, |t| t.contains('_')),
            (KEYWORD_FUNCTION, |t| t.contains('(') || t.contains(')')),
        ];
        for token in ["xxx_resource()", "Foo_bar()", "a.h_b", "#x()", "x_y", "f()", "word"] {
            let matching: Vec<&str> = rules.iter().filter(|(_, f)| f(token)).map(|(k, _)| *k).collect();
            assert_eq!(special_keyword(token), matching.first().copied(), "{token}");
        }
        let matching: Vec<&str> = rules.iter().filter(|(_, f)| f("xxx_resource()")).map(|(k, _)| *k).collect();
        assert_eq!(matching, vec![KEYWORD_UNDERSCORE, KEYWORD_FUNCTION]);
        assert_eq!(map_special_token("xxx_resource()"), KEYWORD_UNDERSCORE);
    }

    #[test]
    fn preprocess_examples() {
        let map = SynonymMap::builtin();
        assert_eq!(
            preprocess_review("outer parens not needed", &map).tokens(),
            toks(&["outer", "paren", "not", "need"])
        );
        assert!(preprocess_review("", &map).is_empty());
        assert_eq!(preprocess_review("#endif", &map).tokens(), toks(&["keyworddoth"]));
        assert_eq!(
            preprocess_review("Call foo_bar() from (the) Header.h, needed.", &map).tokens(),
            toks(&["call", "keywordunderscore", "from", "keywordfunction", "keyworddoth", "need"])
        );
        assert_eq!(preprocess_review("a little fix", &map).tokens(), toks(&["a", "minor", "fix"]));
        assert!(preprocess_review("... --- !!", &map).is_empty());
    }

    #[test]
    fn keywords_skip_stemming() {
        let map = SynonymMap::parse("keywordfunction call").unwrap();
        // would stem to "keywordfunct" and collapse if it went through normalization
        assert_eq!(preprocess_review("f()", &map).tokens(), toks(&[KEYWORD_FUNCTION]));
        assert_eq!(preprocess_review("isEnabled", &map).tokens(), toks(&[KEYWORD_VARIABLE]));
    }

    #[test]
    fn vocabulary_first_occurrence_order() {
        let s1: TokenSequence = "line over fifty characters you should reduce it to twenty characters"
            .split(' ')
            .collect();
        let s2: TokenSequence = "provide line level comment to line".split(' ').collect();
        let vocab = build_vocabulary([&s1, &s2]);
        assert_eq!(
            vocab.words(),
            toks(&[
                "line", "over", "fifty", "characters", "you", "should", "reduce", "it", "to", "twenty",
                "provide", "level", "comment"
            ])
        );
        let single: TokenSequence = ["a", "a", "a"].into_iter().collect();
        assert_eq!(build_vocabulary([&single]).len(), 1);
        assert!(build_vocabulary(core::iter::empty()).is_empty());
    }

    proptest! {
        #[test]
        fn at_most_one_keyword_per_token(text in "[a-zA-Z_#().h ]{0,40}") {
            let map = SynonymMap::builtin();
            let raw = tokenize(&text);
            let out = preprocess_review(&text, &map);
            prop_assert!(out.len() <= raw.len());
            for t in out.iter() {
                prop_assert!(!t.is_empty());
            }
        }

        #[test]
        fn preprocess_is_deterministic_and_in_vocab(texts in prop::collection::vec("[a-zA-Z_.()# ]{0,30}", 0..8)) {
            let map = SynonymMap::builtin();
            let seqs: Vec<TokenSequence> = texts.iter().map(|t| preprocess_review(t, &map)).collect();
            let again: Vec<TokenSequence> = texts.iter().map(|t| preprocess_review(t, &map)).collect();
            prop_assert_eq!(&seqs, &again);
            let vocab = build_vocabulary(&seqs);
            for s in &seqs {
                for t in s.iter() {
                    prop_assert!(vocab.contains(t));
                }
            }
            for (i, w) in vocab.words().iter().enumerate() {
                prop_assert_eq!(vocab.index_of(w), Some(i));
            }
        }

        #[test]
        fn special_token_output_is_reserved_or_identity(t in "[a-zA-Z_#().h]{1,12}") {
            let mapped = map_special_token(&t);
            prop_assert!(mapped == t || RESERVED_KEYWORDS.contains(&mapped.as_str()));
        }
    }
}
