//! Lemmas, word classes and multi-word terms.
//!
//! A [`Term`] is a 2- or 3-word lemma sequence whose rightmost word is the
//! head noun. Term identity is carried by the lemma sequence alone: word
//! classes are annotations used by matching and extraction, never by
//! equality, hashing or ordering.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

/// Smallest accepted term length.
pub const MIN_TERM_LEN: usize = 2;
/// Largest accepted term length.
pub const MAX_TERM_LEN: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LemmaError {
    #[error("empty lemma")]
    EmptyLemma,
    #[error("lemma {0:?} contains whitespace or control characters")]
    InvalidChar(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("term has {0} words, expected 2 or 3")]
    BadArity(usize),
    #[error("head word {lemma:?} is tagged {class}, expected N")]
    BadHead { lemma: String, class: WordClass },
    #[error("malformed token {0:?}")]
    BadToken(String),
}

/// A normalized lemma: trimmed, NFC-composed, lowercase.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Lemma(String);

impl Lemma {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Lemma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Lemma {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Lemma {
    type Error = LemmaError;

    fn try_from(raw: String) -> Result<Self, Self::Error> {
        normalize_lemma(&raw)
    }
}

impl From<Lemma> for String {
    fn from(lemma: Lemma) -> Self {
        lemma.0
    }
}

impl FromStr for Lemma {
    type Err = LemmaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        normalize_lemma(s)
    }
}

/// Trims, lowercases and NFC-composes `raw`. Diacritics are preserved.
pub fn normalize_lemma(raw: &str) -> Result<Lemma, LemmaError> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(LemmaError::EmptyLemma);
    }
    // Lowercasing can decompose some characters, so compose on both sides.
    let folded: String = trimmed.nfc().collect::<String>().to_lowercase();
    let text: String = folded.nfc().collect();
    if text.chars().any(|c| c.is_whitespace() || c.is_control()) {
        return Err(LemmaError::InvalidChar(text));
    }
    Ok(Lemma(text))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum WordClass {
    Noun,
    Adjective,
    Verb,
    Preposition,
    Conjunction,
    Determiner,
    Pronoun,
    Other,
}

impl WordClass {
    pub const ALL: [WordClass; 8] = [
        WordClass::Noun,
        WordClass::Adjective,
        WordClass::Verb,
        WordClass::Preposition,
        WordClass::Conjunction,
        WordClass::Determiner,
        WordClass::Pronoun,
        WordClass::Other,
    ];

    /// The tag used in term lists, corpora and grammar files.
    pub fn tag(self) -> &'static str {
        match self {
            WordClass::Noun => "N",
            WordClass::Adjective => "A",
            WordClass::Verb => "V",
            WordClass::Preposition => "P",
            WordClass::Conjunction => "C",
            WordClass::Determiner => "D",
            WordClass::Pronoun => "PRO",
            WordClass::Other => "X",
        }
    }

    pub fn from_tag(tag: &str) -> Option<WordClass> {
        WordClass::ALL.into_iter().find(|c| c.tag() == tag)
    }

    /// Content words are the only material a candidate term may be built from.
    pub fn is_content(self) -> bool {
        matches!(self, WordClass::Noun | WordClass::Adjective | WordClass::Other)
    }

    /// Whether a word of this class can head a term.
    pub fn is_noun_compatible(self) -> bool {
        matches!(self, WordClass::Noun | WordClass::Other)
    }
}

impl fmt::Display for WordClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Stable identifier of a term, derived from its lemma sequence only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TermId(pub u64);

impl TermId {
    fn of_lemmas<'a>(lemmas: impl IntoIterator<Item = &'a Lemma>) -> TermId {
        let mut hasher = Sha256::new();
        for (i, lemma) in lemmas.into_iter().enumerate() {
            if i > 0 {
                hasher.update(b" ");
            }
            hasher.update(lemma.as_str().as_bytes());
        }
        let digest = hasher.finalize();
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&digest[..8]);
        TermId(u64::from_be_bytes(bytes))
    }
}

impl fmt::Display for TermId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TermWord {
    pub lemma: Lemma,
    pub class: WordClass,
}

impl TermWord {
    pub fn new(lemma: Lemma, class: WordClass) -> Self {
        TermWord { lemma, class }
    }
}

/// A 2- or 3-word term headed by its rightmost noun.
///
/// Equality, hashing and ordering use the lemma sequence only. Since lemmas
/// never contain whitespace, ordering agrees with the ordering of
/// [`Term::text`].
#[derive(Debug, Clone)]
pub struct Term {
    words: Vec<TermWord>,
    id: TermId,
}

impl Term {
    /// Builds a term, checking its length and that the head is a noun.
    pub fn new(words: Vec<TermWord>) -> Result<Term, TermError> {
        if !(MIN_TERM_LEN..=MAX_TERM_LEN).contains(&words.len()) {
            return Err(TermError::BadArity(words.len()));
        }
        let head = words.last().expect("length checked");
        if head.class != WordClass::Noun {
            return Err(TermError::BadHead {
                lemma: head.lemma.to_string(),
                class: head.class,
            });
        }
        let id = TermId::of_lemmas(words.iter().map(|w| &w.lemma));
        Ok(Term { words, id })
    }

    /// Parses `lemma` / `lemma/TAG` tokens separated by whitespace.
    ///
    /// Untagged words default to `Noun` for the head and `Other` elsewhere.
    pub fn parse(line: &str) -> Result<Term, TermError> {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if !(MIN_TERM_LEN..=MAX_TERM_LEN).contains(&tokens.len()) {
            return Err(TermError::BadArity(tokens.len()));
        }
        let last = tokens.len() - 1;
        let mut words = Vec::with_capacity(tokens.len());
        for (i, token) in tokens.iter().enumerate() {
            let (raw_lemma, class) = match token.rsplit_once('/') {
                Some((lemma, tag)) => {
                    let class = WordClass::from_tag(tag)
                        .ok_or_else(|| TermError::BadToken(token.to_string()))?;
                    (lemma, class)
                }
                None if i == last => (*token, WordClass::Noun),
                None => (*token, WordClass::Other),
            };
            if raw_lemma.contains('/') {
                return Err(TermError::BadToken(token.to_string()));
            }
            let lemma =
                normalize_lemma(raw_lemma).map_err(|_| TermError::BadToken(token.to_string()))?;
            words.push(TermWord::new(lemma, class));
        }
        Term::new(words)
    }

    pub fn id(&self) -> TermId {
        self.id
    }

    pub fn words(&self) -> &[TermWord] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn head(&self) -> &TermWord {
        self.words.last().expect("terms are never empty")
    }

    pub fn lemmas(&self) -> impl Iterator<Item = &Lemma> {
        self.words.iter().map(|w| &w.lemma)
    }

    /// Space-separated lemmas, e.g. `serum albumin`.
    pub fn text(&self) -> String {
        let mut out = String::new();
        for (i, lemma) in self.lemmas().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(lemma.as_str());
        }
        out
    }

    /// Tagged rendering accepted by [`Term::parse`], e.g. `serum/N albumin/N`.
    pub fn render(&self) -> String {
        self.words
            .iter()
            .map(|w| format!("{}/{}", w.lemma, w.class))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Number of words whose class is a content class.
    pub fn content_words(&self) -> usize {
        self.words.iter().filter(|w| w.class.is_content()).count()
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.lemmas().eq(other.lemmas())
    }
}

impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.id.hash(state);
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Term {
    fn cmp(&self, other: &Self) -> Ordering {
        self.lemmas().cmp(other.lemmas())
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}

impl FromStr for Term {
    type Err = TermError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Term::parse(s)
    }
}

/// Whether a term was supplied by the user or acquired from the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatusKind {
    Reference,
    Candidate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TermStatus {
    kind: StatusKind,
    cycle: u32,
}

impl TermStatus {
    pub fn reference() -> Self {
        TermStatus { kind: StatusKind::Reference, cycle: 0 }
    }

    /// A candidate discovered at `cycle`; cycles start at 1.
    pub fn candidate(cycle: u32) -> Self {
        assert!(cycle >= 1, "candidate cycles start at 1");
        TermStatus { kind: StatusKind::Candidate, cycle }
    }

    pub fn kind(&self) -> StatusKind {
        self.kind
    }

    pub fn cycle(&self) -> u32 {
        self.cycle
    }
}

/// Outcome of reading a reference list.
#[derive(Debug, Clone, Default)]
pub struct TermList {
    pub terms: Vec<Term>,
    /// `(line number, reason)` for lines that were skipped, e.g. 4-word terms.
    pub skipped: Vec<(usize, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {source}")]
pub struct TermListError {
    pub line: usize,
    pub source: TermError,
}

/// Reads a reference list: one term per line, `#` comments, blank lines
/// ignored. Terms longer than three words are skipped rather than rejected;
/// duplicates keep their first occurrence.
pub fn parse_term_list(text: &str) -> Result<TermList, TermListError> {
    let mut list = TermList::default();
    let mut seen = std::collections::HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match Term::parse(line) {
            Ok(term) => {
                if seen.insert(term.id()) {
                    list.terms.push(term);
                }
            }
            Err(TermError::BadArity(n)) if n > MAX_TERM_LEN => {
                list.skipped.push((idx + 1, format!("{n}-word term ignored")));
            }
            Err(source) => return Err(TermListError { line: idx + 1, source }),
        }
    }
    Ok(list)
}
