//! Lemmatized corpora and the variant scanner.
//!
//! A corpus is one sentence per line, tokens separated by spaces, each token
//! written `surface|lemma|TAG`, `surface|lemma` or `surface`. Tokens without
//! a tag are classified through closed-class lexicons; everything else is
//! `Other`, which satisfies every open-slot class constraint.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::BufRead;
use std::ops::Range;

use serde::Serialize;
use thiserror::Error;

use crate::grammar::{base_pattern, compile_variant_patterns, MetaGrammar, PatternElement, SlotSpec, VariantPattern};
use crate::term::{normalize_lemma, Lemma, Term, TermId, WordClass};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("corpus contains no tokens")]
    EmptyCorpus,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Closed-class word lists used to tag tokens that carry no tag.
#[derive(Debug, Clone)]
pub struct Lexicons {
    pub conjunctions: HashSet<Lemma>,
    pub prepositions: HashSet<Lemma>,
    pub determiners: HashSet<Lemma>,
}

impl Lexicons {
    pub fn new<'a>(
        conjunctions: impl IntoIterator<Item = &'a str>,
        prepositions: impl IntoIterator<Item = &'a str>,
        determiners: impl IntoIterator<Item = &'a str>,
    ) -> Lexicons {
        Lexicons {
            conjunctions: lemma_set(conjunctions),
            prepositions: lemma_set(prepositions),
            determiners: lemma_set(determiners),
        }
    }

    pub fn classify(&self, lemma: &Lemma) -> WordClass {
        if self.conjunctions.contains(lemma) {
            WordClass::Conjunction
        } else if self.prepositions.contains(lemma) {
            WordClass::Preposition
        } else if self.determiners.contains(lemma) {
            WordClass::Determiner
        } else {
            WordClass::Other
        }
    }
}

fn lemma_set<'a>(words: impl IntoIterator<Item = &'a str>) -> HashSet<Lemma> {
    words.into_iter().filter_map(|w| normalize_lemma(w).ok()).collect()
}

impl Default for Lexicons {
    fn default() -> Self {
        Lexicons::new(
            ["and", "or"],
            ["of", "for", "in", "on", "with", "by", "to", "from"],
            ["the", "a", "an", "its", "their"],
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub lemma: Lemma,
    pub class: WordClass,
}

/// An indexed, read-only corpus.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    sentences: Vec<Vec<Token>>,
    token_count: usize,
}

impl Corpus {
    /// Parses corpus text with the default lexicons.
    pub fn parse(text: &str) -> Result<Corpus, CorpusError> {
        Corpus::from_reader(text.as_bytes(), &Lexicons::default())
    }

    /// Reads a corpus line by line. Blank lines are skipped and do not count
    /// as sentences.
    pub fn from_reader(reader: impl BufRead, lexicons: &Lexicons) -> Result<Corpus, CorpusError> {
        let mut sentences = Vec::new();
        let mut token_count = 0;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let tokens = line
                .split_whitespace()
                .map(|raw| parse_token(raw, lexicons))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|message| CorpusError::Format { line: idx + 1, message })?;
            if tokens.is_empty() {
                continue;
            }
            token_count += tokens.len();
            sentences.push(tokens);
        }
        if token_count == 0 {
            return Err(CorpusError::EmptyCorpus);
        }
        Ok(Corpus { sentences, token_count })
    }

    pub fn from_sentences(sentences: Vec<Vec<Token>>) -> Corpus {
        let sentences: Vec<_> = sentences.into_iter().filter(|s| !s.is_empty()).collect();
        let token_count = sentences.iter().map(Vec::len).sum();
        Corpus { sentences, token_count }
    }

    pub fn sentences(&self) -> &[Vec<Token>] {
        &self.sentences
    }

    pub fn sentence(&self, id: usize) -> &[Token] {
        &self.sentences[id]
    }

    pub fn sentence_count(&self) -> usize {
        self.sentences.len()
    }

    pub fn token_count(&self) -> usize {
        self.token_count
    }

    /// Lemmas of `sentence[span]` joined by spaces.
    pub fn span_text(&self, sentence: usize, span: Range<usize>) -> String {
        self.sentences[sentence][span]
            .iter()
            .map(|t| t.lemma.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn parse_token(raw: &str, lexicons: &Lexicons) -> Result<Token, String> {
    let fields: Vec<&str> = raw.split('|').collect();
    let bad = |why: &str| format!("token {raw:?}: {why}");
    let (surface, lemma, tag) = match fields.as_slice() {
        [surface] => (*surface, *surface, None),
        [surface, lemma] => (*surface, *lemma, None),
        [surface, lemma, tag] => (*surface, *lemma, Some(*tag)),
        _ => return Err(bad("too many fields")),
    };
    if surface.is_empty() {
        return Err(bad("empty surface"));
    }
    let lemma = normalize_lemma(lemma).map_err(|e| bad(&e.to_string()))?;
    let class = match tag {
        Some(tag) => WordClass::from_tag(tag).ok_or_else(|| bad("unknown tag"))?,
        None => lexicons.classify(&lemma),
    };
    Ok(Token {
        surface: surface.to_string(),
        lemma,
        class,
    })
}

/// One occurrence of a variant pattern.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct VariantMatch {
    pub sentence: usize,
    pub start: usize,
    /// Index into the pattern slice given to [`scan`].
    pub pattern: usize,
    pub end: usize,
    /// Token span bound by each pattern element; an optional element that
    /// bound nothing has an empty span at its position.
    pub bindings: Vec<Range<usize>>,
}

impl VariantMatch {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

fn admits(element: &PatternElement, token: &Token) -> bool {
    match element {
        PatternElement::Fixed(word) => word.lemma == token.lemma,
        PatternElement::Open(slot) => match slot {
            SlotSpec::Wild { classes, .. } => classes.admits(token.class),
            SlotSpec::Conj => token.class == WordClass::Conjunction,
            SlotSpec::Prep => token.class == WordClass::Preposition,
            SlotSpec::OptDet => token.class == WordClass::Determiner,
            SlotSpec::TermWord(_) => unreachable!("term words compile to fixed elements"),
        },
    }
}

/// Every way `pattern` matches `tokens` starting at `start`, as binding
/// vectors.
pub fn match_at(pattern: &VariantPattern, tokens: &[Token], start: usize) -> Vec<Vec<Range<usize>>> {
    let mut found = Vec::new();
    let mut bindings = Vec::with_capacity(pattern.elements().len());
    extend(pattern.elements(), tokens, start, &mut bindings, &mut found);
    found
}

fn extend(
    elements: &[PatternElement],
    tokens: &[Token],
    pos: usize,
    bindings: &mut Vec<Range<usize>>,
    found: &mut Vec<Vec<Range<usize>>>,
) {
    let Some((element, rest)) = elements.split_first() else {
        found.push(bindings.clone());
        return;
    };
    for count in 0..=element.max_len() {
        let end = pos + count;
        if end > tokens.len() {
            break;
        }
        if count > 0 && !admits(element, &tokens[end - 1]) {
            break;
        }
        if count < element.min_len() {
            continue;
        }
        bindings.push(pos..end);
        extend(rest, tokens, end, bindings, found);
        bindings.pop();
    }
}

fn scan_sentence(
    sentence: usize,
    tokens: &[Token],
    patterns: &[VariantPattern],
    index: &PatternIndex,
) -> Vec<VariantMatch> {
    let mut out = Vec::new();
    let mut tried = Vec::new();
    for start in 0..tokens.len() {
        tried.clear();
        if let Some(bucket) = index.anchored.get(&tokens[start].lemma) {
            tried.extend_from_slice(bucket);
        }
        tried.extend_from_slice(&index.floating);
        tried.sort_unstable();
        for &p in &tried {
            for bindings in match_at(&patterns[p], tokens, start) {
                let end = bindings.last().map_or(start, |b| b.end);
                out.push(VariantMatch {
                    sentence,
                    start,
                    pattern: p,
                    end,
                    bindings,
                });
            }
        }
    }
    out
}

struct PatternIndex<'a> {
    anchored: HashMap<&'a Lemma, Vec<usize>>,
    floating: Vec<usize>,
}

impl<'a> PatternIndex<'a> {
    fn new(patterns: &'a [VariantPattern]) -> Self {
        let mut anchored: HashMap<&Lemma, Vec<usize>> = HashMap::new();
        let mut floating = Vec::new();
        for (i, p) in patterns.iter().enumerate() {
            match p.anchor() {
                Some(word) => anchored.entry(&word.lemma).or_default().push(i),
                None => floating.push(i),
            }
        }
        PatternIndex { anchored, floating }
    }
}

/// Runs every pattern at every position of every sentence, bucketing
/// patterns by their first lemma. Output is ordered by
/// `(sentence, start, pattern)` and does not depend on the thread count.
pub fn scan(corpus: &Corpus, patterns: &[VariantPattern]) -> Vec<VariantMatch> {
    if patterns.is_empty() {
        return Vec::new();
    }
    let index = PatternIndex::new(patterns);
    let per_sentence = |(id, tokens): (usize, &Vec<Token>)| scan_sentence(id, tokens, patterns, &index);

    #[cfg(feature = "parallel")]
    let chunks: Vec<Vec<VariantMatch>> = {
        use rayon::prelude::*;
        corpus.sentences.par_iter().enumerate().map(per_sentence).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let chunks: Vec<Vec<VariantMatch>> = corpus.sentences.iter().enumerate().map(per_sentence).collect();

    chunks.into_iter().flatten().collect()
}

/// Ids of the terms that occur in the corpus either verbatim or as one of
/// their variants.
pub fn find_present_terms(corpus: &Corpus, terms: &[Term], grammar: &MetaGrammar) -> BTreeSet<TermId> {
    let patterns: Vec<VariantPattern> = terms
        .iter()
        .flat_map(|t| std::iter::once(base_pattern(t)).chain(compile_variant_patterns(t, grammar)))
        .collect();
    scan(corpus, &patterns)
        .into_iter()
        .map(|m| patterns[m.pattern].source_id())
        .collect()
}
