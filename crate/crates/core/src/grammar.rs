//! Meta-rules and their compilation into concrete variant patterns.
//!
//! A meta-rule describes how a 2- or 3-word term may be realized as a
//! coordination, an insertion or a permutation, and which part of that
//! realization forms a candidate term. Rules are written in a small
//! line-oriented language:
//!
//! ```text
//! rule coor2_head family=coor arity=2 pattern=T0,C,W[1-1:NA],T1 extract=2,3
//! ```
//!
//! Compiling a rule against a term substitutes the term's lemmas for the
//! `T<i>` elements, giving a [`VariantPattern`] the scanner can run.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::term::{Term, TermId, TermWord, WordClass, MAX_TERM_LEN, MIN_TERM_LEN};

const DEFAULT_GRAMMAR: &str = include_str!("../data/default.mg");

/// Upper bound on the number of words a single open slot may bind.
pub const MAX_WILD: u8 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrammarError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: rule {rule}: {message}")]
    Validation {
        line: usize,
        rule: String,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    #[serde(rename = "coor")]
    Coordination,
    #[serde(rename = "ins")]
    Insertion,
    #[serde(rename = "perm")]
    Permutation,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Coordination, Family::Insertion, Family::Permutation];

    pub fn tag(self) -> &'static str {
        match self {
            Family::Coordination => "coor",
            Family::Insertion => "ins",
            Family::Permutation => "perm",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.tag() == s)
            .ok_or_else(|| format!("unknown family {s:?} (expected coor, ins or perm)"))
    }
}

/// A set of word classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ClassSet(u8);

impl ClassSet {
    pub fn empty() -> Self {
        ClassSet(0)
    }

    pub fn with(self, class: WordClass) -> Self {
        ClassSet(self.0 | 1 << class as u8)
    }

    pub fn contains(self, class: WordClass) -> bool {
        self.0 & (1 << class as u8) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = WordClass> {
        WordClass::ALL.into_iter().filter(move |c| self.contains(*c))
    }

    /// Whether a token of `class` satisfies this constraint. Untagged
    /// (`Other`) tokens satisfy every constraint.
    pub fn admits(self, class: WordClass) -> bool {
        class == WordClass::Other || self.contains(class)
    }
}

impl FromIterator<WordClass> for ClassSet {
    fn from_iter<I: IntoIterator<Item = WordClass>>(iter: I) -> Self {
        iter.into_iter().fold(ClassSet::empty(), ClassSet::with)
    }
}

impl fmt::Display for ClassSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for class in self.iter() {
            f.write_str(class.tag())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlotSpec {
    /// The i-th word of the source term.
    TermWord(usize),
    /// Between `min` and `max` words whose classes satisfy `classes`.
    Wild { classes: ClassSet, min: u8, max: u8 },
    Conj,
    Prep,
    /// Zero or one determiner.
    OptDet,
}

impl SlotSpec {
    pub fn min_len(self) -> usize {
        match self {
            SlotSpec::Wild { min, .. } => min as usize,
            SlotSpec::OptDet => 0,
            _ => 1,
        }
    }

    pub fn max_len(self) -> usize {
        match self {
            SlotSpec::Wild { max, .. } => max as usize,
            _ => 1,
        }
    }
}

impl fmt::Display for SlotSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlotSpec::TermWord(i) => write!(f, "T{i}"),
            SlotSpec::Wild { classes, min, max } => write!(f, "W[{min}-{max}:{classes}]"),
            SlotSpec::Conj => f.write_str("C"),
            SlotSpec::Prep => f.write_str("P"),
            SlotSpec::OptDet => f.write_str("D?"),
        }
    }
}

impl FromStr for SlotSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "C" => return Ok(SlotSpec::Conj),
            "P" => return Ok(SlotSpec::Prep),
            "D?" => return Ok(SlotSpec::OptDet),
            _ => {}
        }
        if let Some(index) = s.strip_prefix('T') {
            return index
                .parse::<usize>()
                .map(SlotSpec::TermWord)
                .map_err(|_| format!("bad term-word element {s:?}"));
        }
        let body = s
            .strip_prefix("W[")
            .and_then(|rest| rest.strip_suffix(']'))
            .ok_or_else(|| format!("unknown pattern element {s:?}"))?;
        let (range, tags) = body
            .split_once(':')
            .ok_or_else(|| format!("missing class list in {s:?}"))?;
        let (min, max) = range
            .split_once('-')
            .ok_or_else(|| format!("missing count range in {s:?}"))?;
        let min: u8 = min.parse().map_err(|_| format!("bad min count in {s:?}"))?;
        let max: u8 = max.parse().map_err(|_| format!("bad max count in {s:?}"))?;
        let classes = parse_class_list(tags).ok_or_else(|| format!("bad class list in {s:?}"))?;
        Ok(SlotSpec::Wild { classes, min, max })
    }
}

fn parse_class_list(mut tags: &str) -> Option<ClassSet> {
    let mut set = ClassSet::empty();
    while !tags.is_empty() {
        let (class, rest) = match tags.strip_prefix("PRO") {
            Some(rest) => (WordClass::Pronoun, rest),
            None => {
                let (head, rest) = tags.split_at(tags.chars().next()?.len_utf8());
                (WordClass::from_tag(head)?, rest)
            }
        };
        set = set.with(class);
        tags = rest;
    }
    (!set.is_empty()).then_some(set)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetaRule {
    name: String,
    family: Family,
    arity: usize,
    pattern: Vec<SlotSpec>,
    extraction: Vec<usize>,
}

impl MetaRule {
    /// Builds and validates a rule.
    pub fn new(
        name: impl Into<String>,
        family: Family,
        arity: usize,
        pattern: Vec<SlotSpec>,
        extraction: Vec<usize>,
    ) -> Result<MetaRule, String> {
        let rule = MetaRule {
            name: name.into(),
            family,
            arity,
            pattern,
            extraction,
        };
        rule.validate()?;
        Ok(rule)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn pattern(&self) -> &[SlotSpec] {
        &self.pattern
    }

    pub fn extraction(&self) -> &[usize] {
        &self.extraction
    }

    pub fn min_len(&self) -> usize {
        self.pattern.iter().map(|s| s.min_len()).sum()
    }

    pub fn max_len(&self) -> usize {
        self.pattern.iter().map(|s| s.max_len()).sum()
    }

    /// A coordination whose candidate does not keep the source head, as in
    /// `surgical exploration and closure`: the heads are coordinated.
    pub fn is_head_coordination(&self) -> bool {
        let head = SlotSpec::TermWord(self.arity - 1);
        self.family == Family::Coordination
            && !self.extraction.iter().any(|&i| self.pattern[i] == head)
    }

    fn validate(&self) -> Result<(), String> {
        if !(MIN_TERM_LEN..=MAX_TERM_LEN).contains(&self.arity) {
            return Err(format!("arity {} is not 2 or 3", self.arity));
        }
        let mut term_words = vec![false; self.arity];
        let (mut conj, mut prep) = (0, 0);
        for slot in &self.pattern {
            match *slot {
                SlotSpec::TermWord(i) => {
                    *term_words
                        .get_mut(i)
                        .ok_or_else(|| format!("T{i} out of range for arity {}", self.arity))? =
                        true;
                }
                SlotSpec::Wild { min, max, .. } => {
                    if min > max {
                        return Err(format!("{slot}: min count exceeds max count"));
                    }
                    if max > MAX_WILD {
                        return Err(format!("{slot}: max count exceeds {MAX_WILD}"));
                    }
                }
                SlotSpec::Conj => conj += 1,
                SlotSpec::Prep => prep += 1,
                SlotSpec::OptDet => {}
            }
        }
        if let Some(i) = term_words.iter().position(|seen| !seen) {
            return Err(format!("pattern never uses T{i}"));
        }
        let (want_conj, want_prep) = match self.family {
            Family::Coordination => (1, 0),
            Family::Insertion => (0, 0),
            Family::Permutation => (0, 1),
        };
        if conj != want_conj {
            return Err(format!(
                "{} rules need exactly {want_conj} C element(s), found {conj}",
                self.family
            ));
        }
        if prep != want_prep {
            return Err(format!(
                "{} rules need exactly {want_prep} P element(s), found {prep}",
                self.family
            ));
        }
        if self.max_len() > self.arity + 3 {
            return Err(format!(
                "pattern may span {} tokens, limit is {}",
                self.max_len(),
                self.arity + 3
            ));
        }
        if self.extraction.is_empty() {
            return Err("empty extraction".into());
        }
        let mut seen = HashSet::new();
        let (mut min, mut max) = (0, 0);
        for &i in &self.extraction {
            let slot = self
                .pattern
                .get(i)
                .ok_or_else(|| format!("extraction position {i} out of range"))?;
            if !seen.insert(i) {
                return Err(format!("extraction position {i} repeated"));
            }
            match slot {
                SlotSpec::TermWord(_) | SlotSpec::Wild { .. } => {}
                other => return Err(format!("extraction cannot use {other} element")),
            }
            min += slot.min_len();
            max += slot.max_len();
        }
        if min > MAX_TERM_LEN || max < MIN_TERM_LEN {
            return Err(format!(
                "extraction yields {min}..={max} words, never 2 or 3"
            ));
        }
        let last = self.pattern[*self.extraction.last().expect("non-empty")];
        let noun_last = match last {
            SlotSpec::TermWord(_) => true,
            SlotSpec::Wild { classes, .. } => classes.contains(WordClass::Noun),
            _ => false,
        };
        if !noun_last {
            return Err("extraction must end on a noun-compatible element".into());
        }
        Ok(())
    }
}

impl fmt::Display for MetaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |items: Vec<String>| items.join(",");
        write!(
            f,
            "rule {} family={} arity={} pattern={} extract={}",
            self.name,
            self.family,
            self.arity,
            join(self.pattern.iter().map(|s| s.to_string()).collect()),
            join(self.extraction.iter().map(|i| i.to_string()).collect()),
        )
    }
}

/// An ordered, validated collection of meta-rules with unique names.
#[derive(Debug, Clone, Default)]
pub struct MetaGrammar {
    rules: Vec<Arc<MetaRule>>,
}

impl MetaGrammar {
    /// Parses a meta-grammar document. `#` starts a comment line.
    pub fn parse(text: &str) -> Result<MetaGrammar, GrammarError> {
        let mut rules = Vec::new();
        let mut names = HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let rule = parse_rule_line(line, line_no)?;
            if !names.insert(rule.name.clone()) {
                return Err(GrammarError::Validation {
                    line: line_no,
                    rule: rule.name,
                    message: "duplicate rule name".into(),
                });
            }
            rules.push(Arc::new(rule));
        }
        Ok(MetaGrammar { rules })
    }

    /// The bundled grammar covering coordination, insertion and permutation
    /// of 2- and 3-word terms.
    pub fn default_rules() -> MetaGrammar {
        MetaGrammar::parse(DEFAULT_GRAMMAR).expect("bundled grammar is valid")
    }

    pub fn default_source() -> &'static str {
        DEFAULT_GRAMMAR
    }

    pub fn from_rules(rules: impl IntoIterator<Item = MetaRule>) -> Result<MetaGrammar, GrammarError> {
        let mut names = HashSet::new();
        let mut out = Vec::new();
        for rule in rules {
            if !names.insert(rule.name.clone()) {
                return Err(GrammarError::Validation {
                    line: 0,
                    rule: rule.name,
                    message: "duplicate rule name".into(),
                });
            }
            out.push(Arc::new(rule));
        }
        Ok(MetaGrammar { rules: out })
    }

    pub fn rules(&self) -> &[Arc<MetaRule>] {
        &self.rules
    }

    pub fn get(&self, name: &str) -> Option<&Arc<MetaRule>> {
        self.rules.iter().find(|r| r.name == name)
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Keeps only the rules of the given families.
    pub fn restrict(&self, families: &[Family]) -> MetaGrammar {
        MetaGrammar {
            rules: self
                .rules
                .iter()
                .filter(|r| families.contains(&r.family))
                .cloned()
                .collect(),
        }
    }
}

fn parse_rule_line(line: &str, line_no: usize) -> Result<MetaRule, GrammarError> {
    let parse_err = |message: String| GrammarError::Parse { line: line_no, message };
    let mut parts = line.split_whitespace();
    if parts.next() != Some("rule") {
        return Err(parse_err("expected `rule <name> ...`".into()));
    }
    let name = parts
        .next()
        .ok_or_else(|| parse_err("missing rule name".into()))?
        .to_string();
    let (mut family, mut arity, mut pattern, mut extract) = (None, None, None, None);
    for part in parts {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| parse_err(format!("expected key=value, found {part:?}")))?;
        let slot = match key {
            "family" => &mut family,
            "arity" => &mut arity,
            "pattern" => &mut pattern,
            "extract" => &mut extract,
            _ => return Err(parse_err(format!("unknown key {key:?}"))),
        };
        if slot.replace(value).is_some() {
            return Err(parse_err(format!("key {key:?} given twice")));
        }
    }
    let missing = |key: &str| parse_err(format!("missing {key}="));
    let family: Family = family
        .ok_or_else(|| missing("family"))?
        .parse()
        .map_err(parse_err)?;
    let arity_text = arity.ok_or_else(|| missing("arity"))?;
    let arity: usize = arity_text
        .parse()
        .map_err(|_| parse_err(format!("bad arity {arity_text:?}")))?;
    let pattern = pattern
        .ok_or_else(|| missing("pattern"))?
        .split(',')
        .map(SlotSpec::from_str)
        .collect::<Result<Vec<_>, _>>()
        .map_err(parse_err)?;
    let extraction = extract
        .ok_or_else(|| missing("extract"))?
        .split(',')
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| parse_err(format!("bad extraction position {s:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    MetaRule::new(name.clone(), family, arity, pattern, extraction).map_err(|message| {
        GrammarError::Validation {
            line: line_no,
            rule: name,
            message,
        }
    })
}

/// One element of a compiled pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternElement {
    /// A source-term word, matched by lemma.
    Fixed(TermWord),
    /// Any non-`TermWord` slot.
    Open(SlotSpec),
}

impl PatternElement {
    pub fn min_len(&self) -> usize {
        match self {
            PatternElement::Fixed(_) => 1,
            PatternElement::Open(slot) => slot.min_len(),
        }
    }

    pub fn max_len(&self) -> usize {
        match self {
            PatternElement::Fixed(_) => 1,
            PatternElement::Open(slot) => slot.max_len(),
        }
    }
}

/// Where a compiled pattern comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternOrigin {
    /// The term's own contiguous lemma sequence.
    Base,
    Rule(Arc<MetaRule>),
}

impl PatternOrigin {
    pub fn rule_name(&self) -> &str {
        match self {
            PatternOrigin::Base => "base",
            PatternOrigin::Rule(rule) => rule.name(),
        }
    }

    pub fn rule(&self) -> Option<&MetaRule> {
        match self {
            PatternOrigin::Base => None,
            PatternOrigin::Rule(rule) => Some(rule),
        }
    }
}

/// A meta-rule instantiated on a concrete term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariantPattern {
    source: Term,
    origin: PatternOrigin,
    elements: Vec<PatternElement>,
}

impl VariantPattern {
    pub fn source(&self) -> &Term {
        &self.source
    }

    pub fn source_id(&self) -> TermId {
        self.source.id()
    }

    pub fn origin(&self) -> &PatternOrigin {
        &self.origin
    }

    pub fn elements(&self) -> &[PatternElement] {
        &self.elements
    }

    pub fn min_len(&self) -> usize {
        self.elements.iter().map(PatternElement::min_len).sum()
    }

    pub fn max_len(&self) -> usize {
        self.elements.iter().map(PatternElement::max_len).sum()
    }

    /// The first element's lemma when the pattern starts with a term word.
    pub fn anchor(&self) -> Option<&TermWord> {
        match self.elements.first() {
            Some(PatternElement::Fixed(word)) => Some(word),
            _ => None,
        }
    }
}

impl fmt::Display for VariantPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[", self.origin.rule_name())?;
        for (i, element) in self.elements.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            match element {
                PatternElement::Fixed(word) => write!(f, "{}", word.lemma)?,
                PatternElement::Open(slot) => write!(f, "{slot}")?,
            }
        }
        f.write_str("]")
    }
}

/// Instantiates every rule whose arity matches the term length, in rule
/// declaration order.
pub fn compile_variant_patterns(term: &Term, grammar: &MetaGrammar) -> Vec<VariantPattern> {
    grammar
        .rules()
        .iter()
        .filter(|rule| rule.arity() == term.len())
        .map(|rule| VariantPattern {
            source: term.clone(),
            origin: PatternOrigin::Rule(Arc::clone(rule)),
            elements: rule
                .pattern()
                .iter()
                .map(|slot| match *slot {
                    SlotSpec::TermWord(i) => PatternElement::Fixed(term.words()[i].clone()),
                    other => PatternElement::Open(other),
                })
                .collect(),
        })
        .collect()
}

/// The pattern matching the term's own lemma sequence.
pub fn base_pattern(term: &Term) -> VariantPattern {
    VariantPattern {
        source: term.clone(),
        origin: PatternOrigin::Base,
        elements: term
            .words()
            .iter()
            .cloned()
            .map(PatternElement::Fixed)
            .collect(),
    }
}
