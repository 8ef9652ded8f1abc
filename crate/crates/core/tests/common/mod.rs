//! Test oracles and random instance generators shared by the integration
//! tests. Nothing here calls the library's scanner or closure loop.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use termvar::corpus::Token;
use termvar::grammar::{compile_variant_patterns, PatternElement, SlotSpec, VariantPattern};
use termvar::{
    extract_candidate, AcquisitionLink, Corpus, Extraction, Family, MetaGrammar, Term, VariantMatch,
    WordClass,
};

pub const NOUNS: &[&str] = &["cell", "tissue", "tumor", "control", "study", "rat", "serum", "albumin", "blood", "liver"];
pub const ADJECTIVES: &[&str] = &["normal", "malignant", "viral", "clinical", "young"];

pub type MatchKey = (usize, usize, usize, usize, Vec<(usize, usize)>);

pub fn key(m: &VariantMatch) -> MatchKey {
    (
        m.sentence,
        m.start,
        m.pattern,
        m.end,
        m.bindings.iter().map(|b| (b.start, b.end)).collect(),
    )
}

fn oracle_admits(element: &PatternElement, token: &Token) -> bool {
    match element {
        PatternElement::Fixed(word) => word.lemma == token.lemma,
        PatternElement::Open(SlotSpec::Wild { classes, .. }) => {
            token.class == WordClass::Other || classes.contains(token.class)
        }
        PatternElement::Open(SlotSpec::Conj) => token.class == WordClass::Conjunction,
        PatternElement::Open(SlotSpec::Prep) => token.class == WordClass::Preposition,
        PatternElement::Open(SlotSpec::OptDet) => token.class == WordClass::Determiner,
        PatternElement::Open(SlotSpec::TermWord(_)) => panic!("uncompiled term word"),
    }
}

/// Every assignment of token counts to the elements of `pattern`.
pub fn count_assignments(pattern: &VariantPattern) -> Vec<Vec<usize>> {
    let mut assignments: Vec<Vec<usize>> = vec![vec![]];
    for element in pattern.elements() {
        assignments = assignments
            .into_iter()
            .flat_map(|prefix| {
                (element.min_len()..=element.max_len()).map(move |n| {
                    let mut next = prefix.clone();
                    next.push(n);
                    next
                })
            })
            .collect();
    }
    assignments
}

/// Tries every count assignment at `start`.
pub fn naive_matches_at(
    pattern: &VariantPattern,
    assignments: &[Vec<usize>],
    tokens: &[Token],
    start: usize,
) -> Vec<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    'assignment: for counts in assignments {
        let mut pos = start;
        let mut spans = Vec::new();
        for (element, &n) in pattern.elements().iter().zip(counts) {
            if pos + n > tokens.len() {
                continue 'assignment;
            }
            for token in &tokens[pos..pos + n] {
                if !oracle_admits(element, token) {
                    continue 'assignment;
                }
            }
            spans.push((pos, pos + n));
            pos += n;
        }
        out.push(spans);
    }
    out
}

pub fn naive_scan(corpus: &Corpus, patterns: &[VariantPattern]) -> BTreeSet<MatchKey> {
    let assignments: Vec<_> = patterns.iter().map(count_assignments).collect();
    let mut out = BTreeSet::new();
    for (s, tokens) in corpus.sentences().iter().enumerate() {
        for start in 0..tokens.len() {
            for (p, pattern) in patterns.iter().enumerate() {
                for spans in naive_matches_at(pattern, &assignments[p], tokens, start) {
                    let end = spans.last().map_or(start, |b| b.1);
                    out.insert((s, start, p, end, spans));
                }
            }
        }
    }
    out
}

fn to_match(k: &MatchKey) -> VariantMatch {
    VariantMatch {
        sentence: k.0,
        start: k.1,
        pattern: k.2,
        end: k.3,
        bindings: k.4.iter().map(|&(a, b)| a..b).collect(),
    }
}

/// Candidates of one full pass over `terms` with the naive scanner.
pub fn naive_acquire(corpus: &Corpus, grammar: &MetaGrammar, terms: &[Term], min_content: usize) -> BTreeSet<Term> {
    let patterns: Vec<_> = terms.iter().flat_map(|t| compile_variant_patterns(t, grammar)).collect();
    naive_scan(corpus, &patterns)
        .iter()
        .filter_map(|k| match extract_candidate(corpus, &patterns[k.2], &to_match(k), min_content) {
            Extraction::Candidate(t) => Some(t),
            Extraction::Unproductive(_) => None,
        })
        .collect()
}

/// Full rescan of every known term each iteration until nothing is added.
/// Returns candidate -> cycle.
pub fn oracle_closure(
    corpus: &Corpus,
    grammar: &MetaGrammar,
    seeds: &[Term],
    families: &[Family],
) -> BTreeMap<Term, u32> {
    let grammar = grammar.restrict(families);
    let mut known: BTreeSet<Term> = seeds.iter().cloned().collect();
    let mut found = BTreeMap::new();
    let mut cycle = 1;
    loop {
        let all: Vec<Term> = known.iter().cloned().collect();
        let fresh: Vec<Term> = naive_acquire(corpus, &grammar, &all, 0)
            .into_iter()
            .filter(|t| !known.contains(t))
            .collect();
        if fresh.is_empty() {
            return found;
        }
        for t in fresh {
            found.insert(t.clone(), cycle);
            known.insert(t);
        }
        cycle += 1;
    }
}

/// Classes by breadth-first search over the undirected link graph.
pub fn oracle_classes(terms: &BTreeSet<Term>, edges: &[(Term, Term)]) -> BTreeSet<BTreeSet<Term>> {
    let mut adjacency: HashMap<&Term, Vec<&Term>> = HashMap::new();
    for (a, b) in edges {
        adjacency.entry(a).or_default().push(b);
        adjacency.entry(b).or_default().push(a);
    }
    let mut all: BTreeSet<&Term> = terms.iter().collect();
    for (a, b) in edges {
        all.insert(a);
        all.insert(b);
    }
    let mut seen = HashSet::new();
    let mut classes = BTreeSet::new();
    for &start in &all {
        if !seen.insert(start) {
            continue;
        }
        let mut class = BTreeSet::from([start.clone()]);
        let mut queue = VecDeque::from([start]);
        while let Some(t) = queue.pop_front() {
            for &n in adjacency.get(t).into_iter().flatten() {
                if seen.insert(n) {
                    class.insert(n.clone());
                    queue.push_back(n);
                }
            }
        }
        classes.insert(class);
    }
    classes
}

pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

pub fn tok(lemma: &str, class: WordClass) -> Token {
    Token {
        surface: lemma.to_string(),
        lemma: lemma.parse().unwrap(),
        class,
    }
}

fn content_token(rng: &mut ChaCha8Rng) -> Token {
    if rng.random_bool(0.6) {
        tok(NOUNS.choose(rng).unwrap(), WordClass::Noun)
    } else {
        tok(ADJECTIVES.choose(rng).unwrap(), WordClass::Adjective)
    }
}

fn filler_token(rng: &mut ChaCha8Rng) -> Token {
    let mut t = match rng.random_range(0..10) {
        0..=4 => content_token(rng),
        5 => tok(["and", "or"].choose(rng).unwrap(), WordClass::Conjunction),
        6 => tok(["of", "for"].choose(rng).unwrap(), WordClass::Preposition),
        7 => tok(["the", "their"].choose(rng).unwrap(), WordClass::Determiner),
        8 => tok("be", WordClass::Verb),
        _ => tok("it", WordClass::Pronoun),
    };
    // Some tokens lose their tag, as in an untagged corpus.
    if rng.random_bool(0.1) && !matches!(t.class, WordClass::Conjunction | WordClass::Preposition | WordClass::Determiner) {
        t.class = WordClass::Other;
    }
    t
}

pub fn random_term(rng: &mut ChaCha8Rng) -> Term {
    let len = if rng.random_bool(0.75) { 2 } else { 3 };
    let mut words: Vec<String> = (0..len - 1)
        .map(|_| {
            if rng.random_bool(0.5) {
                NOUNS.choose(rng).unwrap().to_string()
            } else {
                ADJECTIVES.choose(rng).unwrap().to_string()
            }
        })
        .collect();
    words.push(NOUNS.choose(rng).unwrap().to_string());
    Term::parse(&words.join(" ")).unwrap()
}

/// Writes out a variant of `term` shaped by a random rule.
fn realize(rng: &mut ChaCha8Rng, term: &Term, grammar: &MetaGrammar) -> Vec<Token> {
    let patterns = compile_variant_patterns(term, grammar);
    let Some(pattern) = patterns.choose(rng) else {
        return term.words().iter().map(|w| tok(w.lemma.as_str(), w.class)).collect();
    };
    let mut out = Vec::new();
    for element in pattern.elements() {
        match element {
            PatternElement::Fixed(w) => out.push(tok(w.lemma.as_str(), WordClass::Noun)),
            PatternElement::Open(SlotSpec::Wild { min, max, .. }) => {
                for _ in 0..rng.random_range(*min..=*max) {
                    out.push(content_token(rng));
                }
            }
            PatternElement::Open(SlotSpec::Conj) => out.push(tok("and", WordClass::Conjunction)),
            PatternElement::Open(SlotSpec::Prep) => out.push(tok("of", WordClass::Preposition)),
            PatternElement::Open(SlotSpec::OptDet) => {
                if rng.random_bool(0.5) {
                    out.push(tok("the", WordClass::Determiner));
                }
            }
            PatternElement::Open(SlotSpec::TermWord(_)) => unreachable!(),
        }
    }
    out
}

pub struct Instance {
    pub corpus: Corpus,
    pub seeds: Vec<Term>,
}

/// A random corpus of at most `max_tokens` tokens with planted variants of
/// random terms, and up to `max_seeds` seed terms.
pub fn random_instance(seed: u64, max_tokens: usize, max_seeds: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grammar = MetaGrammar::default_rules();
    let n_seeds = rng.random_range(1..=max_seeds);
    let seeds: Vec<Term> = (0..n_seeds).map(|_| random_term(&mut rng)).collect();
    let mut sentences = Vec::new();
    let mut total = 0;
    loop {
        let mut sentence = Vec::new();
        for _ in 0..rng.random_range(0..3) {
            sentence.push(filler_token(&mut rng));
        }
        if rng.random_bool(0.8) {
            let term = if rng.random_bool(0.4) {
                seeds.choose(&mut rng).unwrap().clone()
            } else {
                random_term(&mut rng)
            };
            sentence.extend(realize(&mut rng, &term, &grammar));
        }
        for _ in 0..rng.random_range(0..3) {
            sentence.push(filler_token(&mut rng));
        }
        if sentence.is_empty() {
            continue;
        }
        if total + sentence.len() > max_tokens {
            break;
        }
        total += sentence.len();
        sentences.push(sentence);
    }
    if sentences.is_empty() {
        sentences.push(vec![tok("cell", WordClass::Noun)]);
    }
    Instance {
        corpus: Corpus::from_sentences(sentences),
        seeds,
    }
}

/// Follows incoming links from `term` back to a seed, choosing links of
/// strictly decreasing cycle; returns the chain length.
pub fn chain_length(term: &Term, cycles: &BTreeMap<Term, u32>, links: &[AcquisitionLink]) -> Option<u32> {
    let mut current = term.clone();
    let mut steps = 0;
    loop {
        let cycle = match cycles.get(&current) {
            None => return Some(steps),
            Some(&c) => c,
        };
        let previous = links.iter().find(|l| {
            l.candidate == current && cycles.get(&l.source).copied().unwrap_or(0) + 1 == cycle
        })?;
        current = previous.source.clone();
        steps += 1;
    }
}

/// Up to 50 random terms, a random universe drawn from them, and random
/// links of every family.
pub fn random_links(seed: u64) -> (BTreeSet<Term>, Vec<AcquisitionLink>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=50);
    let terms: Vec<Term> = (0..n).map(|_| random_term(&mut rng)).collect();
    let universe: BTreeSet<Term> = terms.iter().take(rng.random_range(0..=n)).cloned().collect();
    let links = (0..rng.random_range(0..60))
        .map(|i| {
            let family = *Family::ALL.choose(&mut rng).unwrap();
            AcquisitionLink {
                cycle: rng.random_range(1..5),
                source: terms.choose(&mut rng).unwrap().clone(),
                candidate: terms.choose(&mut rng).unwrap().clone(),
                rule: Arc::from(format!("{}{}", family.tag(), i % 3)),
                family,
                head_coordination: family == Family::Coordination && rng.random_bool(0.3),
                sentence: rng.random_range(0..20),
                start: 0,
                end: 4,
            }
        })
        .collect();
    (universe, links)
}
