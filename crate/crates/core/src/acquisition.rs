//! Candidate extraction and the incremental acquisition loop.
//!
//! Each cycle compiles variant patterns for the terms discovered in the
//! previous cycle only (the reference terms on the first cycle), scans the
//! corpus, and extracts candidates from the matches. The loop stops at the
//! first cycle that finds nothing new.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::corpus::{scan, Corpus, VariantMatch};
use crate::grammar::{compile_variant_patterns, Family, MetaGrammar, PatternElement, VariantPattern};
use crate::term::{Term, TermId, TermStatus, TermWord, WordClass, MAX_TERM_LEN, MIN_TERM_LEN};

/// Identifier of the generator used to draw bootstrap samples.
pub const RNG_ALGORITHM: &str = "chacha8";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AcquisitionError {
    #[error("no seed terms")]
    NoSeeds,
    #[error("no variant family selected")]
    NoFamilies,
    #[error("bootstrap size {size} is outside 1..={available}")]
    SizeTooLarge { size: usize, available: usize },
    #[error("bootstrap needs at least one trial")]
    NoTrials,
}

/// A directed acquisition edge: `candidate` was extracted from a variant of
/// `source`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AcquisitionLink {
    pub cycle: u32,
    pub source: Term,
    pub candidate: Term,
    pub rule: Arc<str>,
    pub family: Family,
    /// Coordination in which the two heads differ, e.g. `cirrhotic patient
    /// and control`.
    pub head_coordination: bool,
    pub sentence: usize,
    pub start: usize,
    pub end: usize,
}

/// Why a match produced no candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Unproductive {
    /// The pattern has no extraction template (the term's base form).
    NoTemplate,
    /// An extracted open-slot word is a function word.
    FunctionWord,
    /// The extracted sequence is not 2 or 3 words long.
    Length,
    /// The last extracted word cannot head a term.
    NonNounHead,
    SameAsSource,
    TooFewContentWords,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Extraction {
    Candidate(Term),
    Unproductive(Unproductive),
}

#[derive(Debug, Clone)]
pub struct AcquisitionOptions {
    pub families: Vec<Family>,
    /// Candidates with fewer content words are dropped. 0 keeps everything.
    pub min_content_words: usize,
}

impl Default for AcquisitionOptions {
    fn default() -> Self {
        AcquisitionOptions {
            families: Family::ALL.to_vec(),
            min_content_words: 0,
        }
    }
}

impl AcquisitionOptions {
    pub fn with_families(families: &[Family]) -> Self {
        AcquisitionOptions {
            families: families.to_vec(),
            ..Default::default()
        }
    }
}

/// Applies the extraction template of the match's rule to the bound tokens.
pub fn extract_candidate(
    corpus: &Corpus,
    pattern: &VariantPattern,
    m: &VariantMatch,
    min_content_words: usize,
) -> Extraction {
    use Extraction::Unproductive as U;

    let Some(rule) = pattern.origin().rule() else {
        return U(Unproductive::NoTemplate);
    };
    let tokens = corpus.sentence(m.sentence);
    let mut words = Vec::with_capacity(MAX_TERM_LEN);
    // Classes come from the matched tokens, so the result does not depend on
    // how the source term happened to be tagged. Only words bound by open
    // slots have to be content words.
    for &i in rule.extraction() {
        let open = matches!(pattern.elements()[i], PatternElement::Open(_));
        for token in &tokens[m.bindings[i].clone()] {
            if open && !token.class.is_content() {
                return U(Unproductive::FunctionWord);
            }
            words.push(TermWord::new(token.lemma.clone(), token.class));
        }
    }
    if !(MIN_TERM_LEN..=MAX_TERM_LEN).contains(&words.len()) {
        return U(Unproductive::Length);
    }
    let head = words.last_mut().expect("length checked");
    if !head.class.is_noun_compatible() {
        return U(Unproductive::NonNounHead);
    }
    head.class = WordClass::Noun;
    let candidate = Term::new(words).expect("length and head checked");
    if &candidate == pattern.source() {
        return U(Unproductive::SameAsSource);
    }
    if candidate.content_words() < min_content_words {
        return U(Unproductive::TooFewContentWords);
    }
    Extraction::Candidate(candidate)
}

#[derive(Debug, Clone, Default)]
pub struct CycleOutput {
    /// Extracted terms that were not known before the cycle, sorted.
    pub new_candidates: Vec<Term>,
    /// One link per productive match, including matches whose candidate was
    /// already known.
    pub links: Vec<AcquisitionLink>,
}

/// One acquisition step from `active` terms. `grammar` is used as given;
/// restrict it beforehand to select families.
pub fn run_cycle(
    corpus: &Corpus,
    grammar: &MetaGrammar,
    active: &[Term],
    known: &HashSet<TermId>,
    cycle: u32,
    min_content_words: usize,
) -> CycleOutput {
    let patterns: Vec<VariantPattern> = active
        .iter()
        .flat_map(|t| compile_variant_patterns(t, grammar))
        .collect();
    let mut fresh = BTreeSet::new();
    let mut links = Vec::new();
    for m in scan(corpus, &patterns) {
        let pattern = &patterns[m.pattern];
        let Extraction::Candidate(candidate) = extract_candidate(corpus, pattern, &m, min_content_words)
        else {
            continue;
        };
        let rule = pattern.origin().rule().expect("compiled from a rule");
        if !known.contains(&candidate.id()) {
            fresh.insert(candidate.clone());
        }
        links.push(AcquisitionLink {
            cycle,
            source: pattern.source().clone(),
            candidate,
            rule: Arc::from(rule.name()),
            family: rule.family(),
            head_coordination: rule.is_head_coordination(),
            sentence: m.sentence,
            start: m.start,
            end: m.end,
        });
    }
    CycleOutput {
        new_candidates: fresh.into_iter().collect(),
        links,
    }
}

#[derive(Debug, Clone, Default)]
pub struct AcquisitionResult {
    /// Every reference and candidate term with its status.
    pub statuses: BTreeMap<Term, TermStatus>,
    /// Sorted by `(cycle, source, candidate, rule, location)`.
    pub links: Vec<AcquisitionLink>,
    /// Index of the first cycle that yielded nothing new.
    pub cycles_run: u32,
    /// New candidates per cycle, the final zero included.
    pub per_cycle_counts: Vec<usize>,
}

impl AcquisitionResult {
    /// Candidates with their discovery cycle, ordered by `(cycle, term)`.
    pub fn candidates(&self) -> Vec<(&Term, u32)> {
        let mut out: Vec<_> = self
            .statuses
            .iter()
            .filter(|(_, s)| s.cycle() > 0)
            .map(|(t, s)| (t, s.cycle()))
            .collect();
        out.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
        out
    }

    pub fn candidate_set(&self) -> BTreeSet<Term> {
        self.candidates().into_iter().map(|(t, _)| t.clone()).collect()
    }

    pub fn candidate_count(&self) -> usize {
        self.statuses.values().filter(|s| s.cycle() > 0).count()
    }

    /// Number of cycles that produced at least one candidate.
    pub fn productive_cycles(&self) -> u32 {
        self.cycles_run.saturating_sub(1)
    }

    pub fn status(&self, term: &Term) -> Option<TermStatus> {
        self.statuses.get(term).copied()
    }

    pub fn incoming<'a>(&'a self, term: &'a Term) -> impl Iterator<Item = &'a AcquisitionLink> + 'a {
        self.links.iter().filter(move |l| &l.candidate == term)
    }
}

/// Iterates [`run_cycle`] from `seeds` until a cycle finds no new term.
pub fn run_closure(
    corpus: &Corpus,
    grammar: &MetaGrammar,
    seeds: &[Term],
    options: &AcquisitionOptions,
) -> Result<AcquisitionResult, AcquisitionError> {
    if seeds.is_empty() {
        return Err(AcquisitionError::NoSeeds);
    }
    if options.families.is_empty() {
        return Err(AcquisitionError::NoFamilies);
    }
    let grammar = grammar.restrict(&options.families);
    let mut result = AcquisitionResult::default();
    let mut known = HashSet::new();
    for seed in seeds {
        if known.insert(seed.id()) {
            result.statuses.insert(seed.clone(), TermStatus::reference());
        }
    }
    let mut active: Vec<Term> = result.statuses.keys().cloned().collect();
    let mut cycle = 1;
    loop {
        let out = run_cycle(corpus, &grammar, &active, &known, cycle, options.min_content_words);
        result.per_cycle_counts.push(out.new_candidates.len());
        result.links.extend(out.links);
        if out.new_candidates.is_empty() {
            result.cycles_run = cycle;
            break;
        }
        for term in &out.new_candidates {
            known.insert(term.id());
            result.statuses.insert(term.clone(), TermStatus::candidate(cycle));
        }
        active = out.new_candidates;
        cycle += 1;
    }
    result.links.sort();
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BootstrapRow {
    pub size: usize,
    pub trial: usize,
    pub acquired: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BootstrapTable {
    pub rng: &'static str,
    pub rng_seed: u64,
    pub rows: Vec<BootstrapRow>,
}

impl BootstrapTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("size,trial,acquired\n");
        for row in &self.rows {
            out.push_str(&format!("{},{},{}\n", row.size, row.trial, row.acquired));
        }
        out
    }

    /// Mean acquisition per size, in the order sizes were requested.
    pub fn means(&self) -> Vec<(usize, f64)> {
        let mut order = Vec::new();
        let mut sums: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
        for row in &self.rows {
            let entry = sums.entry(row.size).or_insert_with(|| {
                order.push(row.size);
                (0, 0)
            });
            entry.0 += row.acquired;
            entry.1 += 1;
        }
        order
            .into_iter()
            .map(|size| {
                let (sum, n) = sums[&size];
                (size, sum as f64 / n as f64)
            })
            .collect()
    }
}

/// Number of closure terms outside `reference`, i.e. acquired terms that are
/// new with respect to the whole reference list.
pub fn acquisition_volume(result: &AcquisitionResult, reference: &HashSet<TermId>) -> usize {
    result
        .statuses
        .iter()
        .filter(|(t, s)| s.cycle() > 0 && !reference.contains(&t.id()))
        .count()
}

/// Draws `trials` uniform seed subsets of every size from `full_seeds` and
/// records the acquisition volume of each.
///
/// Volumes count terms outside the full reference list, so with a full-size
/// sample they equal the candidate count of a run from every seed.
pub fn bootstrap_experiment(
    corpus: &Corpus,
    grammar: &MetaGrammar,
    full_seeds: &[Term],
    sizes: &[usize],
    trials: usize,
    rng_seed: u64,
    options: &AcquisitionOptions,
) -> Result<BootstrapTable, AcquisitionError> {
    let mut seeds: Vec<Term> = full_seeds.to_vec();
    seeds.sort();
    seeds.dedup();
    if let Some(&size) = sizes.iter().find(|&&s| s == 0 || s > seeds.len()) {
        return Err(AcquisitionError::SizeTooLarge {
            size,
            available: seeds.len(),
        });
    }
    if trials == 0 {
        return Err(AcquisitionError::NoTrials);
    }
    if options.families.is_empty() {
        return Err(AcquisitionError::NoFamilies);
    }
    let reference: HashSet<TermId> = seeds.iter().map(Term::id).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut samples = Vec::with_capacity(sizes.len() * trials);
    for &size in sizes {
        for trial in 0..trials {
            let mut picked = rand::seq::index::sample(&mut rng, seeds.len(), size).into_vec();
            picked.sort_unstable();
            let subset: Vec<Term> = picked.into_iter().map(|i| seeds[i].clone()).collect();
            samples.push((size, trial, subset));
        }
    }

    let run = |(size, trial, subset): &(usize, usize, Vec<Term>)| -> Result<BootstrapRow, AcquisitionError> {
        let result = run_closure(corpus, grammar, subset, options)?;
        Ok(BootstrapRow {
            size: *size,
            trial: *trial,
            acquired: acquisition_volume(&result, &reference),
        })
    };
    #[cfg(feature = "parallel")]
    let rows = {
        use rayon::prelude::*;
        samples.par_iter().map(run).collect::<Result<Vec<_>, _>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let rows = samples.iter().map(run).collect::<Result<Vec<_>, _>>()?;

    Ok(BootstrapTable {
        rng: RNG_ALGORITHM,
        rng_seed,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::MetaRule;

    fn term(s: &str) -> Term {
        Term::parse(s).unwrap()
    }

    fn first_candidate(corpus: &str, source: &str, rule: &str) -> Extraction {
        let corpus = Corpus::parse(corpus).unwrap();
        let patterns: Vec<_> = compile_variant_patterns(&term(source), &MetaGrammar::default_rules())
            .into_iter()
            .filter(|p| p.origin().rule_name() == rule)
            .collect();
        let m = scan(&corpus, &patterns);
        assert_eq!(m.len(), 1, "{rule} on {source}");
        extract_candidate(&corpus, &patterns[0], &m[0], 0)
    }

    #[test]
    fn extracted_classes_come_from_the_corpus() {
        let corpus = "blood|blood|N of|of|P young|young|A clinical|clinical|N";
        for source in ["clinical/A blood/N", "clinical/N blood/N"] {
            let Extraction::Candidate(c) = first_candidate(corpus, source, "perm2") else {
                panic!("{source}");
            };
            assert_eq!(c.render(), "young/A clinical/N");
        }
        let tagged_a = "blood|blood|N of|of|P young|young|A clinical|clinical|A";
        assert_eq!(
            first_candidate(tagged_a, "clinical/N blood/N", "perm2"),
            Extraction::Unproductive(Unproductive::NonNounHead)
        );
    }

    #[test]
    fn extraction_examples() {
        let c = first_candidate(
            "surgical|surgical|A exploration|exploration|N and|and|C closure|closure|N",
            "surgical/A closure/N",
            "coor2_arg",
        );
        assert_eq!(c, Extraction::Candidate(term("surgical exploration")));
        let c = first_candidate(
            "viral|viral|A and|and|C autoimmune|autoimmune|A hepatitis|hepatitis|N",
            "viral/A hepatitis/N",
            "coor2_head",
        );
        assert_eq!(c, Extraction::Candidate(term("autoimmune hepatitis")));
        let c = first_candidate(
            "population|population|N of|of|P aneuploid|aneuploid|A tumor|tumor|N cell|cell|N",
            "cell/N population/N",
            "perm2",
        );
        assert_eq!(c, Extraction::Candidate(term("aneuploid tumor cell")));
    }

    #[test]
    fn pronoun_coordination_is_unproductive() {
        let rule = MetaRule::new(
            "coor2_any",
            Family::Coordination,
            2,
            "T0,C,W[1-1:NAD],T1".split(',').map(|s| s.parse().unwrap()).collect(),
            vec![2, 3],
        )
        .unwrap();
        let grammar = MetaGrammar::from_rules([rule]).unwrap();
        let corpus = Corpus::parse("cells|cell|N and|and|C their|their|D subpopulations|subpopulation|N").unwrap();
        let patterns = compile_variant_patterns(&term("cell/N subpopulation/N"), &grammar);
        let m = scan(&corpus, &patterns);
        assert_eq!(m.len(), 1);
        assert_eq!(
            extract_candidate(&corpus, &patterns[0], &m[0], 0),
            Extraction::Unproductive(Unproductive::FunctionWord)
        );
        // The default grammar does not even match it.
        let default = compile_variant_patterns(&term("cell/N subpopulation/N"), &MetaGrammar::default_rules());
        assert!(scan(&corpus, &default).is_empty());
    }

    #[test]
    fn same_as_source_and_non_noun_head() {
        let c = first_candidate("serum and serum albumin", "serum albumin", "coor2_head");
        assert_eq!(c, Extraction::Unproductive(Unproductive::SameAsSource));
        let c = first_candidate(
            "surgical|surgical|A red|red|A and|and|C closure|closure|N",
            "surgical/A closure/N",
            "coor2_arg",
        );
        assert_eq!(c, Extraction::Unproductive(Unproductive::NonNounHead));
    }

    #[test]
    fn min_content_words_filter() {
        let corpus = Corpus::parse("matched|matched|V and|and|C normal|normal|A control|control|N").unwrap();
        let rule = MetaRule::new(
            "coor2_v",
            Family::Coordination,
            2,
            "T0,C,W[1-1:NAV],T1".split(',').map(|s| s.parse().unwrap()).collect(),
            vec![2, 3],
        )
        .unwrap();
        let grammar = MetaGrammar::from_rules([rule]).unwrap();
        // Source "matched control" with a verb-tagged modifier; the candidate
        // "normal control" has two content words.
        let patterns = compile_variant_patterns(&term("matched/V control/N"), &grammar);
        let m = scan(&corpus, &patterns);
        assert!(matches!(extract_candidate(&corpus, &patterns[0], &m[0], 2), Extraction::Candidate(_)));
        assert_eq!(
            extract_candidate(&corpus, &patterns[0], &m[0], 3),
            Extraction::Unproductive(Unproductive::TooFewContentWords)
        );
    }

    #[test]
    fn cycle_records_links_to_known_terms() {
        let corpus = Corpus::parse("viral and autoimmune hepatitis\n").unwrap();
        let grammar = MetaGrammar::default_rules();
        let active = vec![term("viral hepatitis")];
        let known: HashSet<_> = [term("viral hepatitis").id(), term("autoimmune hepatitis").id()].into();
        let out = run_cycle(&corpus, &grammar, &active, &known, 1, 0);
        assert!(out.new_candidates.is_empty());
        assert_eq!(out.links.len(), 1);
        assert_eq!(out.links[0].candidate, term("autoimmune hepatitis"));
    }

    #[test]
    fn empty_yield_and_errors() {
        let corpus = Corpus::parse("nothing to see here\n").unwrap();
        let grammar = MetaGrammar::default_rules();
        let r = run_closure(&corpus, &grammar, &[term("serum albumin")], &AcquisitionOptions::default()).unwrap();
        assert_eq!(r.candidate_count(), 0);
        assert_eq!(r.cycles_run, 1);
        assert_eq!(r.per_cycle_counts, [0]);
        assert_eq!(
            run_closure(&corpus, &grammar, &[], &AcquisitionOptions::default()).unwrap_err(),
            AcquisitionError::NoSeeds
        );
        assert_eq!(
            run_closure(&corpus, &grammar, &[term("a b")], &AcquisitionOptions::with_families(&[])).unwrap_err(),
            AcquisitionError::NoFamilies
        );
    }

    #[test]
    fn family_restriction() {
        let corpus = Corpus::parse("medullary thyroid carcinoma\n").unwrap();
        let grammar = MetaGrammar::default_rules();
        let seeds = [term("medullary carcinoma")];
        let coor = run_closure(&corpus, &grammar, &seeds, &AcquisitionOptions::with_families(&[Family::Coordination])).unwrap();
        assert_eq!(coor.candidate_count(), 0);
        let ins = run_closure(&corpus, &grammar, &seeds, &AcquisitionOptions::with_families(&[Family::Insertion])).unwrap();
        assert_eq!(ins.candidate_set(), BTreeSet::from([term("thyroid carcinoma")]));
    }

    #[test]
    fn bootstrap_errors_and_full_size() {
        let corpus = Corpus::parse("viral and autoimmune hepatitis\nmedullary thyroid carcinoma\n").unwrap();
        let grammar = MetaGrammar::default_rules();
        let seeds = [term("viral hepatitis"), term("medullary carcinoma")];
        let opts = AcquisitionOptions::default();
        assert_eq!(
            bootstrap_experiment(&corpus, &grammar, &seeds, &[3], 1, 7, &opts).unwrap_err(),
            AcquisitionError::SizeTooLarge { size: 3, available: 2 }
        );
        assert!(matches!(
            bootstrap_experiment(&corpus, &grammar, &seeds, &[0], 1, 7, &opts),
            Err(AcquisitionError::SizeTooLarge { size: 0, .. })
        ));
        assert_eq!(
            bootstrap_experiment(&corpus, &grammar, &seeds, &[1], 0, 7, &opts).unwrap_err(),
            AcquisitionError::NoTrials
        );
        let table = bootstrap_experiment(&corpus, &grammar, &seeds, &[2], 3, 7, &opts).unwrap();
        assert!(table.rows.iter().all(|r| r.acquired == 2));
        assert_eq!(table.to_csv(), "size,trial,acquired\n2,0,2\n2,1,2\n2,2,2\n");
        assert_eq!(table.means(), [(2, 2.0)]);
    }
}
