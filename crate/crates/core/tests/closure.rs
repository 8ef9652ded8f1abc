mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use termvar::{parse_term_list, run_closure, AcquisitionOptions, Corpus, Family, MetaGrammar, Term};

use common::{chain_length, oracle_closure, random_instance};

const DEMO_TERMS: &str = include_str!("../../../demo/terms.txt");
const DEMO_CORPUS: &str = include_str!("../../../demo/corpus.txt");

fn closure_set(corpus: &Corpus, seeds: &[Term], options: &AcquisitionOptions) -> BTreeSet<Term> {
    let r = run_closure(corpus, &MetaGrammar::default_rules(), seeds, options).unwrap();
    r.statuses.keys().cloned().collect()
}

fn family_subsets() -> impl Strategy<Value = Vec<Family>> {
    prop::sample::subsequence(Family::ALL.to_vec(), 1..=3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn incremental_closure_equals_full_rescan(seed in any::<u64>(), families in family_subsets()) {
        let inst = random_instance(seed, 500, 10);
        let grammar = MetaGrammar::default_rules();
        let r = run_closure(&inst.corpus, &grammar, &inst.seeds, &AcquisitionOptions::with_families(&families)).unwrap();
        let got: BTreeMap<Term, u32> = r.candidates().into_iter().map(|(t, c)| (t.clone(), c)).collect();
        prop_assert_eq!(got, oracle_closure(&inst.corpus, &grammar, &inst.seeds, &families));
    }

    #[test]
    fn closure_is_monotone_in_the_seeds(seed in any::<u64>()) {
        let inst = random_instance(seed, 400, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let k = rng.random_range(1..=inst.seeds.len());
        let subset: Vec<Term> = inst.seeds.choose_multiple(&mut rng, k).cloned().collect();
        let options = AcquisitionOptions::default();
        let small = closure_set(&inst.corpus, &subset, &options);
        let large = closure_set(&inst.corpus, &inst.seeds, &options);
        prop_assert!(small.is_subset(&large));
    }

    #[test]
    fn closure_is_monotone_in_the_families(seed in any::<u64>(), families in family_subsets()) {
        let inst = random_instance(seed, 400, 10);
        let small = closure_set(&inst.corpus, &inst.seeds, &AcquisitionOptions::with_families(&families));
        let large = closure_set(&inst.corpus, &inst.seeds, &AcquisitionOptions::default());
        prop_assert!(small.is_subset(&large));
    }

    #[test]
    fn closure_is_a_fixed_point(seed in any::<u64>()) {
        let inst = random_instance(seed, 400, 10);
        let options = AcquisitionOptions::default();
        let once: Vec<Term> = closure_set(&inst.corpus, &inst.seeds, &options).into_iter().collect();
        let again = run_closure(&inst.corpus, &MetaGrammar::default_rules(), &once, &options).unwrap();
        prop_assert_eq!(again.candidate_count(), 0);
        prop_assert_eq!(again.cycles_run, 1);
    }

    #[test]
    fn cycle_tags_are_sound(seed in any::<u64>()) {
        let inst = random_instance(seed, 500, 10);
        let r = run_closure(&inst.corpus, &MetaGrammar::default_rules(), &inst.seeds, &AcquisitionOptions::default()).unwrap();
        let cycles: BTreeMap<Term, u32> = r.candidates().into_iter().map(|(t, c)| (t.clone(), c)).collect();
        for (term, &cycle) in &cycles {
            prop_assert_eq!(chain_length(term, &cycles, &r.links), Some(cycle), "{}", term);
        }
        for link in &r.links {
            let source_cycle = r.status(&link.source).unwrap().cycle();
            prop_assert_eq!(link.cycle, source_cycle + 1);
            prop_assert!(r.status(&link.candidate).unwrap().cycle() <= link.cycle);
        }
        prop_assert_eq!(r.per_cycle_counts.iter().sum::<usize>(), r.candidate_count());
        prop_assert_eq!(r.per_cycle_counts.len(), r.cycles_run as usize);
        prop_assert_eq!(r.per_cycle_counts.last(), Some(&0));
        prop_assert!(r.per_cycle_counts[..r.per_cycle_counts.len() - 1].iter().all(|&n| n > 0));
        prop_assert_eq!(r.productive_cycles(), cycles.values().copied().max().unwrap_or(0));
    }

    #[test]
    fn content_threshold_only_removes(seed in any::<u64>(), min in 0usize..3) {
        let inst = random_instance(seed, 300, 6);
        let grammar = MetaGrammar::default_rules();
        let options = AcquisitionOptions { min_content_words: min, ..Default::default() };
        let strict = run_closure(&inst.corpus, &grammar, &inst.seeds, &options).unwrap();
        let loose = run_closure(&inst.corpus, &grammar, &inst.seeds, &AcquisitionOptions::default()).unwrap();
        prop_assert!(strict.candidate_set().is_subset(&loose.candidate_set()));
    }
}

#[test]
fn random_instances_are_not_trivial() {
    let total: usize = (0..50)
        .map(|seed| {
            let inst = random_instance(seed, 500, 10);
            run_closure(&inst.corpus, &MetaGrammar::default_rules(), &inst.seeds, &AcquisitionOptions::default())
                .unwrap()
                .candidate_count()
        })
        .sum();
    assert!(total > 100, "only {total} candidates over 50 instances");
}

/// The candidate sets of nested seed sets are not nested: a term acquired
/// from the smaller set can be a seed of the larger one.
#[test]
fn candidate_sets_alone_are_not_monotone() {
    let corpus = Corpus::parse("serum and egg albumin\n").unwrap();
    let a = Term::parse("serum albumin").unwrap();
    let b = Term::parse("egg albumin").unwrap();
    let grammar = MetaGrammar::default_rules();
    let options = AcquisitionOptions::default();
    let small = run_closure(&corpus, &grammar, std::slice::from_ref(&a), &options).unwrap();
    let large = run_closure(&corpus, &grammar, &[a.clone(), b.clone()], &options).unwrap();
    assert_eq!(small.candidate_set(), BTreeSet::from([b.clone()]));
    assert!(large.candidate_set().is_empty());
    let small_closure: BTreeSet<Term> = small.statuses.keys().cloned().collect();
    let large_closure: BTreeSet<Term> = large.statuses.keys().cloned().collect();
    assert!(small_closure.is_subset(&large_closure));
}

#[test]
fn absent_seeds_stop_after_one_cycle() {
    let corpus = Corpus::parse("nothing relevant here\n").unwrap();
    let seeds = [Term::parse("serum albumin").unwrap()];
    let r = run_closure(&corpus, &MetaGrammar::default_rules(), &seeds, &AcquisitionOptions::default()).unwrap();
    assert_eq!(r.cycles_run, 1);
    assert_eq!(r.per_cycle_counts, [0]);
    assert!(r.links.is_empty());
}

#[test]
fn demo_chain_takes_four_cycles() {
    let corpus = Corpus::parse(DEMO_CORPUS).unwrap();
    let seeds = parse_term_list(DEMO_TERMS).unwrap().terms;
    let r = run_closure(&corpus, &MetaGrammar::default_rules(), &seeds, &AcquisitionOptions::default()).unwrap();
    assert_eq!(r.productive_cycles(), 4);
    assert_eq!(r.cycles_run, 5);

    let path = ["tissue extract", "tumour tissue", "normal tissue", "rat tissue", "liver tissue"];
    let families = [Family::Permutation, Family::Coordination, Family::Insertion, Family::Insertion];
    for (step, pair) in path.windows(2).enumerate() {
        let source = Term::parse(pair[0]).unwrap();
        let target = Term::parse(pair[1]).unwrap();
        assert_eq!(r.status(&target).unwrap().cycle(), step as u32 + 1);
        assert!(
            r.incoming(&target).any(|l| l.source == source && l.family == families[step]),
            "{} -> {}",
            pair[0],
            pair[1]
        );
    }
}
