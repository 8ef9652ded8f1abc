//! Browser bindings. Every operation takes the raw file contents and returns
//! a JSON document, or an error message.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use termvar::conceptnet::{coord_classes_dot, parse_conflation, spec_graph_dot, ClassDoc};
use termvar::grammar::{base_pattern, compile_variant_patterns};
use termvar::records::{candidate_records, CandidateRecord, LinkRecord, MatchRecord};
use termvar::{
    build_coord_classes, build_spec_graph, parse_term_list, run_closure, scan, AcquisitionOptions,
    AcquisitionResult, ClassOptions, Corpus, Family, MetaGrammar, Term,
};

pub const DEMO_TERMS: &str = include_str!("../../../demo/terms.txt");
pub const DEMO_CORPUS: &str = include_str!("../../../demo/corpus.txt");
pub const DEMO_CONFLATION: &str = include_str!("../../../demo/conflate.txt");

struct Inputs {
    terms: Vec<Term>,
    corpus: Corpus,
    grammar: MetaGrammar,
    options: AcquisitionOptions,
}

fn parse_families(text: &str) -> Result<Vec<Family>, String> {
    let mut families = text
        .split(',')
        .map(str::trim)
        .filter(|f| !f.is_empty())
        .map(str::parse)
        .collect::<Result<Vec<Family>, _>>()?;
    families.sort();
    families.dedup();
    if families.is_empty() {
        return Err("select at least one variant family".into());
    }
    Ok(families)
}

fn load(terms: &str, corpus: &str, grammar: &str, families: &str) -> Result<Inputs, String> {
    let list = parse_term_list(terms).map_err(|e| format!("terms: {e}"))?;
    if list.terms.is_empty() {
        return Err("terms: no usable terms".into());
    }
    let corpus = Corpus::parse(corpus).map_err(|e| format!("corpus: {e}"))?;
    let grammar = if grammar.trim().is_empty() {
        MetaGrammar::default_rules()
    } else {
        MetaGrammar::parse(grammar).map_err(|e| format!("grammar: {e}"))?
    };
    Ok(Inputs {
        terms: list.terms,
        corpus,
        grammar,
        options: AcquisitionOptions::with_families(&parse_families(families)?),
    })
}

fn json(value: &impl Serialize) -> String {
    serde_json::to_string(value).expect("documents serialize")
}

fn closure(inputs: &Inputs) -> Result<AcquisitionResult, String> {
    run_closure(&inputs.corpus, &inputs.grammar, &inputs.terms, &inputs.options).map_err(|e| e.to_string())
}

/// Raw variant matches of the reference terms.
pub fn scan_variants(terms: &str, corpus: &str, grammar: &str, families: &str) -> Result<String, String> {
    let inputs = load(terms, corpus, grammar, families)?;
    let grammar = inputs.grammar.restrict(&inputs.options.families);
    let patterns: Vec<_> = inputs
        .terms
        .iter()
        .flat_map(|t| std::iter::once(base_pattern(t)).chain(compile_variant_patterns(t, &grammar)))
        .collect();
    let matches: Vec<MatchRecord> = scan(&inputs.corpus, &patterns)
        .iter()
        .map(|m| MatchRecord::new(&inputs.corpus, &patterns, m))
        .collect();
    Ok(json(&matches))
}

#[derive(Serialize)]
struct AcquireDoc {
    cycles_run: u32,
    per_cycle_counts: Vec<usize>,
    candidates: Vec<CandidateRecord>,
    links: Vec<LinkRecord>,
}

/// Acquisition to the fixed point.
pub fn acquire(terms: &str, corpus: &str, grammar: &str, families: &str) -> Result<String, String> {
    let inputs = load(terms, corpus, grammar, families)?;
    let result = closure(&inputs)?;
    Ok(json(&AcquireDoc {
        cycles_run: result.cycles_run,
        per_cycle_counts: result.per_cycle_counts.clone(),
        candidates: candidate_records(&result),
        links: result.links.iter().map(LinkRecord::from).collect(),
    }))
}

#[derive(Serialize)]
struct EdgeView {
    from: usize,
    to: usize,
    witnesses: usize,
}

#[derive(Serialize)]
struct GraphDoc {
    classes: Vec<ClassDoc>,
    edges: Vec<EdgeView>,
    conflation_merges: usize,
    classes_dot: String,
    spec_graph_dot: String,
}

/// Coordination classes and the specialization graph of a full run.
pub fn concept_graph(
    terms: &str,
    corpus: &str,
    grammar: &str,
    families: &str,
    conflation: &str,
    split_head_coord: bool,
) -> Result<String, String> {
    let inputs = load(terms, corpus, grammar, families)?;
    let result = closure(&inputs)?;
    let options = ClassOptions { split_head_coord };
    let classes = build_coord_classes(&result.links, [], options);
    let pairs = parse_conflation(conflation).map_err(|e| format!("conflation: {e}"))?;
    let (classes, report) = classes.conflate(&pairs);
    let graph = build_spec_graph(&result.links, &classes);
    Ok(json(&GraphDoc {
        classes: graph
            .classes
            .classes()
            .iter()
            .map(|c| ClassDoc {
                id: c.id,
                representative: c.representative().text(),
                members: c.members.iter().map(Term::text).collect(),
            })
            .collect(),
        edges: graph
            .edges
            .iter()
            .map(|e| EdgeView { from: e.from, to: e.to, witnesses: e.witnesses.len() })
            .collect(),
        conflation_merges: report.merged,
        classes_dot: coord_classes_dot(&classes, &result.links, options),
        spec_graph_dot: spec_graph_dot(&graph),
    }))
}

fn to_js(result: Result<String, String>) -> Result<String, JsValue> {
    result.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = scanVariants)]
pub fn scan_variants_js(terms: &str, corpus: &str, grammar: &str, families: &str) -> Result<String, JsValue> {
    to_js(scan_variants(terms, corpus, grammar, families))
}

#[wasm_bindgen(js_name = acquire)]
pub fn acquire_js(terms: &str, corpus: &str, grammar: &str, families: &str) -> Result<String, JsValue> {
    to_js(acquire(terms, corpus, grammar, families))
}

#[wasm_bindgen(js_name = conceptGraph)]
pub fn concept_graph_js(
    terms: &str,
    corpus: &str,
    grammar: &str,
    families: &str,
    conflation: &str,
    split_head_coord: bool,
) -> Result<String, JsValue> {
    to_js(concept_graph(terms, corpus, grammar, families, conflation, split_head_coord))
}

#[wasm_bindgen(js_name = demoTerms)]
pub fn demo_terms() -> String {
    DEMO_TERMS.to_string()
}

#[wasm_bindgen(js_name = demoCorpus)]
pub fn demo_corpus() -> String {
    DEMO_CORPUS.to_string()
}

#[wasm_bindgen(js_name = demoConflation)]
pub fn demo_conflation() -> String {
    DEMO_CONFLATION.to_string()
}

#[wasm_bindgen(js_name = defaultGrammar)]
pub fn default_grammar() -> String {
    MetaGrammar::default_source().to_string()
}
