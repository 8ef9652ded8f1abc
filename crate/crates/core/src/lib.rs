//! Terminology enrichment from term variants.
//!
//! Known multi-word terms are turned into variant patterns (coordinations,
//! insertions, permutations), matched against a lemmatized corpus, and the
//! variants are mined for new candidate terms. Acquisition is repeated on
//! the new candidates until nothing new appears. The links recorded along
//! the way feed coordination classes and an insertion-based specialization
//! graph.

pub mod acquisition;
pub mod conceptnet;
pub mod corpus;
pub mod grammar;
pub mod records;
pub mod term;

pub use acquisition::{
    bootstrap_experiment, extract_candidate, run_closure, run_cycle, AcquisitionError,
    AcquisitionLink, AcquisitionOptions, AcquisitionResult, BootstrapRow, BootstrapTable,
    Extraction, Unproductive,
};
pub use conceptnet::{
    build_coord_classes, build_spec_graph, ClassOptions, CoordClass, CoordClasses, ExportFormat,
    GraphError, SpecGraph,
};
pub use corpus::{find_present_terms, scan, Corpus, CorpusError, Lexicons, Token, VariantMatch};
pub use grammar::{
    base_pattern, compile_variant_patterns, Family, GrammarError, MetaGrammar, MetaRule,
    PatternElement, PatternOrigin, SlotSpec, VariantPattern,
};
pub use term::{
    normalize_lemma, parse_term_list, Lemma, Term, TermError, TermId, TermStatus, WordClass,
};
