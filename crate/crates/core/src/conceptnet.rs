//! Coordination classes and the insertion specialization graph.
//!
//! Terms linked by chains of coordination variants fall into one class.
//! Insertion links between classes then form a directed graph, oriented from
//! the source term (more generic) to the acquired term (more specific). The
//! orientation is only a reading aid: cycles are kept.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acquisition::AcquisitionLink;
use crate::grammar::Family;
use crate::records::LinkRecord;
use crate::term::Term;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("unknown export format {0:?} (expected dot or json)")]
    UnknownFormat(String),
    #[error("line {line}: {message}")]
    Conflation { line: usize, message: String },
    #[error("malformed graph document: {0}")]
    Import(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Dot,
    Json,
}

impl FromStr for ExportFormat {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dot" => Ok(ExportFormat::Dot),
            "json" => Ok(ExportFormat::Json),
            other => Err(GraphError::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Clone)]
struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when both were already in one set.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        self.parent[hi] = lo;
        true
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordClass {
    pub id: usize,
    pub members: BTreeSet<Term>,
}

impl CoordClass {
    /// Lexicographically smallest member.
    pub fn representative(&self) -> &Term {
        self.members.first().expect("classes are never empty")
    }

    pub fn label(&self) -> String {
        self.members.iter().map(Term::text).collect::<Vec<_>>().join(" / ")
    }
}

/// A partition of terms into coordination classes. Ids follow the order of
/// the representatives.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoordClasses {
    classes: Vec<CoordClass>,
    index: HashMap<Term, usize>,
}

impl CoordClasses {
    /// Builds the partition from disjoint groups; empty groups are dropped.
    pub fn from_groups(groups: impl IntoIterator<Item = BTreeSet<Term>>) -> CoordClasses {
        let mut groups: Vec<BTreeSet<Term>> = groups.into_iter().filter(|g| !g.is_empty()).collect();
        groups.sort_by(|a, b| a.first().cmp(&b.first()));
        let mut index = HashMap::new();
        let classes = groups
            .into_iter()
            .enumerate()
            .map(|(id, members)| {
                for term in &members {
                    let previous = index.insert(term.clone(), id);
                    assert!(previous.is_none(), "term {term} in two groups");
                }
                CoordClass { id, members }
            })
            .collect();
        CoordClasses { classes, index }
    }

    pub fn classes(&self) -> &[CoordClass] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn class_of(&self, term: &Term) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        self.classes.iter().flat_map(|c| c.members.iter())
    }

    /// Adds a singleton class for every term not yet covered.
    pub fn extended_with<'a>(&self, terms: impl IntoIterator<Item = &'a Term>) -> CoordClasses {
        let mut groups: Vec<BTreeSet<Term>> = self.classes.iter().map(|c| c.members.clone()).collect();
        let mut seen: BTreeSet<&Term> = self.index.keys().collect();
        for term in terms {
            if seen.insert(term) {
                groups.push(BTreeSet::from([term.clone()]));
            }
        }
        CoordClasses::from_groups(groups)
    }

    /// Merges the classes of each pair. Pairs naming unknown terms are
    /// skipped.
    pub fn conflate(&self, pairs: &[(Term, Term)]) -> (CoordClasses, ConflationReport) {
        let mut sets = DisjointSet::new(self.classes.len());
        let mut report = ConflationReport::default();
        for (a, b) in pairs {
            match (self.class_of(a), self.class_of(b)) {
                (Some(x), Some(y)) => {
                    if sets.union(x, y) {
                        report.merged += 1;
                    } else {
                        report.redundant += 1;
                    }
                }
                _ => report.unknown.push((a.clone(), b.clone())),
            }
        }
        let mut groups: BTreeMap<usize, BTreeSet<Term>> = BTreeMap::new();
        for class in &self.classes {
            groups
                .entry(sets.find(class.id))
                .or_default()
                .extend(class.members.iter().cloned());
        }
        (CoordClasses::from_groups(groups.into_values()), report)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConflationReport {
    /// Pairs that joined two distinct classes.
    pub merged: usize,
    /// Pairs already in one class.
    pub redundant: usize,
    pub unknown: Vec<(Term, Term)>,
}

/// Parses a conflation file: one `term == term` pair per line, `#` comments.
pub fn parse_conflation(text: &str) -> Result<Vec<(Term, Term)>, GraphError> {
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| GraphError::Conflation { line: idx + 1, message };
        let (a, b) = line
            .split_once(" == ")
            .ok_or_else(|| err("expected `term == term`".into()))?;
        let a = Term::parse(a).map_err(|e| err(e.to_string()))?;
        let b = Term::parse(b).map_err(|e| err(e.to_string()))?;
        pairs.push((a, b));
    }
    Ok(pairs)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ClassOptions {
    /// Leave out coordinations of heads (`surgical exploration and closure`).
    pub split_head_coord: bool,
}

fn counts_for_classing(link: &AcquisitionLink, options: ClassOptions) -> bool {
    link.family == Family::Coordination && !(options.split_head_coord && link.head_coordination)
}

/// Connected components of the undirected coordination graph. Terms of
/// `universe` and link endpoints without a coordination link become
/// singletons.
pub fn build_coord_classes<'a>(
    links: &[AcquisitionLink],
    universe: impl IntoIterator<Item = &'a Term>,
    options: ClassOptions,
) -> CoordClasses {
    let mut terms: BTreeSet<&Term> = universe.into_iter().collect();
    for link in links {
        terms.insert(&link.source);
        terms.insert(&link.candidate);
    }
    let terms: Vec<&Term> = terms.into_iter().collect();
    let position: HashMap<&Term, usize> = terms.iter().enumerate().map(|(i, t)| (*t, i)).collect();
    let mut sets = DisjointSet::new(terms.len());
    for link in links.iter().filter(|l| counts_for_classing(l, options)) {
        sets.union(position[&link.source], position[&link.candidate]);
    }
    let mut groups: BTreeMap<usize, BTreeSet<Term>> = BTreeMap::new();
    for (i, term) in terms.iter().enumerate() {
        groups.entry(sets.find(i)).or_default().insert((*term).clone());
    }
    CoordClasses::from_groups(groups.into_values())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecEdge {
    pub from: usize,
    pub to: usize,
    /// Insertion links supporting the edge, sorted.
    pub witnesses: Vec<AcquisitionLink>,
}

/// Directed graph over coordination classes induced by insertion links.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecGraph {
    pub classes: CoordClasses,
    /// Sorted by `(from, to)`.
    pub edges: Vec<SpecEdge>,
}

impl SpecGraph {
    pub fn node_count(&self) -> usize {
        self.classes.len()
    }
}

/// One edge per ordered class pair joined by at least one insertion link.
/// Links inside a class are dropped.
pub fn build_spec_graph(links: &[AcquisitionLink], classes: &CoordClasses) -> SpecGraph {
    let insertions: Vec<&AcquisitionLink> = links.iter().filter(|l| l.family == Family::Insertion).collect();
    let classes = classes.extended_with(insertions.iter().flat_map(|l| [&l.source, &l.candidate]));
    let mut edges: BTreeMap<(usize, usize), Vec<AcquisitionLink>> = BTreeMap::new();
    for link in insertions {
        let from = classes.class_of(&link.source).expect("extended");
        let to = classes.class_of(&link.candidate).expect("extended");
        if from != to {
            edges.entry((from, to)).or_default().push(link.clone());
        }
    }
    let edges = edges
        .into_iter()
        .map(|((from, to), mut witnesses)| {
            witnesses.sort();
            witnesses.dedup();
            SpecEdge { from, to, witnesses }
        })
        .collect();
    SpecGraph { classes, edges }
}

fn quote(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push('"');
    for c in text.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

fn write_clusters(out: &mut String, classes: &CoordClasses) {
    for class in classes.classes() {
        let _ = writeln!(out, "  subgraph cluster_{} {{", class.id);
        let _ = writeln!(out, "    label={};", quote(&format!("c{}: {}", class.id, class.representative())));
        for member in &class.members {
            let _ = writeln!(out, "    {};", quote(&member.text()));
        }
        out.push_str("  }\n");
    }
}

/// Coordination classes as clusters with the coordination arrows, source to
/// candidate, labelled by the number of supporting variants.
pub fn coord_classes_dot(classes: &CoordClasses, links: &[AcquisitionLink], options: ClassOptions) -> String {
    let mut arrows: BTreeMap<(&Term, &Term), usize> = BTreeMap::new();
    for link in links.iter().filter(|l| counts_for_classing(l, options)) {
        *arrows.entry((&link.source, &link.candidate)).or_default() += 1;
    }
    let mut out = String::from("digraph coordination {\n");
    write_clusters(&mut out, classes);
    for ((from, to), count) in arrows {
        let _ = writeln!(out, "  {} -> {} [label=\"{count}\"];", quote(&from.text()), quote(&to.text()));
    }
    out.push_str("}\n");
    out
}

/// The specialization graph with classes as clusters; edges connect cluster
/// representatives and carry witness counts.
pub fn spec_graph_dot(graph: &SpecGraph) -> String {
    let mut out = String::from("digraph specialization {\n  compound=true;\n");
    write_clusters(&mut out, &graph.classes);
    let classes = graph.classes.classes();
    for edge in &graph.edges {
        let _ = writeln!(
            out,
            "  {} -> {} [ltail=cluster_{}, lhead=cluster_{}, label=\"{}\"];",
            quote(&classes[edge.from].representative().text()),
            quote(&classes[edge.to].representative().text()),
            edge.from,
            edge.to,
            edge.witnesses.len()
        );
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDoc {
    pub id: usize,
    pub representative: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub from: usize,
    pub to: usize,
    pub witnesses: Vec<LinkRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecGraphDoc {
    pub classes: Vec<ClassDoc>,
    pub edges: Vec<EdgeDoc>,
}

fn class_docs(classes: &CoordClasses) -> Vec<ClassDoc> {
    classes
        .classes()
        .iter()
        .map(|c| ClassDoc {
            id: c.id,
            representative: c.representative().text(),
            members: c.members.iter().map(Term::text).collect(),
        })
        .collect()
}

fn classes_from_docs(docs: Vec<ClassDoc>) -> Result<CoordClasses, GraphError> {
    let mut groups = Vec::with_capacity(docs.len());
    let mut seen = BTreeSet::new();
    for (i, doc) in docs.into_iter().enumerate() {
        if doc.id != i {
            return Err(GraphError::Import(format!("class ids must be 0..n, found {} at {i}", doc.id)));
        }
        let mut members = BTreeSet::new();
        for text in &doc.members {
            let term = Term::parse(text).map_err(|e| GraphError::Import(format!("{text:?}: {e}")))?;
            if !seen.insert(term.clone()) {
                return Err(GraphError::Import(format!("{text:?} appears in two classes")));
            }
            members.insert(term);
        }
        if members.is_empty() {
            return Err(GraphError::Import(format!("class {i} is empty")));
        }
        groups.push(members);
    }
    let classes = CoordClasses::from_groups(groups);
    Ok(classes)
}

pub fn coord_classes_json(classes: &CoordClasses) -> String {
    let mut out = serde_json::to_string_pretty(&class_docs(classes)).expect("serializable");
    out.push('\n');
    out
}

pub fn spec_graph_json(graph: &SpecGraph) -> String {
    let doc = SpecGraphDoc {
        classes: class_docs(&graph.classes),
        edges: graph
            .edges
            .iter()
            .map(|e| EdgeDoc {
                from: e.from,
                to: e.to,
                witnesses: e.witnesses.iter().map(LinkRecord::from).collect(),
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("serializable");
    out.push('\n');
    out
}

/// Reads a document written by [`spec_graph_json`].
pub fn spec_graph_from_json(text: &str) -> Result<SpecGraph, GraphError> {
    let doc: SpecGraphDoc = serde_json::from_str(text).map_err(|e| GraphError::Import(e.to_string()))?;
    let classes = classes_from_docs(doc.classes)?;
    let mut edges = Vec::with_capacity(doc.edges.len());
    for e in doc.edges {
        if e.from >= classes.len() || e.to >= classes.len() {
            return Err(GraphError::Import(format!("edge {}->{} out of range", e.from, e.to)));
        }
        let witnesses = e
            .witnesses
            .into_iter()
            .map(AcquisitionLink::try_from)
            .collect::<Result<Vec<_>, _>>()
            .map_err(GraphError::Import)?;
        edges.push(SpecEdge {
            from: e.from,
            to: e.to,
            witnesses,
        });
    }
    Ok(SpecGraph { classes, edges })
}

/// Renders classes in the requested format.
pub fn export_classes(
    classes: &CoordClasses,
    links: &[AcquisitionLink],
    options: ClassOptions,
    format: ExportFormat,
) -> String {
    match format {
        ExportFormat::Dot => coord_classes_dot(classes, links, options),
        ExportFormat::Json => coord_classes_json(classes),
    }
}

pub fn export_spec_graph(graph: &SpecGraph, format: ExportFormat) -> String {
    match format {
        ExportFormat::Dot => spec_graph_dot(graph),
        ExportFormat::Json => spec_graph_json(graph),
    }
}
