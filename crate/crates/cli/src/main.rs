use std::fs::{self, File};
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flate2::read::GzDecoder;
use serde::Serialize;

use termvar::acquisition::{acquisition_volume, RNG_ALGORITHM};
use termvar::conceptnet::{
    coord_classes_dot, coord_classes_json, parse_conflation, spec_graph_dot, spec_graph_json,
};
use termvar::records::{candidates_jsonl, links_jsonl, matches_jsonl, parse_links_jsonl};
use termvar::{
    base_pattern, bootstrap_experiment, build_coord_classes, build_spec_graph,
    compile_variant_patterns, find_present_terms, parse_term_list, run_closure, scan,
    AcquisitionOptions, ClassOptions, Corpus, Family, Lexicons, MetaGrammar, Term,
};

#[derive(Parser)]
#[command(name = "termvar", version, about = "Acquire candidate terms from variants of known terms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run acquisition to its fixed point and write candidates and links.
    Acquire(RunArgs),
    /// Build coordination classes and the specialization graph from links.
    Graph(GraphArgs),
    /// Measure acquisition volume on random subsets of the reference list.
    Bootstrap(BootstrapArgs),
    /// Print every raw variant match of the reference terms as JSON lines.
    Scan(RunArgs),
    /// Check input files and report what they contain.
    Validate(ValidateArgs),
}

#[derive(Args, Clone)]
struct InputArgs {
    /// Reference term list.
    #[arg(long)]
    terms: PathBuf,
    /// Lemmatized corpus, optionally gzip-compressed (`.gz`).
    #[arg(long)]
    corpus: PathBuf,
    /// Meta-grammar file; the bundled grammar is used when omitted.
    #[arg(long)]
    grammar: Option<PathBuf>,
    /// Variant families to use.
    #[arg(long, value_delimiter = ',', default_value = "coor,ins,perm")]
    families: Vec<Family>,
    /// Drop candidates with fewer content words.
    #[arg(long, default_value_t = 0)]
    min_content_words: usize,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct GraphArgs {
    /// Directory holding `links.jsonl`; graph files are written there too.
    #[arg(long)]
    out: PathBuf,
    /// Links file to read instead of `<out>/links.jsonl`.
    #[arg(long)]
    links: Option<PathBuf>,
    /// Pairs of terms to merge after coordination classing.
    #[arg(long)]
    conflate: Option<PathBuf>,
    /// Ignore head coordinations when building classes.
    #[arg(long)]
    split_head_coord: bool,
}

#[derive(Args, Clone)]
struct BootstrapArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    out: PathBuf,
    /// Bootstrap sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
}

#[derive(Args, Clone)]
struct ValidateArgs {
    #[arg(long)]
    terms: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    grammar: Option<PathBuf>,
    #[arg(long)]
    conflate: Option<PathBuf>,
}

enum CliError {
    /// Malformed input data; exit status 1.
    Data(String),
    /// File system failure; exit status 2.
    Io(String),
}

type Result<T> = std::result::Result<T, CliError>;

fn data_err(path: &Path, err: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {err}", path.display()))
}

fn io_err(path: &Path, err: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {err}", path.display()))
}

fn open(path: &Path) -> Result<Box<dyn BufRead>> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    if path.extension().is_some_and(|ext| ext == "gz") {
        Ok(Box::new(BufReader::new(GzDecoder::new(file))))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

fn read_text(path: &Path) -> Result<String> {
    let mut text = String::new();
    open(path)?.read_to_string(&mut text).map_err(|e| io_err(path, e))?;
    Ok(text)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| io_err(&path, e))
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let probe = dir.join(".termvar-write-test");
    fs::write(&probe, b"").map_err(|e| io_err(dir, e))?;
    let _ = fs::remove_file(probe);
    Ok(())
}

fn load_corpus(path: &Path) -> Result<Corpus> {
    match Corpus::from_reader(open(path)?, &Lexicons::default()) {
        Ok(corpus) => Ok(corpus),
        Err(termvar::CorpusError::Io(e)) => Err(io_err(path, e)),
        Err(e) => Err(data_err(path, e)),
    }
}

struct Inputs {
    terms: Vec<Term>,
    skipped: usize,
    corpus: Corpus,
    grammar: MetaGrammar,
    options: AcquisitionOptions,
}

fn load_inputs(args: &InputArgs) -> Result<Inputs> {
    if args.families.is_empty() {
        return Err(CliError::Data("--families must name at least one family".into()));
    }
    let grammar = match &args.grammar {
        Some(path) => MetaGrammar::parse(&read_text(path)?).map_err(|e| data_err(path, e))?,
        None => MetaGrammar::default_rules(),
    };
    let list = parse_term_list(&read_text(&args.terms)?).map_err(|e| data_err(&args.terms, e))?;
    for (line, why) in &list.skipped {
        eprintln!("termvar: {}:{line}: {why}", args.terms.display());
    }
    let corpus = load_corpus(&args.corpus)?;
    eprintln!(
        "termvar: {} terms, {} sentences, {} tokens, {} meta-rules",
        list.terms.len(),
        corpus.sentence_count(),
        corpus.token_count(),
        grammar.len()
    );
    let mut families = args.families.clone();
    families.sort();
    families.dedup();
    Ok(Inputs {
        terms: list.terms,
        skipped: list.skipped.len(),
        corpus,
        grammar,
        options: AcquisitionOptions {
            families,
            min_content_words: args.min_content_words,
        },
    })
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err(CliError::Data("--workers must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Serialize)]
struct Summary {
    version: &'static str,
    families: Vec<Family>,
    min_content_words: usize,
    seed_count: usize,
    skipped_terms: usize,
    present_term_count: usize,
    sentences: usize,
    tokens: usize,
    candidate_count: usize,
    link_count: usize,
    cycles_run: u32,
    per_cycle_counts: Vec<usize>,
}

fn cmd_acquire(args: &RunArgs) -> Result<()> {
    let out = args
        .out
        .as_deref()
        .ok_or_else(|| CliError::Data("acquire needs --out".into()))?;
    prepare_out(out)?;
    let inputs = load_inputs(&args.input)?;
    if inputs.terms.is_empty() {
        return Err(data_err(&args.input.terms, "no usable terms"));
    }
    let (present, result) = with_workers(args.input.workers, || {
        let present = find_present_terms(&inputs.corpus, &inputs.terms, &inputs.grammar.restrict(&inputs.options.families));
        let result = run_closure(&inputs.corpus, &inputs.grammar, &inputs.terms, &inputs.options);
        (present, result)
    })?;
    let result = result.map_err(|e| CliError::Data(e.to_string()))?;
    for (cycle, count) in result.per_cycle_counts.iter().enumerate() {
        eprintln!("termvar: cycle {}: {count} new candidates", cycle + 1);
    }
    write_file(out, "candidates.jsonl", &candidates_jsonl(&result))?;
    write_file(out, "links.jsonl", &links_jsonl(&result.links))?;
    let summary = Summary {
        version: env!("CARGO_PKG_VERSION"),
        families: inputs.options.families.clone(),
        min_content_words: inputs.options.min_content_words,
        seed_count: inputs.terms.len(),
        skipped_terms: inputs.skipped,
        present_term_count: present.len(),
        sentences: inputs.corpus.sentence_count(),
        tokens: inputs.corpus.token_count(),
        candidate_count: result.candidate_count(),
        link_count: result.links.len(),
        cycles_run: result.cycles_run,
        per_cycle_counts: result.per_cycle_counts.clone(),
    };
    let mut json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    json.push('\n');
    write_file(out, "summary.json", &json)?;
    eprintln!(
        "termvar: {} candidates in {} cycles, written to {}",
        result.candidate_count(),
        result.cycles_run,
        out.display()
    );
    Ok(())
}

fn cmd_graph(args: &GraphArgs) -> Result<()> {
    prepare_out(&args.out)?;
    let links_path = args.links.clone().unwrap_or_else(|| args.out.join("links.jsonl"));
    let links = parse_links_jsonl(&read_text(&links_path)?).map_err(|e| data_err(&links_path, e))?;
    let options = ClassOptions {
        split_head_coord: args.split_head_coord,
    };
    let mut classes = build_coord_classes(&links, [], options);
    eprintln!("termvar: {} links, {} coordination classes", links.len(), classes.len());
    if let Some(path) = &args.conflate {
        let pairs = parse_conflation(&read_text(path)?).map_err(|e| data_err(path, e))?;
        let (merged, report) = classes.conflate(&pairs);
        for (a, b) in &report.unknown {
            eprintln!("termvar: conflation pair {a} == {b} names an unknown term, skipped");
        }
        eprintln!("termvar: {} conflation merges", report.merged);
        classes = merged;
    }
    let graph = build_spec_graph(&links, &classes);
    write_file(&args.out, "coord_classes.json", &coord_classes_json(&classes))?;
    write_file(&args.out, "coord_classes.dot", &coord_classes_dot(&classes, &links, options))?;
    write_file(&args.out, "spec_graph.json", &spec_graph_json(&graph))?;
    write_file(&args.out, "spec_graph.dot", &spec_graph_dot(&graph))?;
    eprintln!(
        "termvar: specialization graph with {} nodes and {} edges",
        graph.node_count(),
        graph.edges.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct BootstrapMeta {
    version: &'static str,
    rng: &'static str,
    rng_seed: u64,
    seed_count: usize,
    sizes: Vec<usize>,
    trials: usize,
    families: Vec<Family>,
    full_run_acquired: usize,
}

fn cmd_bootstrap(args: &BootstrapArgs) -> Result<()> {
    prepare_out(&args.out)?;
    let inputs = load_inputs(&args.input)?;
    let (table, full) = with_workers(args.input.workers, || {
        let table = bootstrap_experiment(
            &inputs.corpus,
            &inputs.grammar,
            &inputs.terms,
            &args.sizes,
            args.trials,
            args.rng_seed,
            &inputs.options,
        );
        let full = table.is_ok().then(|| {
            let reference = inputs.terms.iter().map(Term::id).collect();
            run_closure(&inputs.corpus, &inputs.grammar, &inputs.terms, &inputs.options)
                .map(|r| acquisition_volume(&r, &reference))
        });
        (table, full)
    })?;
    let table = table.map_err(|e| CliError::Data(e.to_string()))?;
    let full = full
        .expect("computed when the table is")
        .map_err(|e| CliError::Data(e.to_string()))?;
    write_file(&args.out, "bootstrap.csv", &table.to_csv())?;
    let meta = BootstrapMeta {
        version: env!("CARGO_PKG_VERSION"),
        rng: RNG_ALGORITHM,
        rng_seed: args.rng_seed,
        seed_count: inputs.terms.len(),
        sizes: args.sizes.clone(),
        trials: args.trials,
        families: inputs.options.families.clone(),
        full_run_acquired: full,
    };
    let mut json = serde_json::to_string_pretty(&meta).expect("meta serializes");
    json.push('\n');
    write_file(&args.out, "bootstrap.meta.json", &json)?;
    for (size, mean) in table.means() {
        eprintln!("termvar: size {size}: mean {mean:.2} acquired");
    }
    Ok(())
}

fn cmd_scan(args: &RunArgs) -> Result<()> {
    let inputs = load_inputs(&args.input)?;
    let grammar = inputs.grammar.restrict(&inputs.options.families);
    let patterns: Vec<_> = inputs
        .terms
        .iter()
        .flat_map(|t| std::iter::once(base_pattern(t)).chain(compile_variant_patterns(t, &grammar)))
        .collect();
    let matches = with_workers(args.input.workers, || scan(&inputs.corpus, &patterns))?;
    let text = matches_jsonl(&inputs.corpus, &patterns, &matches);
    match &args.out {
        Some(dir) => {
            prepare_out(dir)?;
            write_file(dir, "matches.jsonl", &text)?;
        }
        None => print!("{text}"),
    }
    eprintln!("termvar: {} matches", matches.len());
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> Result<()> {
    if let Some(path) = &args.terms {
        let list = parse_term_list(&read_text(path)?).map_err(|e| data_err(path, e))?;
        println!("{}: {} terms, {} skipped", path.display(), list.terms.len(), list.skipped.len());
    }
    if let Some(path) = &args.corpus {
        let corpus = load_corpus(path)?;
        println!(
            "{}: {} sentences, {} tokens",
            path.display(),
            corpus.sentence_count(),
            corpus.token_count()
        );
    }
    if let Some(path) = &args.grammar {
        let grammar = MetaGrammar::parse(&read_text(path)?).map_err(|e| data_err(path, e))?;
        println!("{}: {} rules", path.display(), grammar.len());
    }
    if let Some(path) = &args.conflate {
        let pairs = parse_conflation(&read_text(path)?).map_err(|e| data_err(path, e))?;
        println!("{}: {} pairs", path.display(), pairs.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Acquire(args) => cmd_acquire(args),
        Command::Graph(args) => cmd_graph(args),
        Command::Bootstrap(args) => cmd_bootstrap(args),
        Command::Scan(args) => cmd_scan(args),
        Command::Validate(args) => cmd_validate(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Data(message)) => {
            eprintln!("termvar: error: {message}");
            ExitCode::from(1)
        }
        Err(CliError::Io(message)) => {
            eprintln!("termvar: error: {message}");
            ExitCode::from(2)
        }
    }
}
