//! `earkit` command-line tool.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use earkit::agreement::{agreement_report, evaluate, resolve_discussion, CrossCheck, Decision, KappaMode, ReportOptions};
use earkit::annotation::validate_annotation;
use earkit::brat::parse_brat;
use earkit::catalog::{render_explanation, validate_catalog, DiagnosticKind, SlotName};
use earkit::corpus::{load_corpus_dir, CorpusOptions};
use earkit::project::{load_project, save_project, Split, SplitFilter};
use earkit::reporting::{pattern_distribution, relation_distribution, DistributionTable};
use earkit::{Catalog, Project, RelationKey, Stage};

/// Seed for random choices between two acceptable annotations when none is
/// given.
const DEFAULT_SEED: u64 = 2020;

#[derive(Parser)]
#[command(name = "earkit", version, about = "Explain argumentative relations with rhetorical patterns")]
struct Cli {
    /// Pattern catalog (TOML); defaults to the built-in catalog.
    #[arg(long, global = true)]
    catalog: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    All,
    Dev,
    Test,
}

impl From<SplitArg> for SplitFilter {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::All => SplitFilter::All,
            SplitArg::Dev => SplitFilter::Dev,
            SplitArg::Test => SplitFilter::Test,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KappaArg {
    Resolved,
    Original,
}

#[derive(Subcommand)]
enum Command {
    /// Build a project file from corpus XML and optional brat annotations.
    Convert {
        #[arg(long)]
        corpus: PathBuf,
        /// Output project file.
        #[arg(long)]
        project: PathBuf,
        /// Directory with one sub-directory of `<text id>.ann` files per annotator.
        #[arg(long)]
        brat: Option<PathBuf>,
        /// Lines of `<text id> dev|test`; unlisted texts are test.
        #[arg(long)]
        split_file: Option<PathBuf>,
        /// Lines of `<topic id><TAB><question>`.
        #[arg(long)]
        topics: Option<PathBuf>,
        /// JSON list of Stage-2 cross-check responses.
        #[arg(long)]
        crosschecks: Option<PathBuf>,
        /// JSON list of Stage-3 outcomes: {text_id, relation_id, decision}.
        #[arg(long)]
        decisions: Option<PathBuf>,
        /// Annotator names in order; defaults to the brat sub-directories.
        #[arg(long, value_delimiter = ',')]
        annotators: Vec<String>,
        #[arg(long)]
        id: Option<String>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Check the catalog, a corpus directory and/or a project.
    Validate {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        project: Option<PathBuf>,
    },
    /// Relation-type and pattern distributions.
    Stats {
        #[arg(long, conflicts_with = "project")]
        corpus: Option<PathBuf>,
        #[arg(long)]
        project: Option<PathBuf>,
        #[arg(long)]
        split_file: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        stage: u8,
        #[arg(long, value_enum, default_value_t = SplitArg::All)]
        split: SplitArg,
        /// One column per annotator instead of the accepted explanations.
        #[arg(long)]
        per_annotator: bool,
    },
    /// Per-stage agreement report.
    Agreement {
        #[arg(long)]
        project: PathBuf,
        #[arg(long, value_enum, default_value_t = SplitArg::All)]
        split: SplitArg,
        #[arg(long, value_enum, default_value_t = KappaArg::Resolved)]
        kappa_mode: KappaArg,
        /// Overrides the project's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Coverage of the accepted explanations per stage.
    Coverage {
        #[arg(long)]
        project: PathBuf,
        #[arg(long, value_enum, default_value_t = SplitArg::All)]
        split: SplitArg,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the explanation of one annotated relation, or of a pattern with
    /// fills given as `--fill slot=text`.
    Render {
        #[arg(long)]
        project: Option<PathBuf>,
        #[arg(long)]
        text: Option<String>,
        #[arg(long)]
        relation: Option<String>,
        /// Use this annotator's Stage-1 annotation instead of the accepted one.
        #[arg(long)]
        annotator: Option<String>,
        #[arg(long, default_value_t = 3)]
        stage: u8,
        #[arg(long)]
        pattern: Option<String>,
        #[arg(long = "fill")]
        fills: Vec<String>,
    },
    /// Run the HTTP service over a directory of project files.
    Serve {
        #[arg(long, alias = "project")]
        store: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
    },
}

type Result<T> = std::result::Result<T, String>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

fn load_catalog(path: Option<&Path>) -> Result<Catalog> {
    match path {
        None => Ok(Catalog::shipped()),
        Some(p) => {
            let source = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            Catalog::from_toml_str(&source).map_err(|e| format!("{}: {e}", p.display()))
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn stage_arg(n: u8) -> Result<Stage> {
    Stage::try_from(n)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let catalog = load_catalog(cli.catalog.as_deref())?;
    let format = cli.format;
    match cli.command {
        Command::Convert {
            corpus,
            project,
            brat,
            split_file,
            topics,
            crosschecks,
            decisions,
            annotators,
            id,
            seed,
        } => convert(
            &catalog,
            ConvertArgs {
                corpus,
                project,
                brat,
                split_file,
                topics,
                crosschecks,
                decisions,
                annotators,
                id,
                seed,
            },
        ),
        Command::Validate { corpus, project } => validate(&catalog, corpus.as_deref(), project.as_deref()),
        Command::Stats {
            corpus,
            project,
            split_file,
            stage,
            split,
            per_annotator,
        } => {
            let stage = stage_arg(stage)?;
            let project = match (corpus, project) {
                (_, Some(p)) => load_project(&p).map_err(|e| e.to_string())?,
                (Some(c), None) => {
                    let load = load_corpus_dir(&c, &CorpusOptions::default()).map_err(|e| e.to_string())?;
                    let mut p = Project::new("corpus", load.texts, Vec::new());
                    if let Some(f) = split_file {
                        p.split = read_split(&f)?;
                    }
                    p
                }
                (None, None) => return Err("stats needs --corpus or --project".into()),
            };
            let texts = project.corpus.len();
            let relations: usize = project.corpus.iter().map(|t| t.relations.len()).sum();
            let mut tables = vec![relation_distribution(&project)];
            if project.annotators.len() >= 2 {
                tables.push(
                    pattern_distribution(&project, &catalog, stage, per_annotator, split.into())
                        .map_err(|e| e.to_string())?,
                );
            }
            print!("{}", render_tables(format, texts, relations, &tables));
            Ok(ExitCode::SUCCESS)
        }
        Command::Agreement {
            project,
            split,
            kappa_mode,
            seed,
        } => {
            let project = project_with_seed(&project, seed)?;
            let options = ReportOptions {
                split: split.into(),
                kappa_mode: match kappa_mode {
                    KappaArg::Resolved => KappaMode::Resolved,
                    KappaArg::Original => KappaMode::Original,
                },
                ..Default::default()
            };
            let report = agreement_report(&project, &catalog, &options).map_err(|e| e.to_string())?;
            match format {
                Format::Text => print!("{}", report.to_text()),
                Format::Csv => print!("{}", report.to_csv()),
                Format::Json => println!("{}", serde_json::to_string_pretty(&report).expect("report serializes")),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Coverage { project, split, seed } => {
            let project = project_with_seed(&project, seed)?;
            let options = ReportOptions {
                split: split.into(),
                ..Default::default()
            };
            let report = agreement_report(&project, &catalog, &options).map_err(|e| e.to_string())?;
            let rows: Vec<_> = report.stages.iter().map(|s| (s.stage, s.coverage)).collect();
            match format {
                Format::Text => {
                    for (stage, c) in rows {
                        println!("stage {stage}: {c}");
                    }
                }
                Format::Csv => {
                    println!("stage,numerator,denominator,ratio");
                    for (stage, c) in rows {
                        let ratio = c.ratio.map_or(String::new(), |r| format!("{r:.6}"));
                        println!("{stage},{},{},{ratio}", c.numerator, c.denominator);
                    }
                }
                Format::Json => {
                    let v: Vec<_> = rows
                        .iter()
                        .map(|(stage, c)| serde_json::json!({ "stage": stage, "coverage": c }))
                        .collect();
                    println!("{}", serde_json::to_string_pretty(&v).expect("serializes"));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Render {
            project,
            text,
            relation,
            annotator,
            stage,
            pattern,
            fills,
        } => {
            let sentence = match (pattern, project) {
                (Some(pattern), _) => {
                    let p = catalog.get(&pattern).ok_or_else(|| format!("unknown pattern {pattern}"))?;
                    let mut map = BTreeMap::new();
                    for f in &fills {
                        let (slot, value) = f.split_once('=').ok_or_else(|| format!("--fill {f}: expected slot=text"))?;
                        let slot: SlotName = slot.parse()?;
                        map.insert(slot, value.to_string());
                    }
                    render_explanation(p, &map).map_err(|e| e.to_string())?
                }
                (None, Some(path)) => {
                    let project = load_project(&path).map_err(|e| e.to_string())?;
                    let (Some(text), Some(relation)) = (text, relation) else {
                        return Err("render needs --text and --relation with --project".into());
                    };
                    render_from_project(&project, &catalog, &RelationKey::new(text, relation), annotator.as_deref(), stage_arg(stage)?)?
                }
                (None, None) => return Err("render needs --pattern or --project".into()),
            };
            println!("{sentence}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve { store, bind } => {
            let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
            eprintln!("serving {} on http://{bind}", store.display());
            rt.block_on(earkit_service::serve(&store, bind, catalog))
                .map_err(|e| e.to_string())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn project_with_seed(path: &Path, seed: Option<u64>) -> Result<Project> {
    let mut project = load_project(path).map_err(|e| e.to_string())?;
    if let Some(seed) = seed {
        project.rng_seed = seed;
    }
    Ok(project)
}

fn render_tables(format: Format, texts: usize, relations: usize, tables: &[DistributionTable]) -> String {
    match format {
        Format::Text => {
            let mut out = format!("texts: {texts}\nrelations: {relations}\n");
            for t in tables {
                out.push('\n');
                out.push_str(&t.to_text());
            }
            out
        }
        Format::Csv => tables
            .iter()
            .map(|t| format!("# {}\n{}", t.title, t.to_csv()))
            .collect::<Vec<_>>()
            .join("\n"),
        Format::Json => {
            let v = serde_json::json!({ "texts": texts, "relations": relations, "tables": tables });
            format!("{}\n", serde_json::to_string_pretty(&v).expect("serializes"))
        }
    }
}

fn render_from_project(
    project: &Project,
    catalog: &Catalog,
    key: &RelationKey,
    annotator: Option<&str>,
    stage: Stage,
) -> Result<String> {
    if project.relation_type(key).is_none() {
        return Err(format!("relation {key} is not in the project"));
    }
    let who = match annotator {
        Some(a) => a.to_string(),
        None => {
            let records = evaluate(project, catalog, &ReportOptions::default()).map_err(|e| e.to_string())?;
            records
                .iter()
                .find(|r| r.key == *key)
                .and_then(|r| {
                    let s = r.stage(stage);
                    s.verdict.filter(|v| v.is_accepted()).and(s.chosen.clone())
                })
                .ok_or_else(|| format!("{key} has no accepted explanation after stage {stage}; pass --annotator"))?
        }
    };
    let ann = project
        .annotations
        .iter()
        .find(|a| a.stage == Stage::One && a.annotator == who && a.key() == *key)
        .ok_or_else(|| format!("{key}: no annotation by {who}"))?;
    ann.render(catalog).map_err(|e| e.to_string())
}

fn read_split(path: &Path) -> Result<BTreeMap<String, Split>> {
    let mut out = BTreeMap::new();
    for (i, line) in read(path)?.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(id), Some(split), None) = (it.next(), it.next(), it.next()) else {
            return Err(format!("{}:{}: expected `<text id> dev|test`", path.display(), i + 1));
        };
        let split = match split {
            "dev" => Split::Dev,
            "test" => Split::Test,
            other => return Err(format!("{}:{}: unknown split `{other}`", path.display(), i + 1)),
        };
        out.insert(id.to_string(), split);
    }
    Ok(out)
}

fn read_topics(path: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in read(path)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, question) = line
            .split_once('\t')
            .ok_or_else(|| format!("{}:{}: expected `<topic id><TAB><question>`", path.display(), i + 1))?;
        out.insert(id.trim().to_string(), question.trim().to_string());
    }
    Ok(out)
}

#[derive(Deserialize)]
struct DecisionRecord {
    text_id: String,
    relation_id: String,
    decision: Decision,
}

struct ConvertArgs {
    corpus: PathBuf,
    project: PathBuf,
    brat: Option<PathBuf>,
    split_file: Option<PathBuf>,
    topics: Option<PathBuf>,
    crosschecks: Option<PathBuf>,
    decisions: Option<PathBuf>,
    annotators: Vec<String>,
    id: Option<String>,
    seed: u64,
}

fn convert(catalog: &Catalog, args: ConvertArgs) -> Result<ExitCode> {
    let mut options = CorpusOptions::default();
    if let Some(t) = &args.topics {
        options.topics = read_topics(t)?;
    }
    let load = load_corpus_dir(&args.corpus, &options).map_err(|e| e.to_string())?;
    for id in &load.excluded {
        eprintln!("note: skipped {id}: no topic question");
    }
    let mut annotators = args.annotators.clone();
    if annotators.is_empty() {
        if let Some(b) = &args.brat {
            let mut dirs: Vec<String> = fs::read_dir(b)
                .map_err(|e| format!("{}: {e}", b.display()))?
                .filter_map(|e| e.ok())
                .filter(|e| e.path().is_dir())
                .filter_map(|e| e.file_name().into_string().ok())
                .collect();
            dirs.sort();
            annotators = dirs;
        }
    }
    let id = args.id.clone().unwrap_or_else(|| {
        args.project
            .file_stem()
            .map_or("project".into(), |s| s.to_string_lossy().into_owned())
    });
    let mut project = Project::new(id, load.texts, annotators.clone());
    project.rng_seed = args.seed;
    if let Some(f) = &args.split_file {
        project.split = read_split(f)?;
    }

    let mut errors = 0usize;
    if let Some(b) = &args.brat {
        for who in &annotators {
            let dir = b.join(who);
            for text in &project.corpus {
                let path = dir.join(format!("{}.ann", text.id));
                if !path.exists() {
                    continue;
                }
                let doc = parse_brat(&read(&path)?, &text.text).map_err(|e| format!("{}: {e}", path.display()))?;
                for frag in doc.fragments {
                    let ann = frag
                        .into_annotation(text, who, Stage::One)
                        .map_err(|e| format!("{}: {e}", path.display()))?;
                    for d in validate_annotation(&ann, text, catalog) {
                        eprintln!("{}: {d}", path.display());
                        errors += usize::from(d.is_error());
                    }
                    project.annotations.push(ann);
                }
            }
        }
    }
    if let Some(f) = &args.crosschecks {
        project.cross_checks =
            serde_json::from_str::<Vec<CrossCheck>>(&read(f)?).map_err(|e| format!("{}: {e}", f.display()))?;
    }
    if let Some(f) = &args.decisions {
        let records: Vec<DecisionRecord> =
            serde_json::from_str(&read(f)?).map_err(|e| format!("{}: {e}", f.display()))?;
        let pair: [String; 2] = match annotators.as_slice() {
            [a, b, ..] => [a.clone(), b.clone()],
            _ => return Err("--decisions needs two annotators".into()),
        };
        for r in records {
            let key = RelationKey::new(r.text_id, r.relation_id);
            let res = resolve_discussion(&key, &r.decision, &pair, project.rng_seed).map_err(|e| e.to_string())?;
            project.resolutions.push(res);
        }
    }
    if errors > 0 {
        return Err(format!("{errors} invalid annotation(s); project not written"));
    }
    save_project(&project, &args.project).map_err(|e| e.to_string())?;
    eprintln!(
        "wrote {} ({} texts, {} relations, {} annotations)",
        args.project.display(),
        project.corpus.len(),
        project.corpus.iter().map(|t| t.relations.len()).sum::<usize>(),
        project.annotations.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn validate(catalog: &Catalog, corpus: Option<&Path>, project: Option<&Path>) -> Result<ExitCode> {
    let mut errors = 0usize;
    for d in validate_catalog(catalog.patterns()) {
        match d.kind {
            DiagnosticKind::DocumentedException => eprintln!("note: {d}"),
            _ => {
                eprintln!("error: {d}");
                errors += 1;
            }
        }
    }
    if let Some(dir) = corpus {
        match load_corpus_dir(dir, &CorpusOptions::default()) {
            Ok(load) => {
                for t in &load.texts {
                    if let Err(e) = t.check() {
                        eprintln!("error: {e}");
                        errors += 1;
                    }
                }
                println!(
                    "corpus: {} texts, {} relations, {} skipped",
                    load.texts.len(),
                    load.relation_count(),
                    load.excluded.len()
                );
            }
            Err(e) => {
                eprintln!("error: {e}");
                errors += 1;
            }
        }
    }
    if let Some(path) = project {
        match load_project(path) {
            Ok(p) => {
                let mut seen = BTreeSet::new();
                for a in &p.annotations {
                    if !seen.insert((a.key(), a.annotator.clone(), a.stage)) {
                        eprintln!("error: {}: duplicate annotation by {}", a.key(), a.annotator);
                        errors += 1;
                    }
                    let Some(text) = p.text(&a.text_id) else {
                        eprintln!("error: {}: unknown text", a.key());
                        errors += 1;
                        continue;
                    };
                    for d in validate_annotation(a, text, catalog) {
                        eprintln!("{d}");
                        errors += usize::from(d.is_error());
                    }
                }
                println!("project {}: {} annotations", p.id, p.annotations.len());
            }
            Err(e) => {
                eprintln!("error: {e}");
                errors += 1;
            }
        }
    }
    if errors > 0 {
        eprintln!("{errors} error(s)");
        Ok(ExitCode::FAILURE)
    } else {
        Ok(ExitCode::SUCCESS)
    }
}
