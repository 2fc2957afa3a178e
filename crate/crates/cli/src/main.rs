use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use amrmeter::embeddings::{load_contextual_store, load_static_table_filtered};
use amrmeter::graco::ExternalAlignments;
use amrmeter::harness::evaluate::{score_all, EvalConfig};
use amrmeter::harness::metrics::{build_metric, MetricError, Resource};
use amrmeter::harness::report;
use amrmeter::harness::stats::TauRule;
use amrmeter::harness::suite::{write_suite, SuiteStats};
use amrmeter::harness::{
    evaluate, load_suite, validate_suite, MetricRegistry, PhenomenonRegistry, Resources, TestCase,
};
use amrmeter::lemma::Lemmatizer;
use amrmeter::text::SynonymLexicon;

const EXIT_OK: u8 = 0;
const EXIT_PARTIAL: u8 = 1;
const EXIT_INVALID: u8 = 2;

#[derive(Parser)]
#[command(
    name = "amrmeter",
    version,
    about = "Meaning-oriented metric evaluation over text and AMR pairs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a suite and print per-phenomenon statistics.
    Validate {
        #[command(flatten)]
        suite: SuiteArgs,
        #[arg(long, value_enum, default_value = "tsv")]
        format: Format,
    },
    /// Score every case with the selected metrics.
    Score {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value = "jsonl")]
        format: Format,
    },
    /// Score and aggregate against human judgements per phenomenon.
    Evaluate {
        #[command(flatten)]
        run: RunArgs,
        /// Report formats; repeat the flag for several.
        #[arg(long, value_enum, default_values = ["md"])]
        format: Vec<Format>,
        #[arg(long, default_value = "score-percentile:5")]
        tau_rule: String,
    },
    /// Rewrite a suite (for example the grouped release format) as
    /// line-delimited records.
    Convert {
        #[command(flatten)]
        suite: SuiteArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(long)]
    suite: PathBuf,
    /// Extra phenomena, one per line: `Name alias1, alias2`.
    #[arg(long)]
    phenomena: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    suite: SuiteArgs,
    /// Comma-separated metric ids.
    #[arg(long, value_delimiter = ',', required = true)]
    metrics: Vec<String>,
    /// Word vectors, one `word v1 ... vd` line each.
    #[arg(long)]
    static_emb: Option<PathBuf>,
    /// Per-sentence token vectors (line-delimited JSON).
    #[arg(long)]
    ctx_emb: Option<PathBuf>,
    /// Concept alignments, lines `caseid side start-end|node ...`.
    #[arg(long)]
    align: Option<PathBuf>,
    /// Synonym lexicon for meteor_lite, lines `word<TAB>syn1,syn2`.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    restarts: usize,
    #[arg(long, default_value_t = 2)]
    wl_iterations: usize,
    /// Leave the root triple out of Smatch/S²match.
    #[arg(long)]
    no_root_triple: bool,
    /// Output directory; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Tsv,
    Md,
    Jsonl,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Tsv => "tsv",
            Format::Md => "md",
            Format::Jsonl => "jsonl",
        }
    }
}

fn flag_for(resource: Resource) -> &'static str {
    match resource {
        Resource::StaticEmbeddings => "--static-emb",
        Resource::ContextualEmbeddings => "--ctx-emb",
    }
}

fn phenomena(args: &SuiteArgs) -> Result<PhenomenonRegistry> {
    let mut reg = PhenomenonRegistry::default();
    if let Some(path) = &args.phenomena {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        reg.extend_from_str(&text);
    }
    Ok(reg)
}

fn load(args: &SuiteArgs) -> Result<(Vec<TestCase>, PhenomenonRegistry)> {
    let reg = phenomena(args)?;
    let cases = load_suite(&args.suite, &reg)
        .with_context(|| format!("loading suite {}", args.suite.display()))?;
    Ok((cases, reg))
}

/// Every word a static lookup might ask for.
fn vocabulary(cases: &[TestCase], lemmatizer: &dyn Lemmatizer) -> HashSet<String> {
    let mut vocab = HashSet::new();
    for c in cases {
        for tok in c
            .pair
            .reference
            .tokens
            .iter()
            .chain(&c.pair.candidate.tokens)
        {
            vocab.insert(tok.clone());
            vocab.extend(lemmatizer.candidates(tok));
        }
        for lemmas in [&c.lemmas_a, &c.lemmas_b].into_iter().flatten() {
            vocab.extend(lemmas.iter().map(|l| l.to_lowercase()));
        }
        for node in c
            .amr_a
            .concept_nodes()
            .into_iter()
            .chain(c.amr_b.concept_nodes())
        {
            vocab.insert(node.lemma);
        }
    }
    vocab
}

fn resources(run: &RunArgs, cases: &[TestCase]) -> Result<Resources> {
    let mut res = Resources {
        seed: run.seed,
        ..Resources::default()
    };
    res.smatch.restarts = run.restarts;
    res.smatch.include_root = !run.no_root_triple;
    res.s2match.smatch = res.smatch;
    res.wl.iterations = run.wl_iterations;
    if let Some(path) = &run.static_emb {
        let vocab = vocabulary(cases, res.lemmatizer.as_ref());
        let table = load_static_table_filtered(path, Some(&vocab))
            .with_context(|| format!("loading static embeddings {}", path.display()))?;
        log::info!(
            "static table: {} of {} needed words, dimension {}",
            table.len(),
            vocab.len(),
            table.dimension()
        );
        res.static_table = Some(Arc::new(table));
    }
    if let Some(path) = &run.ctx_emb {
        let store = load_contextual_store(path)
            .with_context(|| format!("loading contextual store {}", path.display()))?;
        res.contextual = Some(Arc::new(store));
    }
    if let Some(path) = &run.align {
        res.alignments = Some(Arc::new(ExternalAlignments::load(path)?));
    }
    if let Some(path) = &run.lexicon {
        res.lexicon = Some(Arc::new(SynonymLexicon::load(path)?));
    }
    Ok(res)
}

fn registry(run: &RunArgs, res: &Resources) -> Result<MetricRegistry> {
    let mut reg = MetricRegistry::new();
    for id in &run.metrics {
        match build_metric(id, res) {
            Ok(m) => reg.register(m),
            Err(MetricError::MissingResource { metric, resource }) => {
                bail!(
                    "metric {metric} needs a {resource}; pass {}",
                    flag_for(resource)
                )
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(reg)
}

fn metadata(run: &RunArgs, reg: &MetricRegistry) -> BTreeMap<String, String> {
    let path = |p: &Option<PathBuf>| {
        p.as_ref()
            .map_or("-".to_string(), |p| p.display().to_string())
    };
    BTreeMap::from([
        ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("suite".to_string(), run.suite.suite.display().to_string()),
        ("metrics".to_string(), reg.ids().join(",")),
        ("seed".to_string(), run.seed.to_string()),
        ("smatch_restarts".to_string(), run.restarts.to_string()),
        (
            "smatch_root_triple".to_string(),
            (!run.no_root_triple).to_string(),
        ),
        ("wl_iterations".to_string(), run.wl_iterations.to_string()),
        ("static_emb".to_string(), path(&run.static_emb)),
        ("ctx_emb".to_string(), path(&run.ctx_emb)),
        ("align".to_string(), path(&run.align)),
        ("lexicon".to_string(), path(&run.lexicon)),
    ])
}

fn emit(out: Option<&Path>, name: &str, contents: &str) -> Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(name);
            fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        }
        None => std::io::stdout().write_all(contents.as_bytes())?,
    }
    Ok(())
}

fn stats_text(stats: &SuiteStats, format: Format) -> String {
    match format {
        Format::Jsonl => stats
            .groups
            .iter()
            .map(|g| serde_json::to_string(g).expect("serializable") + "\n")
            .collect(),
        Format::Tsv | Format::Md => {
            let md = format == Format::Md;
            let mut s = if md {
                "| dataset | phenomenon | count | mean | median | std | stderr |\n|---|---|---|---|---|---|---|\n".to_string()
            } else {
                "dataset\tphenomenon\tcount\tmean\tmedian\tstd\tstderr\n".to_string()
            };
            let line = |cells: Vec<String>| {
                if md {
                    format!("| {} |\n", cells.join(" | "))
                } else {
                    cells.join("\t") + "\n"
                }
            };
            for g in &stats.groups {
                s += &line(vec![
                    g.dataset.to_string(),
                    g.phenomenon.clone(),
                    g.count.to_string(),
                    format!("{:.4}", g.mean),
                    format!("{:.4}", g.median),
                    format!("{:.4}", g.std),
                    format!("{:.4}", g.stderr),
                ]);
            }
            for (d, n) in &stats.totals {
                s += &line(vec![
                    d.to_string(),
                    "Total".into(),
                    n.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                ]);
            }
            s
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Validate { suite, format } => {
            let (cases, reg) = load(&suite)?;
            let stats = validate_suite(&cases, &reg);
            print!("{}", stats_text(&stats, format));
            eprintln!("{} cases valid", stats.total);
            Ok(EXIT_OK)
        }
        Command::Convert { suite, out } => {
            let (cases, _) = load(&suite)?;
            let text = write_suite(&cases);
            match out {
                Some(path) => {
                    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?
                }
                None => print!("{text}"),
            }
            Ok(EXIT_OK)
        }
        Command::Score { run, format } => {
            let (cases, _) = load(&run.suite)?;
            let res = resources(&run, &cases)?;
            let reg = registry(&run, &res)?;
            let scored = score_all(&cases, reg.metrics());
            let mut partial = false;
            let mut columns = Vec::new();
            for (col, failure) in scored {
                if let Some(f) = failure {
                    eprintln!(
                        "metric {} failed on {} case(s): {}",
                        f.metric, f.failed_cases, f.first_error
                    );
                    partial = true;
                }
                columns.push(col);
            }
            let text = match format {
                Format::Jsonl => report::score_records_jsonl(&cases, &columns),
                Format::Tsv | Format::Md => report::score_records_tsv(&cases, &columns),
            };
            let name = format!(
                "scores.{}",
                if format == Format::Jsonl {
                    "jsonl"
                } else {
                    "tsv"
                }
            );
            emit(run.out.as_deref(), &name, &text)?;
            Ok(if partial { EXIT_PARTIAL } else { EXIT_OK })
        }
        Command::Evaluate {
            run,
            format,
            tau_rule,
        } => {
            let tau_rule: TauRule = tau_rule.parse().map_err(anyhow::Error::msg)?;
            let (cases, phen) = load(&run.suite)?;
            let res = resources(&run, &cases)?;
            let reg = registry(&run, &res)?;
            let config = EvalConfig {
                tau_rule,
                metadata: metadata(&run, &reg),
            };
            let rep = evaluate(&cases, &reg, &phen, &config);
            let mut formats = format;
            formats.dedup();
            for f in &formats {
                let text = match f {
                    Format::Tsv => report::to_tsv(&rep),
                    Format::Md => report::to_markdown(&rep),
                    Format::Jsonl => report::to_jsonl(&rep),
                };
                emit(
                    run.out.as_deref(),
                    &format!("report.{}", f.extension()),
                    &text,
                )?;
                if run.out.is_none() {
                    break;
                }
            }
            if let Some(dir) = &run.out {
                let pdir = dir.join("phenomena");
                for (name, text) in report::phenomenon_files(&cases, &rep) {
                    emit(Some(&pdir), &name, &text)?;
                }
            }
            for f in &rep.failures {
                eprintln!(
                    "metric {} failed on {} case(s): {}",
                    f.metric, f.failed_cases, f.first_error
                );
            }
            Ok(if rep.failures.is_empty() {
                EXIT_OK
            } else {
                EXIT_PARTIAL
            })
        }
    }
}

fn configure_threads() {
    if let Ok(v) = std::env::var("AMRMETER_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                {
                    log::warn!("cannot set thread count: {e}");
                }
            }
            _ => log::warn!("ignoring AMRMETER_THREADS={v}: expected a positive integer"),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    configure_threads();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}
