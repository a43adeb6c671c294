mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cfgchain::cfg::{emit_cfgtext, emit_dot, parse_cfgtext};
use cfgchain::eval::{inject_error, render_table, run_eval, InjectionKind};
use cfgchain::gateway::{
    Backend, Cassette, HeuristicBackend, RecordingBackend, RemoteBackend, RemoteConfig, ReplayBackend,
};
use cfgchain::kb::{load_kb, KnowledgeBase};
use cfgchain::{run_pipeline, tokenize};
use clap::{Parser, Subcommand, ValueEnum};

use config::{BackendMode, OutFormat, RecordSource, RunArgs, RunConfig};

#[derive(Parser)]
#[command(name = "cfgchain", version, about = "Control flow graphs for partial code")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Build the CFG of a source file.
    Generate {
        file: PathBuf,
        #[arg(long, value_enum)]
        out: Option<OutFormat>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Inject one error into a source file and print the result.
    Inject {
        file: PathBuf,
        #[arg(long)]
        kind: String,
        #[arg(long)]
        seed: u64,
        /// Write the mutation record (JSON) here.
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Score a corpus against gold CFGs.
    Eval {
        corpus: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: ReportFormat,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Render a CFGText file as DOT.
    Render {
        file: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Knowledge base maintenance.
    Kb {
        #[command(subcommand)]
        command: KbCommand,
    },
}

#[derive(Subcommand)]
enum KbCommand {
    /// Load and check every example under a directory.
    Validate { dir: PathBuf },
}

enum Failure {
    Usage(String),
    Domain(String),
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn domain(msg: impl Into<String>) -> Failure {
    Failure::Domain(msg.into())
}

fn read(path: &Path) -> Result<String, Failure> {
    cfgchain::load_source(path).map_err(|e| domain(format!("{}: {e}", path.display())))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| domain(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| domain(e.to_string())),
    }
}

fn open_cassette(path: &Path, append: bool) -> Result<Cassette, Failure> {
    let c = if append { Cassette::open_append(path) } else { Cassette::load(path) };
    c.map_err(|e| domain(format!("cassette {}: {e}", path.display())))
}

fn remote(cfg: &RunConfig) -> Result<RemoteBackend, Failure> {
    let endpoint = cfg.endpoint.clone().expect("checked by RunConfig");
    let mut rc = RemoteConfig::new(endpoint, cfg.model.clone());
    rc.style = cfg.wire_style;
    RemoteBackend::from_env(rc).map_err(|e| usage(e.to_string()))
}

fn make_backend(cfg: &RunConfig) -> Result<Box<dyn Backend>, Failure> {
    let cassette = || cfg.cassette.as_deref().expect("checked by RunConfig");
    Ok(match cfg.backend {
        BackendMode::Heuristic => Box::new(HeuristicBackend),
        BackendMode::Remote => Box::new(remote(cfg)?),
        BackendMode::Replay => Box::new(ReplayBackend::new(open_cassette(cassette(), false)?)),
        BackendMode::Record => {
            let c = open_cassette(cassette(), true)?;
            match cfg.record_from {
                RecordSource::Remote => Box::new(RecordingBackend::new(remote(cfg)?, c)),
                RecordSource::Heuristic => Box::new(RecordingBackend::new(HeuristicBackend, c)),
            }
        }
    })
}

fn kb(cfg: &RunConfig) -> Result<KnowledgeBase, Failure> {
    load_kb(&cfg.kb).map_err(|e| domain(format!("knowledge base: {e}")))
}

fn generate(file: &Path, out: Option<OutFormat>, run: &RunArgs) -> Result<(), Failure> {
    let cfg = RunConfig::resolve(run, out).map_err(usage)?;
    let text = read(file)?;
    let kb = kb(&cfg)?;
    let backend = make_backend(&cfg)?;
    let result = run_pipeline(&tokenize(&text), backend.as_ref(), &kb, cfg.variant, &cfg.limits)
        .map_err(|e| domain(format!("{}: {e}", file.display())))?;
    for w in &result.warnings {
        log::warn!("{w}");
    }
    let rendered = match cfg.out {
        OutFormat::Dot => emit_dot(&result.final_cfg),
        OutFormat::Cfgtext => emit_cfgtext(&result.final_cfg),
        OutFormat::Json => {
            let mut s = serde_json::to_string_pretty(&result).map_err(|e| domain(e.to_string()))?;
            s.push('\n');
            s
        }
    };
    write_out(None, &rendered)
}

fn inject(file: &Path, kind: &str, seed: u64, record: Option<&Path>) -> Result<(), Failure> {
    let kind: InjectionKind = kind.parse().map_err(usage)?;
    let text = read(file)?;
    let (mutated, rec) = inject_error(&text, kind, seed).map_err(|e| domain(format!("{}: {e}", file.display())))?;
    if let Some(p) = record {
        let mut json = serde_json::to_string_pretty(&rec).map_err(|e| domain(e.to_string()))?;
        json.push('\n');
        write_out(Some(p), &json)?;
    }
    write_out(None, &mutated)
}

fn eval(corpus: &Path, gold: &Path, format: ReportFormat, run: &RunArgs) -> Result<(), Failure> {
    let cfg = RunConfig::resolve(run, None).map_err(usage)?;
    let kb = kb(&cfg)?;
    let backend = make_backend(&cfg)?;
    let report = run_eval(corpus, gold, cfg.variant, backend.as_ref(), &kb, &cfg.limits)
        .map_err(|e| domain(format!("eval: {e}")))?;
    let text = match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&report).map_err(|e| domain(e.to_string()))?;
            s.push('\n');
            s
        }
        ReportFormat::Table => render_table(&report),
    };
    write_out(None, &text)
}

fn render(file: &Path, output: Option<&Path>) -> Result<(), Failure> {
    let text = read(file)?;
    let g = parse_cfgtext(&text).map_err(|e| domain(format!("{}: {e}", file.display())))?;
    write_out(output, &emit_dot(&g))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate { file, out, run } => generate(&file, out, &run),
        Command::Inject { file, kind, seed, record } => inject(&file, &kind, seed, record.as_deref()),
        Command::Eval { corpus, gold, format, run } => eval(&corpus, &gold, format, &run),
        Command::Render { file, output } => render(&file, output.as_deref()),
        Command::Kb { command: KbCommand::Validate { dir } } => {
            let kb = load_kb(&dir).map_err(|e| domain(e.to_string()))?;
            write_out(None, &format!("{}: {} examples ok\n", dir.display(), kb.len()))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
