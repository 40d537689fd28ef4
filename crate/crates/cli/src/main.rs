use bplp_cli::config::{InitKind, Settings};
use bplp_cli::instance_file::InstanceFile;
use bplp_cli::pipeline::{self, PipelineError};
use bplp_cli::report::RunReport;
use bplp_core::problems::generate::{GenParams, Shape};
use bplp_core::ProblemKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_CONTRADICTION: u8 = 3;

#[derive(Parser)]
#[command(name = "bplp", version, about = "Solve LP relaxations with max-product belief propagation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance file.
    Gen {
        #[command(flatten)]
        size: SizeArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Noise magnitude to record in the file (default: derived from the weights).
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run BP and recover the LP solution.
    Solve(RunArgs),
    /// Check the convergence conditions.
    Check(RunArgs),
    /// Run BP and compare against the brute-force MAP.
    Compare(RunArgs),
    /// Generate, solve and compare many instances.
    Bench {
        #[command(flatten)]
        size: SizeArgs,
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// First instance seed; instance i uses seed + i. Also seeds random
        /// message initialisation.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        noise: Option<f64>,
        #[command(flatten)]
        bp: BpArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
    },
}

#[derive(Args)]
struct SizeArgs {
    #[arg(long, value_parser = parse_kind)]
    kind: ProblemKind,
    #[arg(long, default_value_t = 6)]
    nodes: usize,
    #[arg(long, default_value_t = 9)]
    edges: usize,
    #[arg(long, value_enum, default_value_t = ShapeArg::Random)]
    shape: ShapeArg,
    #[arg(long, default_value_t = 3)]
    layers: usize,
    #[arg(long, default_value_t = 3)]
    width: usize,
    #[arg(long, default_value_t = 10)]
    max_weight: u32,
    #[arg(long, default_value_t = 3)]
    max_capacity: u32,
    #[arg(long, default_value_t = 2)]
    max_budget: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeArg {
    Random,
    Cycle,
    Layered,
}

#[derive(Args)]
struct RunArgs {
    /// Instance file (JSON).
    input: PathBuf,
    /// Override the file's noise magnitude.
    #[arg(long)]
    noise: Option<f64>,
    /// Seed for random message initialisation.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    bp: BpArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
}

#[derive(Args)]
struct BpArgs {
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    residual_tol: Option<f64>,
    #[arg(long)]
    tie_tol: Option<f64>,
    #[arg(long)]
    stable_window: Option<usize>,
    #[arg(long, value_enum)]
    init: Option<InitKind>,
    #[arg(long)]
    init_range: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Structured,
}

fn parse_kind(s: &str) -> Result<ProblemKind, String> {
    s.parse()
}

impl SizeArgs {
    fn params(&self) -> GenParams {
        let shape = match self.shape {
            ShapeArg::Random => Shape::Random,
            ShapeArg::Cycle => Shape::Cycle,
            ShapeArg::Layered => Shape::Layered { layers: self.layers, width: self.width },
        };
        GenParams {
            nodes: self.nodes,
            edges: self.edges,
            max_weight: self.max_weight,
            max_capacity: self.max_capacity,
            max_budget: self.max_budget,
            shape,
        }
    }
}

impl BpArgs {
    fn config(&self, seed: Option<u64>) -> Result<bplp_core::BpConfig, Failure> {
        let flags = Settings {
            max_iters: self.max_iters,
            residual_tol: self.residual_tol,
            tie_tol: self.tie_tol,
            stable_window: self.stable_window,
            init: self.init,
            init_range: self.init_range,
            seed,
            parallel: None,
        };
        let file = Settings::from_env().map_err(|e| Failure::input(e.to_string()))?;
        Ok(flags.over(file).to_bp_config())
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure { code: EXIT_INPUT, message: message.into() }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure::input(e.to_string())
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn render(report: &RunReport, format: Format) -> String {
    match format {
        Format::Human => report.render_human(),
        Format::Structured => report.to_json() + "\n",
    }
}

fn load(path: &Path) -> Result<InstanceFile, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    InstanceFile::parse(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Gen { size, seed, noise, out } => {
            let file = pipeline::gen(size.kind, &size.params(), seed, noise)?;
            emit(&file.to_json(), out.as_deref())?;
            Ok(0)
        }
        Command::Solve(a) => {
            let config = a.bp.config(a.seed)?;
            let p = pipeline::prepare(&load(&a.input)?, a.noise)?;
            emit(&render(&pipeline::solve(&p, &config)?, a.format), a.out.as_deref())?;
            Ok(0)
        }
        Command::Check(a) => {
            let p = pipeline::prepare(&load(&a.input)?, a.noise)?;
            emit(&render(&pipeline::check(&p), a.format), a.out.as_deref())?;
            Ok(0)
        }
        Command::Compare(a) => {
            let config = a.bp.config(a.seed)?;
            let p = pipeline::prepare(&load(&a.input)?, a.noise)?;
            let report = pipeline::compare(&p, &config)?;
            emit(&render(&report, a.format), a.out.as_deref())?;
            let contradiction = report.comparison.is_some_and(|c| c.contradicts_theorem);
            Ok(if contradiction { EXIT_CONTRADICTION } else { 0 })
        }
        Command::Bench { size, count, seed, noise, bp, out, format } => {
            let config = bp.config(Some(seed))?;
            let outcome = pipeline::bench(size.kind, count, &size.params(), seed, noise, &config)?;
            let text = match format {
                Format::Human => outcome.summary.render_human(),
                Format::Structured => {
                    let mut s = String::new();
                    for r in &outcome.records {
                        s += &serde_json::to_string(r).expect("records serialize");
                        s.push('\n');
                    }
                    s += &serde_json::to_string(&outcome.summary).expect("summaries serialize");
                    s.push('\n');
                    s
                }
            };
            emit(&text, out.as_deref())?;
            Ok(if outcome.summary.contradictions > 0 { EXIT_CONTRADICTION } else { 0 })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
