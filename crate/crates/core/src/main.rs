use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use liftc::bench::{max_disagreement, run_bench, to_csv, BenchConfig, BenchMode};
use liftc::circuit::Circuit;
use liftc::codegen::{self, build_and_run, emit, EmitterConfig, ToolchainConfig};
use liftc::engine::{evaluate, EngineOptions, NumericMode};
use liftc::heuristics::{OrderStrategy, DEFAULT_SEARCH_BUDGET};
use liftc::mln::Mln;
use liftc::numeric::PartitionValue;
use liftc::oracle::GroundOracle;
use liftc::parse::{parse_model, Model};
use liftc::shatter::shatter;
use liftc::{Error, Result};

#[derive(Parser)]
#[command(name = "liftc", version, about = "Exact lifted partition functions for Markov logic networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Brute-force Z by enumerating worlds (small models only)
    Ground {
        #[command(flatten)]
        model: ModelArgs,
        /// Ignore the ground-atom bound
        #[arg(long)]
        force: bool,
    },
    /// Lifted evaluation in-process
    Eval {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        order: OrderArgs,
        #[arg(long, value_enum, default_value = "double")]
        numeric: Numeric,
        /// Print cache and timing statistics
        #[arg(long)]
        stats: bool,
    },
    /// Write the generated C program
    Compile {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        order: OrderArgs,
        #[arg(long, value_enum, default_value = "double")]
        numeric: Numeric,
        #[arg(long)]
        prune: bool,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
    /// Generate, build and run the C program
    Run {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        order: OrderArgs,
        #[arg(long, value_enum, default_value = "double")]
        numeric: Numeric,
        #[arg(long)]
        prune: bool,
        #[command(flatten)]
        opt: OptArgs,
    },
    /// Time several modes across population sizes and write CSV
    Bench {
        file: PathBuf,
        /// Comma-separated population sizes applied to every population
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        pops: Vec<u64>,
        #[arg(long, value_delimiter = ',', default_value = "interpret-ir,compiled,compiled-optimized")]
        modes: Vec<String>,
        #[command(flatten)]
        order: OrderArgs,
        #[arg(long, value_enum, default_value = "log")]
        numeric: Numeric,
        #[arg(long)]
        prune: bool,
        /// Report the median of this many runs per cell
        #[arg(long, default_value_t = 1)]
        repeat: usize,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Output file; stdout when absent
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ModelArgs {
    file: PathBuf,
    /// Population size override, e.g. --pop x=5 (repeatable)
    #[arg(long = "pop", value_parser = parse_pop)]
    pops: Vec<(String, u64)>,
}

#[derive(Args)]
struct OrderArgs {
    /// greedy, minloops, or a comma-separated predicate list
    #[arg(long, default_value = "minloops")]
    order: String,
    #[arg(long, default_value_t = DEFAULT_SEARCH_BUDGET)]
    search_budget: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl OrderArgs {
    fn strategy(&self) -> OrderStrategy {
        OrderStrategy::parse(&self.order, self.search_budget, self.seed)
    }
}

#[derive(Args)]
struct OptArgs {
    /// Build with the optimization flag (default)
    #[arg(long, overrides_with = "no_opt")]
    opt: bool,
    #[arg(long = "no-opt")]
    no_opt: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Numeric {
    Double,
    Log,
}

impl From<Numeric> for NumericMode {
    fn from(n: Numeric) -> Self {
        match n {
            Numeric::Double => NumericMode::Linear,
            Numeric::Log => NumericMode::LogSpace,
        }
    }
}

fn parse_pop(s: &str) -> std::result::Result<(String, u64), String> {
    let (name, n) = s.split_once('=').ok_or_else(|| format!("expected <lvar>=<n>, got {s:?}"))?;
    let n = n.trim().parse().map_err(|_| format!("bad population size in {s:?}"))?;
    Ok((name.trim().to_string(), n))
}

fn read_model(path: &Path) -> Result<Model> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
    parse_model(&text)
}

/// Parses, applies size overrides and shatters on the file's observations.
fn load(args: &ModelArgs) -> Result<Mln> {
    let model = read_model(&args.file)?;
    let m = model.mln.with_sizes(&args.pops)?;
    shatter(&m, &model.observations)
}

fn print_value(v: PartitionValue) {
    match v {
        PartitionValue::Linear(z) => println!("Z {z}"),
        PartitionValue::LogSpace(l) => println!("lnZ {l}"),
    }
}

fn linear_checked(v: PartitionValue, mode: NumericMode) -> Result<PartitionValue> {
    match mode {
        NumericMode::Linear => v.to_linear(),
        NumericMode::LogSpace => Ok(v.to_log()),
    }
}

fn program(m: &Mln, order: &OrderArgs, prune: bool) -> Result<codegen::Program> {
    let p = codegen::compile(m, &order.strategy().resolve(m))?;
    Ok(if prune { codegen::prune(&p) } else { p })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ground { model, force } => {
            let m = load(&model)?;
            let oracle = if force { GroundOracle::forced() } else { GroundOracle::default() };
            let z = oracle.partition(&m)?;
            println!("Z {}", z.linear());
            println!("lnZ {}", z.ln());
        }
        Command::Eval { model, order, numeric, stats } => {
            let m = load(&model)?;
            let mode = NumericMode::from(numeric);
            let c = Circuit::build(&m, &order.strategy().resolve(&m))?;
            let e = evaluate(&c, EngineOptions { mode, cache: true })?;
            print_value(linear_checked(e.value, mode)?);
            if stats {
                println!("nodes {}", e.nodes);
                println!("cache_hits {}", e.cache.hits);
                println!("cache_misses {}", e.cache.misses);
                println!("plan_s {:.6}", e.plan_time.as_secs_f64());
                println!("eval_s {:.6}", e.eval_time.as_secs_f64());
            }
        }
        Command::Compile { model, order, numeric, prune, output } => {
            let m = load(&model)?;
            let p = program(&m, &order, prune)?;
            let src = emit(&p, &EmitterConfig { mode: numeric.into(), ..EmitterConfig::default() })?;
            std::fs::write(&output, src)
                .map_err(|e| Error::Invalid(format!("cannot write {}: {e}", output.display())))?;
            eprintln!(
                "wrote {} ({} statements, loop depth {})",
                output.display(),
                p.statement_count(),
                p.loop_depth()
            );
        }
        Command::Run { model, order, numeric, prune, opt } => {
            let m = load(&model)?;
            let mode = NumericMode::from(numeric);
            let p = program(&m, &order, prune)?;
            let src = emit(&p, &EmitterConfig { mode, ..EmitterConfig::default() })?;
            let tc = ToolchainConfig::from_env().with_optimization(!opt.no_opt || opt.opt);
            let out = build_and_run(&src, &tc)?;
            print_value(linear_checked(out.value, mode)?);
        }
        Command::Bench { file, pops, modes, order, numeric, prune, repeat, jobs, csv } => {
            let model = read_model(&file)?;
            let modes = modes.iter().map(|s| s.parse()).collect::<Result<Vec<BenchMode>>>()?;
            let cfg = BenchConfig {
                pops,
                modes,
                numeric: numeric.into(),
                order: order.strategy(),
                prune,
                repeat,
                jobs,
                toolchain: ToolchainConfig::from_env(),
            };
            let network = file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let records = run_bench(&network, &model, &cfg)?;
            let text = to_csv(&records);
            match csv {
                Some(path) => std::fs::write(&path, text)
                    .map_err(|e| Error::Invalid(format!("cannot write {}: {e}", path.display())))?,
                None => print!("{text}"),
            }
            let worst = max_disagreement(&records);
            if worst > 1e-6 {
                eprintln!("warning: lnZ disagrees across modes by {worst:e} (relative)");
            }
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } => 2,
        Error::Overflow(_) => 3,
        Error::Toolchain(_) | Error::Contract(_) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::Overflow(_)) {
                eprintln!("hint: --numeric log avoids overflow");
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
