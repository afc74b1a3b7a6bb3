//! Benchmark sweeps over population sizes and evaluation modes, written as CSV.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::codegen::{self, build_and_run, emit, interpret, EmitterConfig, ToolchainConfig};
use crate::engine::{evaluate, EngineOptions, NumericMode};
use crate::circuit::Circuit;
use crate::error::{invalid, Error, Result};
use crate::heuristics::OrderStrategy;
use crate::mln::Mln;
use crate::oracle::ground_partition;
use crate::parse::Model;
use crate::shatter::shatter;

pub const CSV_HEADER: &str = "network,pop,mode,gen_s,cc_s,run_s,lnZ,error";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BenchMode {
    Oracle,
    Engine,
    InterpretIr,
    Compiled,
    CompiledOptimized,
}

impl BenchMode {
    pub const ALL: [BenchMode; 5] = [
        BenchMode::Oracle,
        BenchMode::Engine,
        BenchMode::InterpretIr,
        BenchMode::Compiled,
        BenchMode::CompiledOptimized,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchMode::Oracle => "oracle",
            BenchMode::Engine => "engine",
            BenchMode::InterpretIr => "interpret-ir",
            BenchMode::Compiled => "compiled",
            BenchMode::CompiledOptimized => "compiled-optimized",
        }
    }
}

impl fmt::Display for BenchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BenchMode::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| Error::Invalid(format!("unknown mode {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub network: String,
    pub pop: u64,
    pub mode: BenchMode,
    pub gen_s: f64,
    pub cc_s: f64,
    pub run_s: f64,
    pub ln_z: Option<f64>,
    pub error: Option<String>,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl BenchRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.6},{:.6},{:.6},{},{}",
            csv_field(&self.network),
            self.pop,
            self.mode,
            self.gen_s,
            self.cc_s,
            self.run_s,
            self.ln_z.map(|v| v.to_string()).unwrap_or_default(),
            csv_field(self.error.as_deref().unwrap_or("")),
        )
    }
}

pub fn to_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub pops: Vec<u64>,
    pub modes: Vec<BenchMode>,
    pub numeric: NumericMode,
    pub order: OrderStrategy,
    pub prune: bool,
    pub repeat: usize,
    pub jobs: usize,
    pub toolchain: ToolchainConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            pops: vec![10, 100],
            modes: vec![BenchMode::InterpretIr, BenchMode::Compiled],
            numeric: NumericMode::LogSpace,
            order: OrderStrategy::MinLoops {
                budget: crate::heuristics::DEFAULT_SEARCH_BUDGET,
                seed: 1,
            },
            prune: true,
            repeat: 1,
            jobs: 1,
            toolchain: ToolchainConfig::from_env(),
        }
    }
}

#[derive(Clone, Copy, Default)]
struct Timing {
    gen: Duration,
    cc: Duration,
    run: Duration,
}

fn program(m: &Mln, cfg: &BenchConfig) -> Result<codegen::Program> {
    let p = codegen::compile(m, &cfg.order.resolve(m))?;
    Ok(if cfg.prune { codegen::prune(&p) } else { p })
}

fn run_once(m: &Mln, mode: BenchMode, cfg: &BenchConfig) -> Result<(f64, Timing)> {
    let mut t = Timing::default();
    let start = Instant::now();
    let value = match mode {
        BenchMode::Oracle => {
            let v = ground_partition(m)?;
            t.run = start.elapsed();
            v
        }
        BenchMode::Engine => {
            let c = Circuit::build(m, &cfg.order.resolve(m))?;
            t.gen = start.elapsed();
            let e = evaluate(&c, EngineOptions { mode: cfg.numeric, cache: true })?;
            t.run = e.eval_time;
            e.value
        }
        BenchMode::InterpretIr => {
            let p = program(m, cfg)?;
            t.gen = start.elapsed();
            let s = Instant::now();
            let v = interpret(&p, cfg.numeric)?;
            t.run = s.elapsed();
            v
        }
        BenchMode::Compiled | BenchMode::CompiledOptimized => {
            let p = program(m, cfg)?;
            let source = emit(&p, &EmitterConfig { mode: cfg.numeric, ..EmitterConfig::default() })?;
            t.gen = start.elapsed();
            let tc = cfg.toolchain.clone().with_optimization(mode == BenchMode::CompiledOptimized);
            let out = build_and_run(&source, &tc)?;
            t.cc = out.compile_time;
            t.run = out.run_time;
            out.value
        }
    };
    let ln = value.ln();
    if ln.is_nan() {
        return Err(Error::Overflow("result is NaN".into()));
    }
    if cfg.numeric == NumericMode::Linear && !value.linear().is_finite() {
        return Err(Error::Overflow("Z is not finite in double precision".into()));
    }
    Ok((ln, t))
}

fn median(mut xs: Vec<Duration>) -> f64 {
    xs.sort();
    xs[xs.len() / 2].as_secs_f64()
}

fn cell(network: &str, model: &Model, pop: u64, mode: BenchMode, cfg: &BenchConfig) -> BenchRecord {
    let mut record = BenchRecord {
        network: network.to_string(),
        pop,
        mode,
        gen_s: 0.0,
        cc_s: 0.0,
        run_s: 0.0,
        ln_z: None,
        error: None,
    };
    let m = match shatter(&model.mln.with_uniform_size(pop), &model.observations) {
        Ok(m) => m,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    let mut timings = Vec::new();
    for _ in 0..cfg.repeat.max(1) {
        match run_once(&m, mode, cfg) {
            Ok((ln, t)) => {
                record.ln_z = Some(ln);
                timings.push(t);
            }
            Err(e) => {
                record.error = Some(e.to_string());
                record.ln_z = None;
                return record;
            }
        }
    }
    record.gen_s = median(timings.iter().map(|t| t.gen).collect());
    record.cc_s = median(timings.iter().map(|t| t.cc).collect());
    record.run_s = median(timings.iter().map(|t| t.run).collect());
    record
}

/// One record per (population, mode), in sweep order. Failures become rows
/// carrying an error message.
pub fn run_bench(network: &str, model: &Model, cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    if cfg.pops.is_empty() {
        return invalid("no population sizes given");
    }
    if cfg.modes.is_empty() {
        return invalid("no modes given");
    }
    let cells: Vec<(u64, BenchMode)> = cfg
        .pops
        .iter()
        .flat_map(|&p| cfg.modes.iter().map(move |&m| (p, m)))
        .collect();
    if cfg.jobs <= 1 {
        return Ok(cells.iter().map(|&(p, m)| cell(network, model, p, m, cfg)).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Invalid(format!("cannot start {} workers: {e}", cfg.jobs)))?;
    Ok(pool.install(|| cells.par_iter().map(|&(p, m)| cell(network, model, p, m, cfg)).collect()))
}

/// Largest relative lnZ disagreement among successful rows of each population.
pub fn max_disagreement(records: &[BenchRecord]) -> f64 {
    let mut worst = 0.0f64;
    for a in records {
        for b in records.iter().filter(|b| b.pop == a.pop && b.network == a.network) {
            if let (Some(x), Some(y)) = (a.ln_z, b.ln_z) {
                worst = worst.max(crate::numeric::rel_diff(x, y));
            }
        }
    }
    worst
}
