//! Building and running emitted programs with an external C compiler.

use std::process::Command;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::numeric::PartitionValue;

pub const ENV_VAR: &str = "LIFTC_TOOLCHAIN";
pub const DEFAULT_TEMPLATE: &str = "cc {opt} -o {out} {src} -lm";
pub const DEFAULT_OPT: &str = "-O3";

/// How to turn a source file into an executable. The template is split on
/// whitespace and `{src}`, `{out}` and `{opt}` are substituted per word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToolchainConfig {
    pub template: String,
    pub opt_flag: String,
    pub optimize: bool,
}

impl Default for ToolchainConfig {
    fn default() -> Self {
        Self {
            template: DEFAULT_TEMPLATE.into(),
            opt_flag: DEFAULT_OPT.into(),
            optimize: true,
        }
    }
}

impl ToolchainConfig {
    /// Reads `LIFTC_TOOLCHAIN`: either a full template containing `{src}`
    /// or a compiler command used in place of `cc`.
    pub fn from_env() -> Self {
        match std::env::var(ENV_VAR) {
            Ok(v) if !v.trim().is_empty() => Self::from_spec(&v),
            _ => Self::default(),
        }
    }

    pub fn from_spec(spec: &str) -> Self {
        let template = if spec.contains("{src}") {
            spec.to_string()
        } else {
            format!("{} {{opt}} -o {{out}} {{src}} -lm", spec.trim())
        };
        Self {
            template,
            ..Self::default()
        }
    }

    pub fn with_optimization(mut self, on: bool) -> Self {
        self.optimize = on;
        self
    }

    fn command(&self, src: &str, out: &str) -> Result<Command> {
        let opt = if self.optimize { self.opt_flag.as_str() } else { "" };
        let words: Vec<String> = self
            .template
            .split_whitespace()
            .map(|w| w.replace("{src}", src).replace("{out}", out).replace("{opt}", opt))
            .filter(|w| !w.is_empty())
            .collect();
        let (prog, args) = words
            .split_first()
            .ok_or_else(|| Error::Toolchain("empty toolchain command".into()))?;
        let mut cmd = Command::new(prog);
        cmd.args(args);
        Ok(cmd)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RunOutput {
    pub value: PartitionValue,
    pub compile_time: Duration,
    pub run_time: Duration,
}

/// Parses the single `Z <value>` or `lnZ <value>` line a program prints.
pub fn parse_contract_line(stdout: &str) -> Result<PartitionValue> {
    let line = stdout.trim();
    let bad = || Error::Toolchain(format!("unexpected program output: {line:?}"));
    let (label, value) = line.split_once(' ').ok_or_else(bad)?;
    let v: f64 = value.trim().parse().map_err(|_| bad())?;
    match label {
        "Z" => Ok(PartitionValue::Linear(v)),
        "lnZ" => Ok(PartitionValue::LogSpace(v)),
        _ => Err(bad()),
    }
}

/// Compiles `source` in a fresh scratch directory, runs the binary and reads its result.
pub fn build_and_run(source: &str, toolchain: &ToolchainConfig) -> Result<RunOutput> {
    let dir = tempfile::tempdir()?;
    let src = dir.path().join("z.c");
    let exe = dir.path().join("z");
    std::fs::write(&src, source)?;
    let mut cmd = toolchain.command(&src.to_string_lossy(), &exe.to_string_lossy())?;
    let start = Instant::now();
    let built = cmd
        .output()
        .map_err(|e| Error::Toolchain(format!("cannot start toolchain ({}): {e}", toolchain.template)))?;
    let compile_time = start.elapsed();
    if !built.status.success() {
        return Err(Error::Toolchain(format!(
            "toolchain exited with {}: {}",
            built.status,
            String::from_utf8_lossy(&built.stderr).trim()
        )));
    }
    let start = Instant::now();
    let ran = Command::new(&exe)
        .output()
        .map_err(|e| Error::Toolchain(format!("cannot run compiled program: {e}")))?;
    let run_time = start.elapsed();
    if !ran.status.success() {
        return Err(Error::Toolchain(format!(
            "compiled program exited with {}: {}",
            ran.status,
            String::from_utf8_lossy(&ran.stderr).trim()
        )));
    }
    Ok(RunOutput {
        value: parse_contract_line(&String::from_utf8_lossy(&ran.stdout))?,
        compile_time,
        run_time,
    })
}
