//! C source emission. The linear dialect computes `Z` in doubles; the
//! log-space dialect reads the same program over natural logarithms.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::ir::{walk, Expr, Program, Stmt, Subroutine};
use crate::engine::NumericMode;
use crate::error::{Error, Result};
use crate::size::SizeExpr;

pub const DIALECTS: &[&str] = &["c99"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmitterConfig {
    pub mode: NumericMode,
    /// Significant digits of the printed result.
    pub precision: usize,
    pub dialect: String,
}

impl Default for EmitterConfig {
    fn default() -> Self {
        Self {
            mode: NumericMode::Linear,
            precision: 17,
            dialect: "c99".into(),
        }
    }
}

impl EmitterConfig {
    pub fn log_space() -> Self {
        Self {
            mode: NumericMode::LogSpace,
            ..Self::default()
        }
    }
}

const PREAMBLE: &str = r#"#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

static double *log_fact_table_;
static long long log_fact_len_;

static double log_fact_(long long n) {
    if (n >= log_fact_len_) {
        long long m = log_fact_len_ ? log_fact_len_ : 64, j;
        while (m <= n) m *= 2;
        log_fact_table_ = realloc(log_fact_table_, (size_t)m * sizeof(double));
        if (!log_fact_table_) {
            fprintf(stderr, "out of memory\n");
            exit(3);
        }
        for (j = log_fact_len_; j < m; j++) log_fact_table_[j] = lgamma((double)j + 1.0);
        log_fact_len_ = m;
    }
    return log_fact_table_[n];
}

static double choose_(long long n, long long k) {
    if (k < 0 || k > n) return 0.0;
    if (n <= 60) {
        unsigned long long c = 1, j;
        if (k > n - k) k = n - k;
        for (j = 1; j <= (unsigned long long)k; j++) c = c * ((unsigned long long)(n - k) + j) / j;
        return (double)c;
    }
    return exp(log_fact_(n) - log_fact_(k) - log_fact_(n - k));
}

static double log_choose_(long long n, long long k) {
    if (k < 0 || k > n) return -INFINITY;
    if (n <= 60) return log(choose_(n, k));
    return log_fact_(n) - log_fact_(k) - log_fact_(n - k);
}

static double log_add_(double a, double b) {
    double m = a > b ? a : b;
    if (m == -INFINITY) return m;
    return m + log(exp(a - m) + exp(b - m));
}

typedef struct {
    long long *keys;
    double *vals;
    unsigned char *used;
    size_t cap, len;
} memo_table;

static size_t memo_slot_(const memo_table *t, int nk, const long long *key) {
    unsigned long long h = 0x9e3779b97f4a7c15ULL;
    int j;
    size_t i;
    for (j = 0; j < nk; j++) {
        h ^= (unsigned long long)key[j];
        h ^= h >> 33;
        h *= 0xff51afd7ed558ccdULL;
        h ^= h >> 33;
        h *= 0xc4ceb9fe1a85ec53ULL;
        h ^= h >> 33;
    }
    i = (size_t)h & (t->cap - 1);
    while (t->used[i] && memcmp(t->keys + i * nk, key, nk * sizeof(long long)) != 0) i = (i + 1) & (t->cap - 1);
    return i;
}

static int memo_find_(const memo_table *t, int nk, const long long *key, double *out) {
    size_t i;
    if (t->cap == 0) return 0;
    i = memo_slot_(t, nk, key);
    if (!t->used[i]) return 0;
    *out = t->vals[i];
    return 1;
}

static void memo_store_(memo_table *t, int nk, const long long *key, double v) {
    size_t i;
    if (2 * (t->len + 1) > t->cap) {
        memo_table g;
        g.cap = t->cap ? 2 * t->cap : 64;
        g.len = t->len;
        g.keys = malloc(g.cap * nk * sizeof(long long));
        g.vals = malloc(g.cap * sizeof(double));
        g.used = calloc(g.cap, 1);
        if (!g.keys || !g.vals || !g.used) {
            fprintf(stderr, "out of memory\n");
            exit(3);
        }
        for (i = 0; i < t->cap; i++) {
            if (t->used[i]) {
                size_t j = memo_slot_(&g, nk, t->keys + i * nk);
                g.used[j] = 1;
                memcpy(g.keys + j * nk, t->keys + i * nk, nk * sizeof(long long));
                g.vals[j] = t->vals[i];
            }
        }
        free(t->keys);
        free(t->vals);
        free(t->used);
        *t = g;
    }
    i = memo_slot_(t, nk, key);
    if (!t->used[i]) {
        t->used[i] = 1;
        memcpy(t->keys + i * nk, key, nk * sizeof(long long));
        t->len++;
    }
    t->vals[i] = v;
}
"#;

/// A double literal that reads back to the same value.
fn real(c: f64) -> String {
    if c.is_nan() {
        "NAN".into()
    } else if c == f64::INFINITY {
        "INFINITY".into()
    } else if c == f64::NEG_INFINITY {
        "(-INFINITY)".into()
    } else if c < 0.0 {
        format!("({c:e})")
    } else {
        format!("{c:e}")
    }
}

fn size(e: &SizeExpr) -> String {
    let mut parts = Vec::new();
    for (syms, c) in e.terms() {
        let mut factors: Vec<String> = syms.to_vec();
        if c != 1 || factors.is_empty() {
            factors.insert(0, format!("{c}LL"));
        }
        parts.push(factors.join(" * "));
    }
    if parts.is_empty() {
        "0LL".into()
    } else {
        format!("({})", parts.join(" + "))
    }
}

struct Emitter {
    log: bool,
}

impl Emitter {
    fn expr(&self, e: &Expr) -> String {
        match (e, self.log) {
            (Expr::Const(c), false) => real(*c),
            (Expr::Const(c), true) => real(c.ln()),
            (Expr::Var(v), _) => v.clone(),
            (Expr::Pow(b, k), false) => format!("pow({}, (double){})", self.expr(b), size(k)),
            (Expr::Pow(b, k), true) => format!("((double){} * {})", size(k), self.expr(b)),
            (Expr::Exp(w, k), false) => format!("exp({} * (double){})", real(*w), size(k)),
            (Expr::Exp(w, k), true) => format!("({} * (double){})", real(*w), size(k)),
            (Expr::Choose(n, k), false) => format!("choose_({}, {})", size(n), size(k)),
            (Expr::Choose(n, k), true) => format!("log_choose_({}, {})", size(n), size(k)),
            (Expr::Mul(a, b), false) => format!("({} * {})", self.expr(a), self.expr(b)),
            (Expr::Mul(a, b), true) => format!("({} + {})", self.expr(a), self.expr(b)),
            (Expr::Add(a, b), false) => format!("({} + {})", self.expr(a), self.expr(b)),
            (Expr::Add(a, b), true) => format!("log_add_({}, {})", self.expr(a), self.expr(b)),
            (Expr::Call(f, args), _) => {
                let a: Vec<String> = args.iter().map(size).collect();
                format!("{f}({})", a.join(", "))
            }
        }
    }

    fn block(&self, out: &mut String, stmts: &[Stmt], indent: usize) {
        let pad = "    ".repeat(indent);
        for s in stmts {
            match s {
                Stmt::Assign(v, e) => writeln!(out, "{pad}{v} = {};", self.expr(e)),
                Stmt::AccumInit(v) => writeln!(out, "{pad}{v} = {};", if self.log { "-INFINITY" } else { "0.0" }),
                Stmt::AccumAdd(v, e) if self.log => writeln!(out, "{pad}{v} = log_add_({v}, {});", self.expr(e)),
                Stmt::AccumAdd(v, e) => writeln!(out, "{pad}{v} += {};", self.expr(e)),
                Stmt::Loop { index, lower, upper, body } => {
                    let _ = writeln!(out, "{pad}for ({index} = {}; {index} <= {}; {index}++) {{", size(lower), size(upper));
                    self.block(out, body, indent + 1);
                    writeln!(out, "{pad}}}")
                }
            }
            .expect("write to string");
        }
    }

    fn declarations(&self, out: &mut String, stmts: &[Stmt], params: &[String]) {
        let mut doubles = BTreeSet::new();
        let mut ints = BTreeSet::new();
        walk(stmts, &mut |s| match s {
            Stmt::Assign(v, _) | Stmt::AccumInit(v) | Stmt::AccumAdd(v, _) => {
                doubles.insert(natural_key(v));
            }
            Stmt::Loop { index, .. } => {
                ints.insert(natural_key(index));
            }
        });
        let ints: Vec<String> = ints.into_iter().map(|(_, n)| n).filter(|n| !params.contains(n)).collect();
        if !doubles.is_empty() {
            let d: Vec<String> = doubles.into_iter().map(|(_, n)| n).collect();
            let _ = writeln!(out, "    double {};", d.join(", "));
        }
        if !ints.is_empty() {
            let _ = writeln!(out, "    long long {};", ints.join(", "));
        }
    }

    fn signature(s: &Subroutine) -> String {
        let params: Vec<String> = s.params.iter().map(|p| format!("long long {p}")).collect();
        let params = if params.is_empty() { "void".to_string() } else { params.join(", ") };
        format!("static double {}({params})", s.name)
    }

    fn subroutine(&self, out: &mut String, s: &Subroutine) {
        let nk = s.params.len().max(1);
        let key = if s.params.is_empty() { "0".to_string() } else { s.params.join(", ") };
        let _ = writeln!(out, "{} {{", Self::signature(s));
        let _ = writeln!(out, "    static memo_table memo;");
        let _ = writeln!(out, "    long long key[{nk}] = {{{key}}};");
        let _ = writeln!(out, "    double cached;");
        self.declarations(out, &s.body, &s.params);
        let _ = writeln!(out, "    if (memo_find_(&memo, {nk}, key, &cached)) return cached;");
        self.block(out, &s.body, 1);
        let _ = writeln!(out, "    memo_store_(&memo, {nk}, key, {});", s.result);
        let _ = writeln!(out, "    return {};", s.result);
        let _ = writeln!(out, "}}\n");
    }
}

/// Orders `v2` before `v10`.
fn natural_key(name: &str) -> ((String, u64), String) {
    let digits = name.trim_start_matches(|c: char| !c.is_ascii_digit());
    let stem = name[..name.len() - digits.len()].to_string();
    ((stem, digits.parse().unwrap_or(0)), name.to_string())
}

/// Emits a self-contained C program that prints `Z <value>` or `lnZ <value>`.
pub fn emit(p: &Program, cfg: &EmitterConfig) -> Result<String> {
    if !DIALECTS.contains(&cfg.dialect.as_str()) {
        return Err(Error::Invalid(format!(
            "unknown dialect '{}'; available: {}",
            cfg.dialect,
            DIALECTS.join(", ")
        )));
    }
    let e = Emitter {
        log: cfg.mode == NumericMode::LogSpace,
    };
    let mut out = String::from(PREAMBLE);
    out.push('\n');
    for s in &p.subroutines {
        let _ = writeln!(out, "{};", Emitter::signature(s));
    }
    if !p.subroutines.is_empty() {
        out.push('\n');
    }
    for s in &p.subroutines {
        e.subroutine(&mut out, s);
    }
    out.push_str("int main(void) {\n");
    e.declarations(&mut out, &p.body, &[]);
    e.block(&mut out, &p.body, 1);
    let label = if e.log { "lnZ" } else { "Z" };
    let _ = writeln!(out, "    printf(\"{label} %.{}g\\n\", {});", cfg.precision, p.result);
    out.push_str("    return 0;\n}\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_round_trip() {
        for c in [1.0, 0.2, -1.5, 1e-300, 123456.789] {
            assert_eq!(real(c).trim_matches(|ch| ch == '(' || ch == ')').parse::<f64>().unwrap(), c);
        }
        assert_eq!(size(&SizeExpr::constant(2).sub(&SizeExpr::symbol("i1"))), "(2LL + -1LL * i1)");
        assert_eq!(size(&SizeExpr::zero()), "0LL");
    }

    #[test]
    fn deterministic_and_dialect_checked() {
        let p = Program {
            subroutines: vec![],
            body: vec![Stmt::Assign("v1".into(), Expr::Exp(0.0, SizeExpr::constant(1)))],
            result: "v1".into(),
        };
        let a = emit(&p, &EmitterConfig::default()).unwrap();
        assert_eq!(a, emit(&p, &EmitterConfig::default()).unwrap());
        assert!(a.contains("printf(\"Z %.17g\\n\", v1);"));
        assert!(emit(&p, &EmitterConfig::log_space()).unwrap().contains("lnZ"));
        let bad = EmitterConfig {
            dialect: "fortran".into(),
            ..Default::default()
        };
        assert!(emit(&p, &bad).is_err());
    }
}
