//! Scalar arithmetic shared by the evaluator, the IR interpreter and the
//! emitted programs. The emitted C preamble mirrors these functions
//! operation for operation.

use crate::error::{Error, Result};

/// Largest `n` for which binomials are computed in exact integer arithmetic.
pub const EXACT_CHOOSE_LIMIT: u64 = 60;

fn choose_exact(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut c: u64 = 1;
    for j in 1..=k {
        // c * (n - k + j) stays below 2^63 for n <= 60.
        c = c * (n - k + j) / j;
    }
    c
}

/// Binomial coefficient as a double.
pub fn choose(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    if n <= EXACT_CHOOSE_LIMIT {
        choose_exact(n, k) as f64
    } else {
        log_choose_unchecked(n, k).exp()
    }
}

fn log_choose_unchecked(n: u64, k: u64) -> f64 {
    if n <= EXACT_CHOOSE_LIMIT {
        (choose_exact(n, k) as f64).ln()
    } else {
        log_factorial(n) - log_factorial(k) - log_factorial(n - k)
    }
}

thread_local! {
    static LOG_FACTORIALS: std::cell::RefCell<Vec<f64>> = const { std::cell::RefCell::new(Vec::new()) };
}

/// `lgamma(n + 1)`, tabulated per thread.
pub fn log_factorial(n: u64) -> f64 {
    LOG_FACTORIALS.with(|t| {
        let mut t = t.borrow_mut();
        let n = n as usize;
        if n >= t.len() {
            let target = (n + 1).next_power_of_two().max(64);
            let start = t.len();
            t.extend((start..target).map(|j| libm::lgamma(j as f64 + 1.0)));
        }
        t[n]
    })
}

/// Natural log of `C(n, k)`; exact integer path for `n <= 60`, log-gamma above.
pub fn log_choose(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(Error::Invalid(format!("choose({n}, {k}): k out of range")));
    }
    Ok(log_choose_unchecked(n, k))
}

/// `ln(e^a + e^b)`, shifting by the larger operand.
pub fn log_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `ln(b^k)` given `ln b`. `k = 0` gives 0 even for `b = 0`.
pub fn log_pow(log_base: f64, k: u64) -> f64 {
    if k == 0 {
        0.0
    } else {
        log_base * k as f64
    }
}

pub fn pow(base: f64, k: u64) -> f64 {
    base.powf(k as f64)
}

/// A partition-function value, held either directly or as its natural log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PartitionValue {
    Linear(f64),
    LogSpace(f64),
}

impl PartitionValue {
    pub fn ln(self) -> f64 {
        match self {
            PartitionValue::Linear(v) => v.ln(),
            PartitionValue::LogSpace(l) => l,
        }
    }

    pub fn linear(self) -> f64 {
        match self {
            PartitionValue::Linear(v) => v,
            PartitionValue::LogSpace(l) => l.exp(),
        }
    }

    pub fn to_log(self) -> PartitionValue {
        PartitionValue::LogSpace(self.ln())
    }

    /// Converts to linear form, failing instead of producing infinity.
    pub fn to_linear(self) -> Result<PartitionValue> {
        let v = self.linear();
        if v.is_finite() {
            Ok(PartitionValue::Linear(v))
        } else {
            Err(Error::Overflow(format!("exp({}) is not representable", self.ln())))
        }
    }
}

/// Relative difference `|a - b| / max(|a|, |b|)`, zero when both are zero.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs())
}
