//! Admissible degree increments: solutions of `C(N, l) = C(n-1+k, k)` with
//! `N >= n-1+l`.

use num::bigint::BigUint;
use num::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{invalid, Result};

/// Exact binomial coefficient, zero when `b > a`.
pub fn binom(a: u64, b: u64) -> BigUint {
    if b > a {
        return BigUint::zero();
    }
    let b = b.min(a - b);
    let mut acc = BigUint::one();
    for i in 0..b {
        acc *= a - i;
        acc /= i + 1;
    }
    acc
}

/// Binomial coefficient when it fits in 64 bits.
pub fn binom_u64(a: u64, b: u64) -> Option<u64> {
    binom(a, b).to_u64()
}

fn ser_big<S: Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v.to_u64() {
        Some(x) => s.serialize_u64(x),
        None => s.serialize_str(&v.to_string()),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IncrementSolution {
    pub l: u64,
    #[serde(rename = "N")]
    pub big_n: u64,
    #[serde(serialize_with = "ser_big")]
    pub m: BigUint,
    /// Whether `N >= n-1+l` holds.
    pub dimension_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IncrementReport {
    pub n: u64,
    pub k: u64,
    #[serde(serialize_with = "ser_big")]
    pub m: BigUint,
    pub solutions: Vec<IncrementSolution>,
    /// Integer solutions of the binomial equation that violate `N >= n-1+l`.
    pub rejected: Vec<IncrementSolution>,
}

impl IncrementReport {
    pub fn increments(&self) -> Vec<u64> {
        self.solutions.iter().map(|s| s.l).collect()
    }

    pub fn ambient_for(&self, l: u64) -> Option<u64> {
        self.solutions.iter().find(|s| s.l == l).map(|s| s.big_n)
    }
}

/// Smallest `N >= l` with `C(N, l) >= m`, by bisection.
fn solve_binomial(l: u64, m: &BigUint) -> Option<u64> {
    let mut lo = l;
    let mut hi = l.max(m.to_u64()?);
    if binom(hi, l) < *m {
        return None;
    }
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if binom(mid, l) < *m {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    (binom(lo, l) == *m).then_some(lo)
}

/// All admissible increments `l in 1..=k` for the pair `(n, k)`.
pub fn admissible_increments(n: u64, k: u64) -> Result<IncrementReport> {
    if n < 2 {
        return invalid(format!("source dimension must be at least 2, got {n}"));
    }
    if k < 1 {
        return invalid("order must be at least 1");
    }
    let m = binom(n - 1 + k, k);
    let mut solutions = Vec::new();
    let mut rejected = Vec::new();
    for l in 1..=k {
        let Some(big_n) = solve_binomial(l, &m) else {
            continue;
        };
        let sol = IncrementSolution {
            l,
            big_n,
            m: m.clone(),
            dimension_ok: big_n >= n - 1 + l,
        };
        if sol.dimension_ok {
            solutions.push(sol);
        } else {
            rejected.push(sol);
        }
    }
    Ok(IncrementReport {
        n,
        k,
        m,
        solutions,
        rejected,
    })
}
