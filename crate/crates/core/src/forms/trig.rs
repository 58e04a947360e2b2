use std::collections::BTreeMap;
use std::f64::consts::PI;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Algebra, Field, GridField, Sample};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Cos,
    Sin,
}

/// Finite sum of `a · cos(m·x)` and `a · sin(m·x)` with rational `a` and
/// integer frequency vectors `m`.
///
/// Keys are canonical: the first nonzero entry of `m` is positive and there
/// is no `sin` term at `m = 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TrigPoly {
    n: usize,
    terms: BTreeMap<(Vec<i64>, Phase), BigRational>,
}

pub(crate) fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn canonical(mut freq: Vec<i64>, phase: Phase, amp: BigRational) -> Option<((Vec<i64>, Phase), BigRational)> {
    match freq.iter().find(|&&v| v != 0) {
        None => match phase {
            Phase::Cos => Some(((freq, phase), amp)),
            Phase::Sin => None,
        },
        Some(&first) if first < 0 => {
            freq.iter_mut().for_each(|v| *v = -*v);
            let amp = if phase == Phase::Sin { -amp } else { amp };
            Some(((freq, phase), amp))
        }
        Some(_) => Some(((freq, phase), amp)),
    }
}

impl TrigPoly {
    pub fn zero(n: usize) -> Self {
        TrigPoly {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: BigRational) -> Self {
        let mut p = TrigPoly::zero(n);
        p.push(vec![0; n], Phase::Cos, c);
        p
    }

    pub fn monomial(freq: Vec<i64>, phase: Phase, amp: BigRational) -> Self {
        let mut p = TrigPoly::zero(freq.len());
        p.push(freq, phase, amp);
        p
    }

    /// `cos(x_j)` with 0-based `j`.
    pub fn cos_axis(n: usize, j: usize) -> Self {
        let mut f = vec![0; n];
        f[j] = 1;
        TrigPoly::monomial(f, Phase::Cos, BigRational::one())
    }

    pub fn sin_axis(n: usize, j: usize) -> Self {
        let mut f = vec![0; n];
        f[j] = 1;
        TrigPoly::monomial(f, Phase::Sin, BigRational::one())
    }

    /// Adds `amp · phase(freq·x)` after canonicalizing the key.
    pub fn push(&mut self, freq: Vec<i64>, phase: Phase, amp: BigRational) {
        assert_eq!(freq.len(), self.n, "frequency length");
        if amp.is_zero() {
            return;
        }
        let Some((key, amp)) = canonical(freq, phase, amp) else {
            return;
        };
        match self.terms.entry(key) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(amp);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += amp;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[i64], Phase, &BigRational)> {
        self.terms.iter().map(|((f, p), a)| (f.as_slice(), *p, a))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest `|m|_inf` over the terms.
    pub fn bandwidth(&self) -> i64 {
        self.terms
            .keys()
            .flat_map(|(f, _)| f.iter().map(|v| v.abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms()
            .map(|(f, ph, a)| {
                let t: f64 = f.iter().zip(x).map(|(&m, &xi)| m as f64 * xi).sum();
                let v = match ph {
                    Phase::Cos => t.cos(),
                    Phase::Sin => t.sin(),
                };
                a.to_f64().unwrap_or(f64::NAN) * v
            })
            .sum()
    }

    /// Random polynomial with `nterms` terms, frequencies in
    /// `[-max_freq, max_freq]` and amplitudes `p/q` with `|p| <= 6`, `q <= 4`.
    pub fn random<R: Rng + ?Sized>(n: usize, nterms: usize, max_freq: i64, rng: &mut R) -> Self {
        let mut p = TrigPoly::zero(n);
        for _ in 0..nterms {
            let freq: Vec<i64> = (0..n).map(|_| rng.gen_range(-max_freq..=max_freq)).collect();
            let phase = if rng.gen_bool(0.5) { Phase::Cos } else { Phase::Sin };
            let mut num = rng.gen_range(-6..=6);
            if num == 0 {
                num = 1;
            }
            let den = rng.gen_range(1..=4);
            p.push(freq, phase, rat(num, den));
        }
        p
    }

    fn mul_terms(&self, other: &TrigPoly) -> TrigPoly {
        let half = rat(1, 2);
        let mut out = TrigPoly::zero(self.n);
        for ((fa, pa), a) in &self.terms {
            for ((fb, pb), b) in &other.terms {
                let c = a * b * &half;
                let plus: Vec<i64> = fa.iter().zip(fb).map(|(x, y)| x + y).collect();
                let minus: Vec<i64> = fa.iter().zip(fb).map(|(x, y)| x - y).collect();
                match (pa, pb) {
                    (Phase::Cos, Phase::Cos) => {
                        out.push(minus, Phase::Cos, c.clone());
                        out.push(plus, Phase::Cos, c);
                    }
                    (Phase::Sin, Phase::Sin) => {
                        out.push(minus, Phase::Cos, c.clone());
                        out.push(plus, Phase::Cos, -c);
                    }
                    (Phase::Sin, Phase::Cos) => {
                        out.push(plus, Phase::Sin, c.clone());
                        out.push(minus, Phase::Sin, c);
                    }
                    (Phase::Cos, Phase::Sin) => {
                        out.push(plus, Phase::Sin, c.clone());
                        out.push(minus, Phase::Sin, -c);
                    }
                }
            }
        }
        out
    }

    /// Composition with `x ↦ shift + A x` for an integer matrix `A` and a
    /// shift that is an integer multiple of `pi` per axis (given as those
    /// integers).
    pub fn compose_affine(&self, a: &[Vec<i64>], shift_pi: &[i64]) -> TrigPoly {
        let n = self.n;
        let mut out = TrigPoly::zero(n);
        for ((f, ph), amp) in &self.terms {
            // m·(s + A x) = m·s + (A^T m)·x
            let new_f: Vec<i64> = (0..n).map(|j| (0..n).map(|i| f[i] * a[i][j]).sum()).collect();
            let s: i64 = f.iter().zip(shift_pi).map(|(m, s)| m * s).sum();
            let amp = if s.rem_euclid(2) == 1 { -amp.clone() } else { amp.clone() };
            out.push(new_f, *ph, amp);
        }
        out
    }
}

impl Field for TrigPoly {
    type Scalar = BigRational;
    type Shape = usize;
    type Prepared = TrigPoly;

    fn shape(&self) -> usize {
        self.n
    }

    fn zero(shape: &usize) -> Self {
        TrigPoly::zero(*shape)
    }

    fn nvars(&self) -> usize {
        self.n
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_assign(&mut self, other: &Self) {
        for ((f, p), a) in &other.terms {
            self.push(f.clone(), *p, a.clone());
        }
    }

    fn add_scaled_int(&mut self, other: &Self, c: i64) {
        if c == 0 {
            return;
        }
        let c = BigRational::from_integer(BigInt::from(c));
        for ((f, p), a) in &other.terms {
            self.push(f.clone(), *p, a * &c);
        }
    }

    fn scale(&mut self, c: &BigRational) {
        if c.is_zero() {
            self.terms.clear();
            return;
        }
        for a in self.terms.values_mut() {
            *a *= c;
        }
    }

    fn derivative(&self, alpha: &[u32]) -> Self {
        assert_eq!(alpha.len(), self.n, "derivative multi-index length");
        let order: u32 = alpha.iter().sum();
        let mut out = TrigPoly::zero(self.n);
        for ((f, ph), a) in &self.terms {
            let mut factor = BigInt::one();
            for (&m, &e) in f.iter().zip(alpha) {
                factor *= BigInt::from(m).pow(e);
            }
            if factor.is_zero() {
                continue;
            }
            // ∂^alpha e^{i m·x} = i^|alpha| m^alpha e^{i m·x}
            let (phase, sign) = match (order % 4, ph) {
                (0, p) => (*p, 1),
                (1, Phase::Cos) => (Phase::Sin, -1),
                (1, Phase::Sin) => (Phase::Cos, 1),
                (2, p) => (*p, -1),
                (_, Phase::Cos) => (Phase::Sin, 1),
                (_, Phase::Sin) => (Phase::Cos, -1),
            };
            let amp = a * BigRational::from_integer(factor * sign);
            out.terms.insert((f.clone(), phase), amp);
        }
        out
    }

    fn prepare(&self) -> TrigPoly {
        self.clone()
    }

    fn differential_sum(shape: &usize, terms: &[(i64, &[u32], &TrigPoly)]) -> Self {
        let mut out = TrigPoly::zero(*shape);
        for (c, alpha, f) in terms {
            out.add_scaled_int(&f.derivative(alpha), *c);
        }
        out
    }

    fn max_abs(&self) -> f64 {
        self.terms
            .values()
            .map(|a| a.abs().to_f64().unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }
}

impl Algebra for TrigPoly {
    fn mul(&self, other: &Self) -> Self {
        self.mul_terms(other)
    }

    fn mean(&self) -> BigRational {
        self.terms
            .get(&(vec![0; self.n], Phase::Cos))
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    /// Orthogonality of the canonical basis: `cos` and `sin` at nonzero
    /// frequency have mean square `1/2`, the constant has `1`.
    fn inner(&self, other: &Self) -> BigRational {
        let half = rat(1, 2);
        let mut acc = BigRational::zero();
        for (key, a) in &self.terms {
            if let Some(b) = other.terms.get(key) {
                if key.0.iter().all(|&v| v == 0) {
                    acc += a * b;
                } else {
                    acc += a * b * &half;
                }
            }
        }
        acc
    }
}

impl Sample for TrigPoly {
    fn sample(&self, p: usize) -> GridField {
        let n = self.n;
        let total = p.pow(n as u32);
        let cos_t: Vec<f64> = (0..p).map(|r| (2.0 * PI * r as f64 / p as f64).cos()).collect();
        let sin_t: Vec<f64> = (0..p).map(|r| (2.0 * PI * r as f64 / p as f64).sin()).collect();
        let mut data = vec![0.0; total];
        let pi = p as i64;
        for ((f, ph), a) in &self.terms {
            let amp = a.to_f64().unwrap_or(f64::NAN);
            let mut idx = vec![0usize; n];
            for v in data.iter_mut() {
                let r: i64 = f.iter().zip(&idx).map(|(&m, &j)| m * j as i64).sum();
                let r = r.rem_euclid(pi) as usize;
                *v += amp
                    * match ph {
                        Phase::Cos => cos_t[r],
                        Phase::Sin => sin_t[r],
                    };
                // row-major increment, last axis fastest
                for ax in (0..n).rev() {
                    idx[ax] += 1;
                    if idx[ax] < p {
                        break;
                    }
                    idx[ax] = 0;
                }
            }
        }
        GridField::from_samples(n, p, data).expect("sampled grid is valid")
    }
}
