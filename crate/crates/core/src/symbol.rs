//! Fourier symbols of the Hodge Laplacians and Legendre-Hadamard scans.
//!
//! With `∂^α ↦ (iξ)^α` the two factors of `(-1)^k` cancel, so the symbol of
//! `□̃` at `ξ` is the real symmetric matrix `S_{MI} = Σ_{α,β} C̃^{MI}_{ab} ξ^α ξ^β`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use num::{BigRational, One, ToPrimitive, Zero};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::multiindex::{enum_labels, Label};
use crate::operators::{box_coeff_tensor, restricted_coeff_tensor, OperatorSpec};

/// Integer polynomial in `ξ_1, ..., ξ_n`, keyed by exponent vector.
pub type Poly = BTreeMap<Vec<u32>, i64>;

/// Which Laplacian a symbol belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolKind {
    /// `□̃` on hybrid forms, labels in `I(N, q)`, `ξ` in the first `n` slots.
    Hybrid,
    /// `𝒯𝒯* + 𝒯*𝒯` on forms over `R^n`, labels in `I(n, q)`.
    Restricted,
}

/// Entries of a symbol as polynomials, before evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolPolynomials {
    pub kind: SymbolKind,
    pub q: usize,
    pub n: usize,
    pub labels: Vec<Label>,
    /// Nonzero entries keyed by `(row, column)` positions in `labels`.
    pub entries: BTreeMap<(usize, usize), Poly>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymbolMatrix {
    pub xi: Vec<BigRational>,
    pub labels: Vec<Label>,
    pub entries: Vec<Vec<BigRational>>,
}

fn add_term(p: &mut Poly, e: Vec<u32>, c: i64) {
    let slot = p.entry(e.clone()).or_insert(0);
    *slot += c;
    if *slot == 0 {
        p.remove(&e);
    }
}

fn eval_poly(p: &Poly, powers: &[Vec<BigRational>]) -> BigRational {
    let mut acc = BigRational::zero();
    for (e, c) in p {
        let mut term = BigRational::from_integer((*c).into());
        for (j, &d) in e.iter().enumerate() {
            term *= &powers[j][d as usize];
        }
        acc += term;
    }
    acc
}

impl SymbolPolynomials {
    pub fn build(spec: &OperatorSpec, q: usize, kind: SymbolKind) -> Result<Self> {
        let (tensor, dim) = match kind {
            SymbolKind::Hybrid => (box_coeff_tensor(spec, q)?, spec.ambient_dim()),
            SymbolKind::Restricted => (restricted_coeff_tensor(spec, q)?, spec.source_dim()),
        };
        let labels = enum_labels(dim, q)?;
        let pos: BTreeMap<Label, usize> = labels.iter().enumerate().map(|(i, l)| (*l, i)).collect();
        let alphas = spec.alphas();
        let mut entries: BTreeMap<(usize, usize), Poly> = BTreeMap::new();
        for (&(m, i, a, b), &c) in &tensor.entries {
            let e: Vec<u32> = alphas[a].iter().zip(&alphas[b]).map(|(x, y)| x + y).collect();
            let slot = entries.entry((pos[&m], pos[&i])).or_default();
            add_term(slot, e, c);
        }
        entries.retain(|_, p| !p.is_empty());
        Ok(SymbolPolynomials {
            kind,
            q,
            n: spec.source_dim(),
            labels,
            entries,
        })
    }

    /// The common diagonal polynomial when the symbol is a multiple of the
    /// identity.
    pub fn scalar(&self) -> Option<Poly> {
        let size = self.labels.len();
        if self.entries.keys().any(|(r, c)| r != c) {
            return None;
        }
        let first = self.entries.get(&(0, 0)).cloned().unwrap_or_default();
        (0..size)
            .all(|i| self.entries.get(&(i, i)).cloned().unwrap_or_default() == first)
            .then_some(first)
    }

    /// Evaluates at `ξ` given over the source variables.
    pub fn eval(&self, xi: &[BigRational]) -> Result<SymbolMatrix> {
        if xi.len() != self.n {
            return invalid(format!("frequency has length {}, expected {}", xi.len(), self.n));
        }
        let max_deg = self
            .entries
            .values()
            .flat_map(|p| p.keys().flatten().copied())
            .max()
            .unwrap_or(0) as usize;
        let powers: Vec<Vec<BigRational>> = xi
            .iter()
            .map(|x| {
                let mut v = vec![BigRational::one()];
                for d in 1..=max_deg {
                    let next = &v[d - 1] * x;
                    v.push(next);
                }
                v
            })
            .collect();
        let size = self.labels.len();
        let mut entries = vec![vec![BigRational::zero(); size]; size];
        for (&(r, c), p) in &self.entries {
            entries[r][c] = eval_poly(p, &powers);
        }
        Ok(SymbolMatrix {
            xi: xi.to_vec(),
            labels: self.labels.clone(),
            entries,
        })
    }
}

/// `ξ_1^4 + ξ_1^2 ξ_2^2 + ξ_2^4` style rendering.
pub fn format_poly(p: &Poly) -> String {
    if p.is_empty() {
        return "0".into();
    }
    let mut out = String::new();
    let mut terms: Vec<_> = p.iter().collect();
    terms.sort_by(|a, b| b.0.cmp(a.0));
    for (i, (e, &c)) in terms.into_iter().enumerate() {
        let mono: Vec<String> = e
            .iter()
            .enumerate()
            .filter(|(_, &d)| d > 0)
            .map(|(j, &d)| if d == 1 { format!("xi{}", j + 1) } else { format!("xi{}^{d}", j + 1) })
            .collect();
        let body = mono.join(" ");
        let sign = if c < 0 { "-" } else { "+" };
        if i == 0 {
            if c < 0 {
                out.push('-');
            }
        } else {
            let _ = write!(out, " {sign} ");
        }
        let mag = c.abs();
        match (mag, body.is_empty()) {
            (_, true) => {
                let _ = write!(out, "{mag}");
            }
            (1, false) => out.push_str(&body),
            _ => {
                let _ = write!(out, "{mag} {body}");
            }
        }
    }
    out
}

/// Polynomial map as `[{exponents, coefficient}]`.
pub fn poly_json(p: &Poly) -> serde_json::Value {
    serde_json::Value::Array(
        p.iter()
            .map(|(e, c)| serde_json::json!({"exponents": e, "coefficient": c}))
            .collect(),
    )
}

impl SymbolMatrix {
    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn is_symmetric(&self) -> bool {
        let s = self.size();
        (0..s).all(|i| (0..i).all(|j| self.entries[i][j] == self.entries[j][i]))
    }

    /// `Some(c)` when the matrix equals `c · Id`.
    pub fn scalar_value(&self) -> Option<BigRational> {
        let s = self.size();
        if s == 0 {
            return None;
        }
        let c = self.entries[0][0].clone();
        let ok = (0..s).all(|i| (0..s).all(|j| self.entries[i][j] == if i == j { c.clone() } else { BigRational::zero() }));
        ok.then_some(c)
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        let s = self.size();
        DMatrix::from_fn(s, s, |i, j| self.entries[i][j].to_f64().unwrap_or(f64::NAN))
    }

    /// `ζᵀ S ζ` exactly, for real rational `ζ`.
    pub fn quadratic_form(&self, zeta: &[BigRational]) -> BigRational {
        let mut acc = BigRational::zero();
        for (i, row) in self.entries.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if !v.is_zero() {
                    acc += &zeta[i] * v * &zeta[j];
                }
            }
        }
        acc
    }
}

fn check_hybrid_frequency(spec: &OperatorSpec, kind: SymbolKind, xi: &[BigRational]) -> Result<Vec<BigRational>> {
    let n = spec.source_dim();
    match kind {
        SymbolKind::Hybrid if xi.len() == spec.ambient_dim() => {
            if xi[n..].iter().any(|v| !v.is_zero()) {
                return invalid("hybrid symbols need frequencies supported in the first n slots");
            }
            Ok(xi[..n].to_vec())
        }
        _ if xi.len() == n => Ok(xi.to_vec()),
        _ => invalid(format!("frequency has length {}, expected {n}", xi.len())),
    }
}

/// The symbol of `□̃` at degree `q`. `ξ` has length `n` or `N`; in the
/// latter case the slots beyond `n` must vanish.
pub fn box_symbol(spec: &OperatorSpec, q: usize, xi: &[BigRational]) -> Result<SymbolMatrix> {
    let xi = check_hybrid_frequency(spec, SymbolKind::Hybrid, xi)?;
    SymbolPolynomials::build(spec, q, SymbolKind::Hybrid)?.eval(&xi)
}

/// The symbol of `𝒯𝒯* + 𝒯*𝒯` on `q`-forms over `R^n`.
pub fn restricted_symbol(spec: &OperatorSpec, q: usize, xi: &[BigRational]) -> Result<SymbolMatrix> {
    SymbolPolynomials::build(spec, q, SymbolKind::Restricted)?.eval(&check_hybrid_frequency(
        spec,
        SymbolKind::Restricted,
        xi,
    )?)
}

fn norm2(xi: &[BigRational]) -> BigRational {
    xi.iter().fold(BigRational::zero(), |acc, x| acc + x * x)
}

fn pow_rat(x: &BigRational, k: u32) -> BigRational {
    (0..k).fold(BigRational::one(), |acc, _| acc * x)
}

/// `Re(ζ̄ᵀ S(ξ) ζ) / (|ξ|^{2k} |ζ|^2)`.
pub fn lh_quotient(spec: &OperatorSpec, q: usize, kind: SymbolKind, xi: &[f64], zeta: &[Complex64]) -> Result<f64> {
    let rat: Vec<BigRational> = xi
        .iter()
        .map(|v| BigRational::from_float(*v).ok_or_else(|| Error::InvalidArgument("frequency must be finite".into())))
        .collect::<Result<_>>()?;
    let xi_n = check_hybrid_frequency(spec, kind, &rat)?;
    let s = SymbolPolynomials::build(spec, q, kind)?.eval(&xi_n)?;
    if zeta.len() != s.size() {
        return invalid(format!("ζ has length {}, expected {}", zeta.len(), s.size()));
    }
    let xn: f64 = xi.iter().map(|v| v * v).sum();
    let zn: f64 = zeta.iter().map(|z| z.norm_sqr()).sum();
    if xn == 0.0 || zn == 0.0 {
        return invalid("ξ and ζ must be nonzero");
    }
    let m = s.to_f64();
    let mut re = 0.0;
    for i in 0..s.size() {
        for j in 0..s.size() {
            re += (zeta[i].conj() * m[(i, j)] * zeta[j]).re;
        }
    }
    Ok(re / (xn.powi(spec.order() as i32) * zn))
}

/// Exact quotient for real rational `ζ`.
pub fn lh_quotient_exact(
    spec: &OperatorSpec,
    q: usize,
    kind: SymbolKind,
    xi: &[BigRational],
    zeta: &[BigRational],
) -> Result<BigRational> {
    let xi_n = check_hybrid_frequency(spec, kind, xi)?;
    let s = SymbolPolynomials::build(spec, q, kind)?.eval(&xi_n)?;
    if zeta.len() != s.size() {
        return invalid(format!("ζ has length {}, expected {}", zeta.len(), s.size()));
    }
    let (xn, zn) = (norm2(&xi_n), norm2(zeta));
    if xn.is_zero() || zn.is_zero() {
        return invalid("ξ and ζ must be nonzero");
    }
    Ok(s.quadratic_form(zeta) / (pow_rat(&xn, spec.order()) * zn))
}

// Radical inverse of `i` in `base`.
fn halton(mut i: u64, base: u64) -> BigRational {
    let mut num = 0u64;
    let mut den = 1u64;
    while i > 0 {
        den *= base;
        num = num * base + i % base;
        i /= base;
    }
    BigRational::new(num.into(), den.into())
}

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Rational point on the unit sphere in `R^n` from the `i`-th Halton point
/// pushed through inverse stereographic projection.
pub fn sphere_point(n: usize, i: u64) -> Vec<BigRational> {
    let two = BigRational::from_integer(2.into());
    let t: Vec<BigRational> = (0..n - 1)
        .map(|j| (halton(i, PRIMES[j % PRIMES.len()]) * &two - BigRational::one()) * &two)
        .collect();
    let s = norm2(&t);
    let den = &s + BigRational::one();
    let mut out: Vec<BigRational> = t.iter().map(|tj| tj * &two / &den).collect();
    out.push((&s - BigRational::one()) / &den);
    out
}

/// Directions always included in a scan: coordinate axes, `(1, ..., 1)` and
/// `(0, 1, ..., 1)`. Quotients are homogeneous, so these need not be unit.
pub fn special_directions(n: usize) -> Vec<Vec<BigRational>> {
    let one = BigRational::one;
    let zero = BigRational::zero;
    let mut out: Vec<Vec<BigRational>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { one() } else { zero() }).collect())
        .collect();
    out.push(vec![one(); n]);
    out.push((0..n).map(|i| if i == 0 { zero() } else { one() }).collect());
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanSample {
    pub xi: Vec<String>,
    pub xi_f64: Vec<f64>,
    pub quotient: f64,
    /// Exact value when the symbol is scalar.
    pub exact: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanReport {
    pub kind: SymbolKind,
    pub q: usize,
    pub samples: usize,
    pub scalar: bool,
    pub polynomial: Option<String>,
    pub min_quotient: f64,
    pub argmin: ScanSample,
    /// Smallest exact diagonal quotient `S_{II}/|ξ|^{2k}` at the argmin, an
    /// exact upper bound for the eigenvalue minimum there.
    pub argmin_min_diagonal: String,
    pub evidence_only: bool,
}

type Scored = (ScanSample, Option<BigRational>, BigRational);

fn sample_at(spec: &OperatorSpec, polys: &SymbolPolynomials, xi: &[BigRational]) -> Result<Scored> {
    let s = polys.eval(xi)?;
    let scale = pow_rat(&norm2(xi), spec.order());
    let xi_f64: Vec<f64> = xi.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
    let xi_str: Vec<String> = xi.iter().map(|v| v.to_string()).collect();
    let min_diag = (0..s.size())
        .map(|i| &s.entries[i][i] / &scale)
        .min()
        .unwrap_or_else(BigRational::zero);
    if let Some(c) = s.scalar_value() {
        let exact = c / &scale;
        return Ok((
            ScanSample {
                xi: xi_str,
                xi_f64,
                quotient: exact.to_f64().unwrap_or(f64::NAN),
                exact: Some(exact.to_string()),
            },
            Some(exact),
            min_diag,
        ));
    }
    let eig = SymmetricEigen::new(s.to_f64());
    let lam = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((
        ScanSample {
            xi: xi_str,
            xi_f64,
            quotient: lam / scale.to_f64().unwrap_or(f64::NAN),
            exact: None,
        },
        None,
        min_diag,
    ))
}

/// Quotients at the given directions, in order.
pub fn scan_directions(spec: &OperatorSpec, q: usize, kind: SymbolKind, dirs: &[Vec<BigRational>]) -> Result<Vec<ScanSample>> {
    let polys = SymbolPolynomials::build(spec, q, kind)?;
    dirs.iter().map(|xi| sample_at(spec, &polys, xi).map(|s| s.0)).collect()
}

/// Minimum Legendre-Hadamard quotient over the special directions and
/// `samples` rational sphere points starting at Halton index `seed + 1`.
/// Minimising over unit `ζ` gives the smallest eigenvalue of `S(ξ)`.
pub fn ellipticity_scan(spec: &OperatorSpec, q: usize, kind: SymbolKind, samples: usize, seed: u64) -> Result<ScanReport> {
    let polys = SymbolPolynomials::build(spec, q, kind)?;
    let n = spec.source_dim();
    let mut dirs = special_directions(n);
    dirs.extend((0..samples as u64).map(|i| sphere_point(n, seed + i + 1)));
    let results: Vec<Scored> = dirs
        .par_iter()
        .map(|xi| sample_at(spec, &polys, xi))
        .collect::<Result<_>>()?;
    let total = results.len();
    let (argmin, _, min_diag) = results
        .into_iter()
        .min_by(|a, b| match (&a.1, &b.1) {
            (Some(x), Some(y)) => x.cmp(y),
            _ => a.0.quotient.total_cmp(&b.0.quotient),
        })
        .expect("at least one direction");
    let scalar = polys.scalar();
    Ok(ScanReport {
        kind,
        q,
        samples: total,
        scalar: scalar.is_some(),
        polynomial: scalar.as_ref().map(format_poly),
        min_quotient: argmin.quotient,
        argmin,
        argmin_min_diagonal: min_diag.to_string(),
        evidence_only: true,
    })
}

/// Whether `p` vanishes identically on the hyperplane `ξ_j = 0`, i.e. every
/// monomial contains `ξ_j`.
pub fn vanishes_on_hyperplane(p: &Poly, j: usize) -> bool {
    p.keys().all(|e| e.get(j).copied().unwrap_or(0) > 0)
}

/// `Σ_j ξ_j^{2k} - n^{1-k} (Σ_j ξ_j^2)^k`, exact.
pub fn power_mean_gap(xi: &[BigRational], k: u32) -> BigRational {
    let n = xi.len() as i64;
    let lhs = xi.iter().fold(BigRational::zero(), |acc, x| acc + pow_rat(x, 2 * k));
    let nk = BigRational::from_integer(n.into());
    let coeff = pow_rat(&nk, k - 1).recip();
    lhs - coeff * pow_rat(&norm2(xi), k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{rat, Field, Form, Phase, TrigPoly};
    use crate::multiindex::{random_ordering, OrderingKind};
    use crate::operators::box_apply;
    use proptest::prelude::*;

    fn r(v: i64) -> BigRational {
        rat(v, 1)
    }

    #[test]
    fn first_increment_symbol_is_scalar() {
        for (n, k) in [(2, 1), (2, 2), (3, 2), (2, 3)] {
            let spec = OperatorSpec::build(n, k, 1, OrderingKind::Lexicographic).unwrap();
            let alt = OperatorSpec::new(random_ordering(n, k, 1, spec.ambient_dim(), 3).unwrap()).unwrap();
            for q in 0..=spec.ambient_dim() {
                let p = SymbolPolynomials::build(&spec, q, SymbolKind::Hybrid).unwrap();
                let s = p.scalar().expect("scalar symbol");
                let mut expect = Poly::new();
                for a in spec.alphas() {
                    expect.insert(a.iter().map(|x| 2 * x).collect(), 1);
                }
                assert_eq!(s, expect);
                let pa = SymbolPolynomials::build(&alt, q, SymbolKind::Hybrid).unwrap();
                assert_eq!(pa.scalar(), Some(expect));
            }
        }
    }

    #[test]
    fn symbol_examples() {
        let spec = OperatorSpec::build(2, 2, 1, OrderingKind::Diagonal).unwrap();
        let s = box_symbol(&spec, 0, &[r(1), r(1)]).unwrap();
        assert_eq!(s.scalar_value(), Some(r(3)));
        let z = box_symbol(&spec, 1, &[r(0), r(0), r(0)]).unwrap();
        assert!(z.entries.iter().flatten().all(|v| v.is_zero()));
        assert!(box_symbol(&spec, 0, &[r(1), r(0), r(1)]).is_err());
        let p = SymbolPolynomials::build(&spec, 0, SymbolKind::Hybrid).unwrap();
        assert_eq!(format_poly(&p.scalar().unwrap()), "xi1^4 + xi1^2 xi2^2 + xi2^4");
    }

    #[test]
    fn quotient_examples() {
        let spec = OperatorSpec::build(3, 2, 1, OrderingKind::Lexicographic).unwrap();
        let e1 = [1.0, 0.0, 0.0];
        let z1 = vec![Complex64::new(1.0, 0.0); 6];
        let z2: Vec<Complex64> = (0..6).map(|i| Complex64::new(i as f64, 1.0 - i as f64)).collect();
        let a = lh_quotient(&spec, 1, SymbolKind::Hybrid, &e1, &z1).unwrap();
        let b = lh_quotient(&spec, 1, SymbolKind::Hybrid, &e1, &z2).unwrap();
        assert!((a - 1.0).abs() < 1e-14 && (b - 1.0).abs() < 1e-14);
        assert!(lh_quotient(&spec, 1, SymbolKind::Hybrid, &[0.0; 3], &z1).is_err());
        let ones = [r(1), r(1), r(1)];
        let zeta = vec![r(1); 6];
        let q = lh_quotient_exact(&spec, 1, SymbolKind::Hybrid, &ones, &zeta).unwrap();
        // Σ_{|α|=2} 1 over |ξ|^4 = 6/9.
        assert_eq!(q, rat(2, 3));
        assert!(q >= rat(1, 3));
    }

    #[test]
    fn chained_restricted_symbol_degenerates() {
        let spec = OperatorSpec::build(2, 2, 1, OrderingKind::Chained).unwrap();
        let p = SymbolPolynomials::build(&spec, 0, SymbolKind::Restricted).unwrap();
        let s = p.scalar().unwrap();
        let mut expect = Poly::new();
        expect.insert(vec![4, 0], 1);
        expect.insert(vec![2, 2], 1);
        assert_eq!(s, expect);
        assert!(vanishes_on_hyperplane(&s, 0));
        let scan = ellipticity_scan(&spec, 0, SymbolKind::Restricted, 64, 0).unwrap();
        assert_eq!(scan.argmin.exact.as_deref(), Some("0"));
        assert_eq!(scan.argmin.xi[0], "0");
    }

    #[test]
    fn diagonal_restricted_symbol_meets_power_mean_bound() {
        let spec = OperatorSpec::build(2, 2, 1, OrderingKind::Diagonal).unwrap();
        let scan = ellipticity_scan(&spec, 0, SymbolKind::Restricted, 256, 0).unwrap();
        assert!((scan.min_quotient - 0.5).abs() < 1e-12);
        assert_eq!(scan.argmin.xi, vec!["1", "1"]);
    }

    #[test]
    fn hybrid_scan_is_positive() {
        for kind in [OrderingKind::Lexicographic, OrderingKind::Chained] {
            let spec = OperatorSpec::build(2, 2, 1, kind).unwrap();
            let scan = ellipticity_scan(&spec, 1, SymbolKind::Hybrid, 64, 0).unwrap();
            assert!(scan.min_quotient > 0.0);
        }
        let spec = OperatorSpec::build(3, 2, 2, OrderingKind::Lexicographic).unwrap();
        let scan = ellipticity_scan(&spec, 1, SymbolKind::Hybrid, 32, 0).unwrap();
        assert!(!scan.scalar);
        let min_diag: BigRational = scan.argmin_min_diagonal.parse().unwrap();
        assert!(scan.min_quotient <= min_diag.to_f64().unwrap() + 1e-12);
    }

    #[test]
    fn sphere_points_are_unit() {
        for i in 1..20 {
            for n in 2..=4 {
                assert_eq!(norm2(&sphere_point(n, i)), BigRational::one());
            }
        }
    }

    #[test]
    fn symbol_matches_operator_on_oscillations() {
        for (n, k, l) in [(2, 2, 1), (2, 2, 2), (3, 2, 2)] {
            let spec = OperatorSpec::build(n, k, l, OrderingKind::Lexicographic).unwrap();
            let big = spec.ambient_dim();
            let freq: Vec<i64> = (0..n as i64).map(|j| j + 1).collect();
            let xi: Vec<BigRational> = freq.iter().map(|&v| r(v)).collect();
            for q in 0..=big {
                let s = box_symbol(&spec, q, &xi).unwrap();
                for (col, &il) in s.labels.iter().enumerate() {
                    let wave = TrigPoly::monomial(freq.clone(), Phase::Cos, r(1));
                    let h = Form::from_components(n, big, q, n, [(il, wave.clone())]).unwrap();
                    let out = box_apply(&spec, &h).unwrap();
                    for (row, &ml) in s.labels.iter().enumerate() {
                        let mut expect = wave.clone();
                        expect.scale(&s.entries[row][col]);
                        assert_eq!(out.coeff(ml), expect);
                    }
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn power_mean_inequality(v in proptest::collection::vec(-20i64..20, 2..5), k in 1u32..4) {
            let xi: Vec<BigRational> = v.iter().map(|&x| r(x)).collect();
            prop_assert!(power_mean_gap(&xi, k) >= BigRational::zero());
        }

        #[test]
        fn symbols_are_symmetric(a in -5i64..5, b in -5i64..5, seed in 0u64..50) {
            let spec = OperatorSpec::new(random_ordering(2, 2, 2, 3, seed).unwrap()).unwrap();
            for q in 0..=3 {
                prop_assert!(box_symbol(&spec, q, &[r(a), r(b)]).unwrap().is_symmetric());
            }
        }
    }
}
