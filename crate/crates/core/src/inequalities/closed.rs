//! Fields with `T̃F = 0`.

use num::{BigRational, One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{lp_norm, rat, sobolev_norm, BumpField, Field, Form, GridField, Phase, TrigPoly};
use crate::multiindex::enum_labels;
use crate::operators::OperatorSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedRoute {
    /// `F = T̃Φ`, closed because `T̃∘T̃ = 0` for odd `l`.
    Potential,
    /// Coefficients projected onto `ker B(ξ)` frequency by frequency.
    KernelProjection,
    /// `q + l > N`: every form is closed.
    Overflow,
}

#[derive(Clone, Debug)]
pub struct ClosedField<F: Field> {
    pub form: Form<F>,
    pub route: ClosedRoute,
}

/// Shape of random bump data: `count` Gaussians per coefficient, centers
/// within `radius` of the box center, widths in `widths`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpParams {
    pub count: usize,
    pub radius: f64,
    pub widths: (f64, f64),
}

impl Default for BumpParams {
    fn default() -> Self {
        BumpParams {
            count: 3,
            radius: 0.3,
            widths: (0.25, 0.3),
        }
    }
}

pub(crate) fn random_bump_form<R: Rng + ?Sized>(
    n: usize,
    big: usize,
    q: usize,
    params: &BumpParams,
    rng: &mut R,
) -> Result<Form<BumpField>> {
    let comps: Vec<_> = enum_labels(big, q)?
        .into_iter()
        .map(|l| (l, BumpField::random(n, params.count, params.radius, params.widths, rng)))
        .collect();
    Form::from_components(n, big, q, n, comps)
}

fn random_trig_form<R: Rng + ?Sized>(n: usize, big: usize, q: usize, nterms: usize, max_freq: i64, rng: &mut R) -> Result<Form<TrigPoly>> {
    let comps: Vec<_> = enum_labels(big, q)?
        .into_iter()
        .map(|l| (l, TrigPoly::random(n, nterms, max_freq, rng)))
        .collect();
    Form::from_components(n, big, q, n, comps)
}

/// `‖T̃F‖_2 / ‖F‖_{W^{k,2}}` on a grid field.
pub fn closure_residual(spec: &OperatorSpec, f: &Form<GridField>) -> Result<f64> {
    let tf = spec.apply_t_total(f)?;
    let scale = sobolev_norm(f, spec.order(), 2.0)?;
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(lp_norm(&tf, 2.0)? / scale)
}

/// Closed bump data through the potential route; only available for odd `l`
/// and `q >= l`, or when `q + l > N`.
pub fn closed_bump_field<R: Rng + ?Sized>(
    spec: &OperatorSpec,
    q: usize,
    params: &BumpParams,
    rng: &mut R,
) -> Result<ClosedField<BumpField>> {
    let (n, big, l) = (spec.source_dim(), spec.ambient_dim(), spec.increment());
    if q > big {
        return Err(Error::DegreeOutOfRange(format!("degree {q} exceeds N = {big}")));
    }
    if q + l > big {
        return Ok(ClosedField {
            form: random_bump_form(n, big, q, params, rng)?,
            route: ClosedRoute::Overflow,
        });
    }
    if l % 2 == 0 || q < l {
        return Err(Error::Precondition(format!(
            "bump data has no potential route for l = {l}, q = {q}; use trigonometric kernel projection"
        )));
    }
    let phi = random_bump_form(n, big, q - l, params, rng)?;
    Ok(ClosedField {
        form: spec.apply_t_total(&phi)?,
        route: ClosedRoute::Potential,
    })
}

/// Basis of the rational null space of `rows` (each of length `cols`).
pub fn rational_nullspace(rows: &[Vec<BigRational>], cols: usize) -> Vec<Vec<BigRational>> {
    let mut a: Vec<Vec<BigRational>> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..a.len()).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][c].recip();
        a[r].iter_mut().for_each(|v| *v *= &inv);
        for i in 0..a.len() {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                let pivot_row = a[r].clone();
                a[i].iter_mut().zip(&pivot_row).for_each(|(v, w)| *v -= &f * w);
            }
        }
        pivots.push(c);
        r += 1;
        if r == a.len() {
            break;
        }
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = vec![BigRational::zero(); cols];
            v[fc] = BigRational::one();
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[i][fc].clone();
            }
            v
        })
        .collect()
}

// Solves the square system by Gauss-Jordan elimination.
fn solve(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Vec<BigRational> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).find(|&i| !a[i][c].is_zero()).expect("Gram matrix of a basis is invertible");
        a.swap(c, p);
        b.swap(c, p);
        let inv = a[c][c].recip();
        a[c].iter_mut().for_each(|v| *v *= &inv);
        b[c] *= &inv;
        for i in 0..n {
            if i != c && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                let row = a[c].clone();
                a[i].iter_mut().zip(&row).for_each(|(v, w)| *v -= &f * w);
                let bc = b[c].clone();
                b[i] -= f * bc;
            }
        }
    }
    b
}

fn dot(a: &[BigRational], b: &[BigRational]) -> BigRational {
    a.iter().zip(b).fold(BigRational::zero(), |acc, (x, y)| acc + x * y)
}

/// Orthogonal projection of `c` onto the span of `basis`.
fn project(basis: &[Vec<BigRational>], c: &[BigRational]) -> Vec<BigRational> {
    if basis.is_empty() {
        return vec![BigRational::zero(); c.len()];
    }
    let gram: Vec<Vec<BigRational>> = basis.iter().map(|u| basis.iter().map(|v| dot(u, v)).collect()).collect();
    let rhs: Vec<BigRational> = basis.iter().map(|u| dot(u, c)).collect();
    let y = solve(gram, rhs);
    let mut out = vec![BigRational::zero(); c.len()];
    for (yi, u) in y.iter().zip(basis) {
        out.iter_mut().zip(u).for_each(|(o, v)| *o += yi * v);
    }
    out
}

/// The integer matrix `B(ξ)_{L,I} = Σ_α ε^{ℵ(iα) I}_L ξ^α`; the symbol of
/// `T̃` at `ξ` is `i^k B(ξ)`.
fn t_symbol(spec: &OperatorSpec, q: usize, xi: &[i64]) -> Result<(Vec<Vec<BigRational>>, usize)> {
    let big = spec.ambient_dim();
    let cols = enum_labels(big, q)?;
    let col_of = |l| cols.iter().position(|c| *c == l).expect("input label");
    let table = spec.forward_table(q);
    let rows = table
        .rows
        .iter()
        .map(|row| {
            let mut v = vec![BigRational::zero(); cols.len()];
            for (s, idx, i) in &row.terms {
                let mono: i64 = spec.alphas()[*idx]
                    .iter()
                    .zip(xi)
                    .map(|(a, x)| x.pow(*a))
                    .product();
                v[col_of(*i)] += BigRational::from_integer((*s as i64 * mono).into());
            }
            v
        })
        .collect();
    Ok((rows, cols.len()))
}

/// Closed trigonometric data. Odd `l` with `q >= l` uses `T̃Φ`; otherwise
/// random rational coefficients at `nfreq` random frequencies are projected
/// onto the kernel of the symbol of `T̃`.
pub fn closed_trig_field<R: Rng + ?Sized>(
    spec: &OperatorSpec,
    q: usize,
    nfreq: usize,
    max_freq: i64,
    rng: &mut R,
) -> Result<ClosedField<TrigPoly>> {
    let (n, big, l) = (spec.source_dim(), spec.ambient_dim(), spec.increment());
    if q > big {
        return Err(Error::DegreeOutOfRange(format!("degree {q} exceeds N = {big}")));
    }
    if q + l > big {
        return Ok(ClosedField {
            form: random_trig_form(n, big, q, nfreq, max_freq, rng)?,
            route: ClosedRoute::Overflow,
        });
    }
    if l % 2 == 1 && q >= l {
        let phi = random_trig_form(n, big, q - l, nfreq, max_freq, rng)?;
        return Ok(ClosedField {
            form: spec.apply_t_total(&phi)?,
            route: ClosedRoute::Potential,
        });
    }
    let labels = enum_labels(big, q)?;
    let mut comps: Vec<TrigPoly> = vec![TrigPoly::zero(n); labels.len()];
    let mut any = false;
    for _ in 0..nfreq {
        let xi: Vec<i64> = loop {
            let v: Vec<i64> = (0..n).map(|_| rng.gen_range(-max_freq..=max_freq)).collect();
            if v.iter().any(|x| *x != 0) {
                break v;
            }
        };
        let (rows, ncols) = t_symbol(spec, q, &xi)?;
        let basis = rational_nullspace(&rows, ncols);
        if basis.is_empty() {
            continue;
        }
        any = true;
        for phase in [Phase::Cos, Phase::Sin] {
            let c: Vec<BigRational> = (0..ncols).map(|_| rat(rng.gen_range(-8..=8), 4)).collect();
            let p = project(&basis, &c);
            for (comp, v) in comps.iter_mut().zip(p) {
                if !v.is_zero() {
                    comp.push(xi.clone(), phase, v);
                }
            }
        }
    }
    if !any {
        return Err(Error::Precondition(format!(
            "the symbol of T̃ is injective on {q}-forms at every sampled frequency"
        )));
    }
    Ok(ClosedField {
        form: Form::from_components(n, big, q, n, labels.into_iter().zip(comps))?,
        route: ClosedRoute::KernelProjection,
    })
}

/// Seeded closed trigonometric field with four frequencies up to 3.
pub fn make_closed_field(spec: &OperatorSpec, q: usize, seed: u64) -> Result<ClosedField<TrigPoly>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = closed_trig_field(spec, q, 4, 3, &mut rng)?;
    if !spec.apply_t_total(&out.form)?.is_zero() {
        return Err(Error::Precondition("generated field failed the closure check".into()));
    }
    Ok(out)
}
