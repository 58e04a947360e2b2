//! Ratios probing the duality and Gagliardo-Nirenberg estimates.
//!
//! Grid versions take sampled forms. The bump versions sample one component
//! at a time and accumulate pointwise sums, so only a few `P^n` buffers are
//! alive at once.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{grad_lp_norm, inner_product, lp_norm, sobolev_norm, BumpField, Form, GridField, Sample};
use crate::multiindex::enum_multiindices;
use crate::operators::OperatorSpec;

use super::closed::closure_residual;

/// Closure tolerance for sampled data, relative to `‖F‖_{W^{k,2}}`.
pub const CLOSURE_TOL: f64 = 1e-8;

/// A side condition counts as holding when the term is below this fraction
/// of `‖u‖_{W^{k,1}}`.
pub const VANISHING_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GnOptions {
    /// Compute at excluded degrees without their side condition.
    pub exploratory: bool,
}

/// Numerator, denominator and their quotient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Ratio {
    pub numerator: f64,
    pub denominator: f64,
    pub value: f64,
}

impl Ratio {
    fn new(numerator: f64, denominator: f64) -> Result<Ratio> {
        if !(denominator > 0.0) || !denominator.is_finite() {
            return Err(Error::Precondition(format!("denominator is {denominator:e}")));
        }
        Ok(Ratio {
            numerator,
            denominator,
            value: numerator / denominator,
        })
    }
}

fn check_pair<F: crate::forms::Field>(spec: &OperatorSpec, f: &Form<F>, h: &Form<F>) -> Result<()> {
    f.same_space(h)?;
    if f.source_dim() != spec.source_dim() || f.ambient_dim() != spec.ambient_dim() {
        return Err(Error::DimensionMismatch("forms do not match the operator".into()));
    }
    Ok(())
}

/// `|⟨F,H⟩| / (‖F‖_1 ‖∇H‖_n)` for closed `F`.
pub fn duality_ratio(spec: &OperatorSpec, f: &Form<GridField>, h: &Form<GridField>) -> Result<Ratio> {
    check_pair(spec, f, h)?;
    let r = closure_residual(spec, f)?;
    if r > CLOSURE_TOL {
        return Err(Error::Precondition(format!("F is not closed (residual {r:e})")));
    }
    let n = spec.source_dim() as f64;
    let num = inner_product(f, h)?.abs();
    Ratio::new(num, lp_norm(f, 1.0)? * grad_lp_norm(h, n)?)
}

/// The adjoint statement: `T̃*G = 0` and the ratio of `(*G, *K)`.
pub fn duality_ratio_adjoint(spec: &OperatorSpec, g: &Form<GridField>, k: &Form<GridField>) -> Result<Ratio> {
    duality_ratio(spec, &g.hodge_star(), &k.hodge_star())
}

fn top_sides<F: crate::forms::Field>(spec: &OperatorSpec, u: &Form<F>) -> Result<(Form<F>, Form<F>)> {
    Ok((spec.apply_top(u)?, spec.apply_top_star(u)?))
}

fn check_degree(spec: &OperatorSpec, q: usize, u_degree: usize) -> Result<()> {
    if q != u_degree {
        return Err(Error::DegreeOutOfRange(format!("u has degree {u_degree}, expected {q}")));
    }
    if spec.source_dim() < 2 {
        return Err(Error::Precondition("the estimate needs n >= 2".into()));
    }
    Ok(())
}

// Excluded degrees need the matching side to vanish.
fn check_excluded(spec: &OperatorSpec, q: usize, top: f64, top_star: f64, scale: f64, opts: GnOptions) -> Result<()> {
    if opts.exploratory {
        return Ok(());
    }
    let n = spec.source_dim();
    let small = |v: f64| v <= VANISHING_TOL * scale;
    if q == 1 && !small(top_star) {
        return Err(Error::Precondition("q = 1 needs 𝒯*u = 0".into()));
    }
    if q == n - 1 && !small(top) {
        return Err(Error::Precondition(format!("q = {} needs 𝒯u = 0", n - 1)));
    }
    Ok(())
}

/// `‖u‖_{W^{k-1,r}} / (‖𝒯u‖_1 + ‖𝒯*u‖_1)` with `r = n/(n-1)`.
pub fn gn_ratio(spec: &OperatorSpec, q: usize, u: &Form<GridField>, opts: GnOptions) -> Result<Ratio> {
    check_degree(spec, q, u.degree())?;
    let (t, ts) = top_sides(spec, u)?;
    let (a, b) = (lp_norm(&t, 1.0)?, lp_norm(&ts, 1.0)?);
    check_excluded(spec, q, a, b, sobolev_norm(u, spec.order(), 1.0)?, opts)?;
    let n = spec.source_dim() as f64;
    let num = sobolev_norm(u, spec.order() - 1, n / (n - 1.0))?;
    Ratio::new(num, a + b)
}

// Pointwise squared sums over components, sampled one at a time.
fn pointwise_sq(fields: impl IntoIterator<Item = BumpField>, p: usize, n: usize) -> Vec<f64> {
    let mut acc = vec![0.0; p.pow(n as u32)];
    for f in fields {
        let s = f.sample(p);
        acc.iter_mut().zip(s.data()).for_each(|(a, v)| *a += v * v);
    }
    acc
}

fn mean_pow_sqrt(sq: &[f64], p: f64) -> f64 {
    let m = sq.iter().map(|v| v.sqrt().powf(p)).sum::<f64>() / sq.len() as f64;
    m.powf(1.0 / p)
}

fn first_derivatives(f: &BumpField, n: usize) -> impl Iterator<Item = BumpField> + '_ {
    (0..n).map(move |j| {
        let mut e = vec![0u32; n];
        e[j] = 1;
        crate::forms::Field::derivative(f, &e)
    })
}

/// [`duality_ratio`] on bump data sampled at `P^n`. `F` must be exactly
/// closed as a bump form.
pub fn bump_duality_ratio(spec: &OperatorSpec, f: &Form<BumpField>, h: &Form<BumpField>, p: usize) -> Result<Ratio> {
    check_pair(spec, f, h)?;
    if !spec.apply_t_total(f)?.is_zero() {
        return Err(Error::Precondition("F is not closed".into()));
    }
    let n = spec.source_dim();
    let len = p.pow(n as u32);
    let mut f_sq = vec![0.0; len];
    let mut pairing = 0.0;
    for (l, fi) in f.components() {
        let fs = fi.sample(p);
        f_sq.iter_mut().zip(fs.data()).for_each(|(a, v)| *a += v * v);
        if let Some(hi) = h.get(l) {
            let hs = hi.sample(p);
            pairing += fs.data().iter().zip(hs.data()).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    let pairing = (pairing / len as f64).abs();
    let grad = pointwise_sq(h.components().flat_map(|(_, c)| first_derivatives(c, n)), p, n);
    let f1 = mean_pow_sqrt(&f_sq, 1.0);
    Ratio::new(pairing, f1 * mean_pow_sqrt(&grad, n as f64))
}

fn bump_l1(form: &Form<BumpField>, p: usize) -> f64 {
    let n = form.source_dim();
    if form.is_zero() {
        return 0.0;
    }
    mean_pow_sqrt(&pointwise_sq(form.components().map(|(_, c)| c.clone()), p, n), 1.0)
}

fn bump_sobolev(form: &Form<BumpField>, a: u32, r: f64, p: usize) -> f64 {
    let n = form.source_dim();
    let mut acc = 0.0;
    for (_, c) in form.components() {
        for s in 0..=a {
            for beta in enum_multiindices(n, s) {
                let d = crate::forms::Field::derivative(c, beta.exponents()).sample(p);
                acc += d.mean_abs_pow(r);
            }
        }
    }
    acc.powf(1.0 / r)
}

/// [`gn_ratio`] on bump data sampled at `P^n`.
pub fn bump_gn_ratio(spec: &OperatorSpec, q: usize, u: &Form<BumpField>, p: usize, opts: GnOptions) -> Result<Ratio> {
    check_degree(spec, q, u.degree())?;
    let (t, ts) = top_sides(spec, u)?;
    let (a, b) = (bump_l1(&t, p), bump_l1(&ts, p));
    if !opts.exploratory && (q == 1 || q + 1 == spec.source_dim()) {
        check_excluded(spec, q, a, b, bump_sobolev(u, spec.order(), 1.0, p), opts)?;
    }
    let n = spec.source_dim() as f64;
    let num = bump_sobolev(u, spec.order() - 1, n / (n - 1.0), p);
    Ratio::new(num, a + b)
}
