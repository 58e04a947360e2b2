//! Reductions between hybrid forms and `S(n,k)`-indexed families, closed
//! field generation, the Hodge-system solver and numerical probes of the
//! duality and Gagliardo-Nirenberg estimates.

mod closed;
mod hodge;
mod ratios;
mod suite;

pub use closed::{
    closed_bump_field, closed_trig_field, closure_residual, make_closed_field, rational_nullspace,
    BumpParams, ClosedField, ClosedRoute,
};
pub use hodge::{hodge_solve, HodgeResiduals, HodgeSolution};
pub use ratios::{
    bump_duality_ratio, bump_gn_ratio, duality_ratio, duality_ratio_adjoint, gn_ratio, GnOptions, Ratio,
    CLOSURE_TOL, VANISHING_TOL,
};
pub use suite::{
    run_suite, CaseKind, CaseRecord, RatioSummary, SpecEntry, SpecSummaryRecord, SuiteConfig, TestReport,
    HODGE_TOL, SCHEMA_VERSION,
};

use crate::error::{Error, Result};
use crate::forms::{Field, Form};
use crate::multiindex::Label;
use crate::operators::OperatorSpec;

/// `g^{L0}_α = Σ_I ε^{ℵ(iα) I}_{L0} F_I ∘ i` and the same for `H`, one entry
/// per multi-index in canonical order. For `q = 0` every entry is `F ∘ i`.
pub fn vs_reduction<F: Field>(
    spec: &OperatorSpec,
    f: &Form<F>,
    h: &Form<F>,
    l0: Label,
) -> Result<(Vec<F>, Vec<F>)> {
    let (big, l) = (spec.ambient_dim(), spec.increment());
    let q = f.degree();
    if q + l > big {
        return Err(Error::DegreeOutOfRange(format!("q = {q} exceeds N - l = {}", big - l)));
    }
    if h.degree() != q {
        return Err(Error::DegreeOutOfRange("F and H must have the same degree".into()));
    }
    if l0.len() != q + l || !l0.within(big) {
        return Err(Error::InvalidArgument(format!("{l0} is not a label of degree {} in {big}", q + l)));
    }
    let reduce = |form: &Form<F>| -> Vec<F> {
        if q == 0 {
            return vec![form.coeff(Label::from_bits(0)); spec.ordering().len()];
        }
        (0..spec.ordering().len())
            .map(|idx| {
                let a = spec.aleph(idx);
                let mut out = F::zero(form.field_shape());
                if a.is_subset(l0) {
                    let i = l0.difference(a);
                    if let Some(c) = form.get(i) {
                        out.add_scaled_int(c, a.concat_sign(i) as i64);
                    }
                }
                out
            })
            .collect()
    };
    Ok((reduce(f), reduce(h)))
}

/// `F_I = ε^{I' I} g_α` with `ℵ(iα) = I'`, a form of degree `N - l`.
pub fn vs_lift<F: Field>(spec: &OperatorSpec, g: &[F]) -> Result<Form<F>> {
    let m = spec.ordering().len();
    if g.len() != m {
        return Err(Error::DimensionMismatch(format!("family has {} entries, expected {m}", g.len())));
    }
    let (n, big, l) = (spec.source_dim(), spec.ambient_dim(), spec.increment());
    let shape = g[0].shape();
    let mut out = Form::zero(n, big, big - l, shape)?;
    let full = Label::full(big);
    for (idx, gi) in g.iter().enumerate() {
        let a = spec.aleph(idx);
        let i = full.difference(a);
        out.accumulate(i, gi, a.concat_sign(i) as i64);
    }
    Ok(out)
}

/// `Σ_α ∂^α g_α`.
pub fn k_divergence<F: Field>(spec: &OperatorSpec, g: &[F]) -> Result<F> {
    if g.len() != spec.ordering().len() {
        return Err(Error::DimensionMismatch("family length differs from |S(n,k)|".into()));
    }
    let shape = g[0].shape();
    let prepared: Vec<F::Prepared> = g.iter().map(|x| x.prepare()).collect();
    let terms: Vec<(i64, &[u32], &F::Prepared)> = prepared
        .iter()
        .enumerate()
        .map(|(i, p)| (1, spec.alphas()[i].as_slice(), p))
        .collect();
    Ok(F::differential_sum(&shape, &terms))
}

#[cfg(test)]
mod tests;
