use std::collections::BTreeMap;

use super::pullback::minor_det;
use super::{Algebra, Field, GridField, LinearPullback, Sample, Scalar};
use crate::error::{Error, Result};
use crate::multiindex::{complement, enum_labels, enum_multiindices, Label, MultiIndex};

/// A degree-`q` form on `R^N` whose coefficients are functions of the first
/// `n` variables only. With `N = n` this is an ordinary form on `R^n`.
///
/// Components are sparse: a missing label means a zero coefficient. A degree
/// above `N` is allowed and denotes the (necessarily zero) overflow form that
/// operators produce when they raise the degree past the top.
#[derive(Clone, Debug, PartialEq)]
pub struct Form<F: Field> {
    n: usize,
    big_n: usize,
    q: usize,
    shape: F::Shape,
    comps: BTreeMap<Label, F>,
}

impl<F: Field> Form<F> {
    pub fn zero(n: usize, big_n: usize, q: usize, shape: F::Shape) -> Result<Self> {
        if big_n < n {
            return Err(Error::DimensionMismatch(format!(
                "ambient dimension {big_n} below source dimension {n}"
            )));
        }
        Ok(Form {
            n,
            big_n,
            q,
            shape,
            comps: BTreeMap::new(),
        })
    }

    pub fn from_components(
        n: usize,
        big_n: usize,
        q: usize,
        shape: F::Shape,
        comps: impl IntoIterator<Item = (Label, F)>,
    ) -> Result<Self> {
        let mut f = Form::zero(n, big_n, q, shape)?;
        for (l, c) in comps {
            f.set(l, c)?;
        }
        Ok(f)
    }

    /// Scalar function viewed as a 0-form.
    pub fn scalar(big_n: usize, f: F) -> Result<Self> {
        let n = f.nvars();
        let shape = f.shape();
        Form::from_components(n, big_n, 0, shape, [(Label::EMPTY, f)])
    }

    pub fn source_dim(&self) -> usize {
        self.n
    }

    pub fn ambient_dim(&self) -> usize {
        self.big_n
    }

    pub fn degree(&self) -> usize {
        self.q
    }

    pub fn field_shape(&self) -> &F::Shape {
        &self.shape
    }

    pub fn set(&mut self, label: Label, f: F) -> Result<()> {
        if label.len() != self.q || !label.within(self.big_n) {
            return Err(Error::DimensionMismatch(format!(
                "label {label} does not index a {}-form over R^{}",
                self.q, self.big_n
            )));
        }
        if f.nvars() != self.n || f.shape() != self.shape {
            return Err(Error::DimensionMismatch(format!(
                "coefficient on {label} has the wrong shape"
            )));
        }
        if f.is_zero() {
            self.comps.remove(&label);
        } else {
            self.comps.insert(label, f);
        }
        Ok(())
    }

    pub fn get(&self, label: Label) -> Option<&F> {
        self.comps.get(&label)
    }

    /// Coefficient on `label`, materializing zero.
    pub fn coeff(&self, label: Label) -> F {
        self.comps.get(&label).cloned().unwrap_or_else(|| F::zero(&self.shape))
    }

    pub fn components(&self) -> impl Iterator<Item = (Label, &F)> {
        self.comps.iter().map(|(l, f)| (*l, f))
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn same_space(&self, other: &Self) -> Result<()> {
        if self.n != other.n || self.big_n != other.big_n || self.q != other.q || self.shape != other.shape {
            return Err(Error::DimensionMismatch(format!(
                "forms live in different spaces: (n={}, N={}, q={}) vs (n={}, N={}, q={})",
                self.n, self.big_n, self.q, other.n, other.big_n, other.q
            )));
        }
        Ok(())
    }

    /// Adds `c · f` to the coefficient on `label`.
    pub(crate) fn accumulate(&mut self, label: Label, f: &F, c: i64) {
        debug_assert!(label.len() == self.q);
        match self.comps.get_mut(&label) {
            Some(slot) => {
                slot.add_scaled_int(f, c);
                if slot.is_zero() {
                    self.comps.remove(&label);
                }
            }
            None => {
                let mut z = F::zero(&self.shape);
                z.add_scaled_int(f, c);
                if !z.is_zero() {
                    self.comps.insert(label, z);
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        let mut out = self.clone();
        for (l, f) in &other.comps {
            out.accumulate(*l, f, 1);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        let mut out = self.clone();
        for (l, f) in &other.comps {
            out.accumulate(*l, f, -1);
        }
        Ok(out)
    }

    pub fn scale(&self, c: &F::Scalar) -> Self {
        let mut out = self.clone();
        out.comps.values_mut().for_each(|f| f.scale(c));
        out.comps.retain(|_, f| !f.is_zero());
        out
    }

    pub fn scale_int(&self, c: i64) -> Self {
        self.scale(&F::Scalar::from_int(c))
    }

    /// Componentwise `∂^alpha` for `alpha` over the ambient variables. Slots
    /// beyond the source dimension annihilate hybrid coefficients.
    pub fn partial(&self, alpha: &MultiIndex) -> Result<Self> {
        if alpha.dim() != self.big_n && alpha.dim() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "multi-index {alpha} has length {}, expected {} or {}",
                alpha.dim(),
                self.n,
                self.big_n
            )));
        }
        let mut out = Form::zero(self.n, self.big_n, self.q, self.shape.clone())?;
        let Ok(src) = alpha.restrict(self.n) else {
            return Ok(out);
        };
        for (l, f) in &self.comps {
            let d = f.derivative(src.exponents());
            if !d.is_zero() {
                out.comps.insert(*l, d);
            }
        }
        Ok(out)
    }

    /// `*(f dx^I) = ε^{I I'} f dx^{I'}` on `R^N`.
    pub fn hodge_star(&self) -> Self {
        if self.q > self.big_n {
            return self.clone();
        }
        let mut out = Form::zero(self.n, self.big_n, self.big_n - self.q, self.shape.clone())
            .expect("star degree in range");
        for (l, f) in &self.comps {
            let (comp, sign) = complement(*l, self.big_n).expect("label within N");
            out.accumulate(comp, f, sign as i64);
        }
        out
    }

    /// Keeps the labels inside `{1, ..., n}`: the restriction `i*` to `R^n`.
    pub fn restrict(&self) -> Result<Self> {
        let comps = self
            .comps
            .iter()
            .filter(|(l, _)| l.within(self.n))
            .map(|(l, f)| (*l, f.clone()));
        Form::from_components(self.n, self.n, self.q, self.shape.clone(), comps)
    }

    /// Trivial extension `pi*` into `R^N`.
    pub fn extend(&self, big_n: usize) -> Result<Self> {
        Form::from_components(
            self.n,
            big_n,
            self.q,
            self.shape.clone(),
            self.comps.iter().map(|(l, f)| (*l, f.clone())),
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.values().map(|f| f.max_abs()).fold(0.0, f64::max)
    }

    pub fn map_fields<G: Field>(&self, shape: G::Shape, f: impl Fn(&F) -> G) -> Result<Form<G>> {
        Form::from_components(
            self.n,
            self.big_n,
            self.q,
            shape,
            self.comps.iter().map(|(l, c)| (*l, f(c))),
        )
    }

    /// Dense list of coefficients in lexicographic label order.
    pub fn dense(&self) -> Vec<(Label, F)> {
        enum_labels(self.big_n, self.q)
            .unwrap_or_default()
            .into_iter()
            .map(|l| (l, self.coeff(l)))
            .collect()
    }
}

impl<F: Sample> Form<F> {
    pub fn sample(&self, p: usize) -> Result<Form<GridField>> {
        if p < 2 || !p.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("grid size {p} is not a power of two >= 2")));
        }
        let shape = super::GridShape { n: self.n, p };
        self.map_fields(shape, |f| f.sample(p))
    }
}

impl<F: Algebra> Form<F> {
    /// `F ∧ G` with `(F∧G)_{I∪J} += ε^{IJ}_{I∪J} F_I G_J`.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        if self.n != other.n || self.big_n != other.big_n || self.shape != other.shape {
            return Err(Error::DimensionMismatch("wedge of forms over different spaces".into()));
        }
        let q = self.q + other.q;
        let mut out = Form::zero(self.n, self.big_n, q, self.shape.clone())?;
        for (a, f) in &self.comps {
            for (b, g) in &other.comps {
                let s = a.concat_sign(*b);
                if s != 0 {
                    out.accumulate(a.union(*b), &f.mul(g), s as i64);
                }
            }
        }
        Ok(out)
    }
}

impl<F: Field + LinearPullback> Form<F> {
    /// Pullback under `ψ(x) = c0 + A (x - c0)` on `R^n`, extended by the
    /// identity on the remaining `N - n` ambient directions:
    /// `(ψ*F)_J = Σ_I (F_I ∘ ψ) det Ã[I, J]`.
    pub fn pullback(&self, a: &[Vec<f64>]) -> Result<Self> {
        let n = self.n;
        let big = self.big_n;
        let mut ext = vec![vec![0.0; big]; big];
        for (i, row) in ext.iter_mut().enumerate() {
            if i < n {
                if a.get(i).map(|r| r.len()) != Some(n) {
                    return Err(Error::DimensionMismatch(format!("matrix must be {n}x{n}")));
                }
                row[..n].copy_from_slice(&a[i]);
            } else {
                row[i] = 1.0;
            }
        }
        if a.len() != n {
            return Err(Error::DimensionMismatch(format!("matrix must be {n}x{n}")));
        }
        let targets = enum_labels(big, self.q).unwrap_or_default();
        let mut out = Form::zero(n, big, self.q, self.shape.clone())?;
        for (l, f) in &self.comps {
            let pf = f.pullback(a)?;
            let rows: Vec<usize> = l.indices().iter().map(|i| i - 1).collect();
            for j in &targets {
                let cols: Vec<usize> = j.indices().iter().map(|i| i - 1).collect();
                let d = minor_det(&ext, &rows, &cols);
                if d == 0.0 {
                    continue;
                }
                let mut term = pf.clone();
                if d.fract() == 0.0 && d.abs() < 1e15 {
                    out.accumulate(*j, &term, d as i64);
                } else {
                    let s = <F::Scalar as num::FromPrimitive>::from_f64(d).ok_or_else(|| {
                        Error::InvalidArgument("minor not representable in the scalar type".into())
                    })?;
                    term.scale(&s);
                    out.accumulate(*j, &term, 1);
                }
            }
        }
        Ok(out)
    }
}

/// `⟨F, G⟩ = Σ_I ∫ F_I G_I` against the normalized measure.
pub fn inner_product<F: Algebra>(f: &Form<F>, g: &Form<F>) -> Result<F::Scalar> {
    f.same_space(g)?;
    let mut acc = <F::Scalar as num::Zero>::zero();
    for (l, a) in f.components() {
        if let Some(b) = g.get(l) {
            acc = acc + a.inner(b);
        }
    }
    Ok(acc)
}

/// `⟨F, G⟩ = ∫ *_n i* *_N (F ∧ *_N G)`.
pub fn inner_product_wedge<F: Algebra>(f: &Form<F>, g: &Form<F>) -> Result<F::Scalar> {
    f.same_space(g)?;
    let top = f.wedge(&g.hodge_star())?;
    let zero_form = top.hodge_star();
    let restricted = zero_form.restrict()?;
    let vol = restricted.hodge_star();
    let full = Label::full(f.n);
    Ok(vol.get(full).map(|c| c.mean()).unwrap_or_else(<F::Scalar as num::Zero>::zero))
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!("exponent {p} must be a finite number >= 1")));
    }
    Ok(())
}

fn pointwise_l2(fields: &[&GridField], len: usize) -> Vec<f64> {
    let mut acc = vec![0.0; len];
    for f in fields {
        for (a, v) in acc.iter_mut().zip(f.data()) {
            *a += v * v;
        }
    }
    acc.iter_mut().for_each(|a| *a = a.sqrt());
    acc
}

fn lp_of_samples(vals: &[f64], p: f64) -> f64 {
    let m = vals.iter().map(|v| v.abs().powf(p)).sum::<f64>() / vals.len() as f64;
    m.powf(1.0 / p)
}

/// `(∫ (Σ_I |F_I|^2)^{p/2})^{1/p}` against the normalized measure.
pub fn lp_norm(f: &Form<GridField>, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let len = f.field_shape().len();
    let fields: Vec<&GridField> = f.components().map(|(_, c)| c).collect();
    if fields.is_empty() {
        return Ok(0.0);
    }
    Ok(lp_of_samples(&pointwise_l2(&fields, len), p))
}

/// `(Σ_I Σ_{|β| <= a} ‖∂^β F_I‖_p^p)^{1/p}` over source-variable derivatives.
pub fn sobolev_norm(f: &Form<GridField>, a: u32, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let n = f.source_dim();
    let mut acc = 0.0;
    for (_, c) in f.components() {
        let spec = c.prepare();
        for s in 0..=a {
            for beta in enum_multiindices(n, s) {
                let d = GridField::differential_sum(&c.grid(), &[(1, beta.exponents(), &spec)]);
                acc += d.mean_abs_pow(p);
            }
        }
    }
    Ok(acc.powf(1.0 / p))
}

/// Lp norm of the full first-derivative array `(∂_j F_I)`, aggregated
/// pointwise in l2.
pub fn grad_lp_norm(f: &Form<GridField>, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let n = f.source_dim();
    let len = f.field_shape().len();
    let mut parts = Vec::new();
    for (_, c) in f.components() {
        let spec = c.prepare();
        for j in 0..n {
            let mut e = vec![0u32; n];
            e[j] = 1;
            parts.push(GridField::differential_sum(&c.grid(), &[(1, &e, &spec)]));
        }
    }
    if parts.is_empty() {
        return Ok(0.0);
    }
    let refs: Vec<&GridField> = parts.iter().collect();
    Ok(lp_of_samples(&pointwise_l2(&refs, len), p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::trig::rat;
    use crate::forms::{Phase, TrigPoly};
    use num::BigRational;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lab(v: &[usize]) -> Label {
        Label::new(v).unwrap()
    }

    fn one(n: usize) -> TrigPoly {
        TrigPoly::constant(n, rat(1, 1))
    }

    pub(crate) fn random_form(n: usize, big: usize, q: usize, rng: &mut ChaCha8Rng) -> Form<TrigPoly> {
        let comps = enum_labels(big, q)
            .unwrap()
            .into_iter()
            .map(|l| (l, TrigPoly::random(n, 2, 2, rng)));
        Form::from_components(n, big, q, n, comps).unwrap()
    }

    #[test]
    fn partial_of_cosine_form() {
        let f = Form::from_components(2, 2, 1, 2, [(lab(&[2]), TrigPoly::cos_axis(2, 0))]).unwrap();
        let d = f.partial(&MultiIndex::new(vec![1, 0])).unwrap();
        let mut s = TrigPoly::sin_axis(2, 0);
        s.scale(&rat(-1, 1));
        assert_eq!(d.get(lab(&[2])), Some(&s));
        let c = Form::from_components(2, 2, 1, 2, [(lab(&[1]), one(2))]).unwrap();
        assert!(c.partial(&MultiIndex::new(vec![1, 1])).unwrap().is_zero());
        let h = Form::from_components(2, 3, 1, 2, [(lab(&[3]), TrigPoly::cos_axis(2, 1))]).unwrap();
        assert!(h.partial(&MultiIndex::new(vec![0, 0, 1])).unwrap().is_zero());
    }

    #[test]
    fn star_in_the_plane() {
        let dx1 = Form::from_components(2, 2, 1, 2, [(lab(&[1]), one(2))]).unwrap();
        let dx2 = Form::from_components(2, 2, 1, 2, [(lab(&[2]), one(2))]).unwrap();
        assert_eq!(dx1.hodge_star(), dx2);
        assert_eq!(dx2.hodge_star(), dx1.scale_int(-1));
        let unit = Form::scalar(3, one(2)).unwrap();
        let vol = unit.hodge_star();
        assert_eq!(vol.degree(), 3);
        assert_eq!(vol.get(Label::full(3)), Some(&one(2)));
    }

    #[test]
    fn star_involution_sign_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for big in 1..=5 {
            for q in 0..=big {
                let f = random_form(1, big, q, &mut rng);
                let sign = if (q * (big - q)) % 2 == 0 { 1 } else { -1 };
                assert_eq!(f.hodge_star().hodge_star(), f.scale_int(sign), "N={big} q={q}");
            }
        }
    }

    #[test]
    fn wedge_laws() {
        let dx = |i: usize| Form::from_components(3, 3, 1, 3, [(lab(&[i]), one(3))]).unwrap();
        assert_eq!(dx(1).wedge(&dx(2)).unwrap(), dx(2).wedge(&dx(1)).unwrap().scale_int(-1));
        let lhs = dx(1).wedge(&dx(2)).unwrap().wedge(&dx(3)).unwrap();
        let rhs = dx(1).wedge(&dx(2).wedge(&dx(3)).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
        let f = Form::scalar(3, TrigPoly::cos_axis(3, 0)).unwrap();
        let g = dx(2);
        let want = Form::from_components(3, 3, 1, 3, [(lab(&[2]), TrigPoly::cos_axis(3, 0))]).unwrap();
        assert_eq!(f.wedge(&g).unwrap(), want);
    }

    #[test]
    fn pairing_examples() {
        let dx1 = Form::from_components(2, 2, 1, 2, [(lab(&[1]), one(2))]).unwrap();
        let dx2 = Form::from_components(2, 2, 1, 2, [(lab(&[2]), one(2))]).unwrap();
        assert_eq!(inner_product(&dx1, &dx2).unwrap(), rat(0, 1));
        let c = Form::from_components(2, 2, 1, 2, [(lab(&[1]), TrigPoly::cos_axis(2, 0))]).unwrap();
        assert_eq!(inner_product(&c, &c).unwrap(), rat(1, 2));
        assert_eq!(inner_product_wedge(&c, &c).unwrap(), rat(1, 2));
    }

    #[test]
    fn wedge_pairing_matches_coordinate_pairing() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..50 {
            let big = 1 + trial % 4;
            let n = 1 + (trial / 4) % big;
            let q = trial % (big + 1);
            let f = random_form(n, big, q, &mut rng);
            let g = random_form(n, big, q, &mut rng);
            assert_eq!(inner_product(&f, &g).unwrap(), inner_product_wedge(&f, &g).unwrap());
        }
    }

    #[test]
    fn norms_of_simple_forms() {
        let c = Form::from_components(1, 1, 0, 1, [(Label::EMPTY, TrigPoly::cos_axis(1, 0))])
            .unwrap()
            .sample(32)
            .unwrap();
        assert!((lp_norm(&c, 2.0).unwrap().powi(2) - 0.5).abs() < 1e-14);
        assert!((sobolev_norm(&c, 1, 2.0).unwrap() - 1.0).abs() < 1e-14);
        let k = Form::from_components(2, 2, 1, 2, [(lab(&[2]), TrigPoly::constant(2, rat(-3, 1)))])
            .unwrap()
            .sample(8)
            .unwrap();
        for p in [1.0, 1.5, 2.0, 7.0] {
            assert!((lp_norm(&k, p).unwrap() - 3.0).abs() < 1e-13);
        }
        assert!(grad_lp_norm(&k, 2.0).unwrap() < 1e-13);
        assert!(lp_norm(&k, 0.5).is_err());
        let s = Form::scalar(1, TrigPoly::sin_axis(1, 0)).unwrap().sample(16).unwrap();
        assert!((grad_lp_norm(&s, 2.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn gradient_norm_is_sobolev_minus_zeroth_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let f = random_form(2, 3, 1, &mut rng).sample(16).unwrap();
            let s2 = sobolev_norm(&f, 1, 2.0).unwrap().powi(2);
            let z2 = sobolev_norm(&f, 0, 2.0).unwrap().powi(2);
            let g2 = grad_lp_norm(&f, 2.0).unwrap().powi(2);
            assert!((s2 - z2 - g2).abs() < 1e-11 * s2.max(1.0));
        }
    }

    #[test]
    fn grid_pairing_matches_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_form(2, 3, 2, &mut rng);
        let g = random_form(2, 3, 2, &mut rng);
        let exact: f64 = inner_product(&f, &g).unwrap().as_f64();
        let grid = inner_product(&f.sample(8).unwrap(), &g.sample(8).unwrap()).unwrap();
        assert!((exact - grid).abs() < 1e-12);
    }

    #[test]
    fn pullback_examples() {
        let dx1 = Form::from_components(2, 2, 1, 2, [(lab(&[1]), one(2))]).unwrap();
        let dx2 = Form::from_components(2, 2, 1, 2, [(lab(&[2]), one(2))]).unwrap();
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let swap = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert_eq!(dx1.pullback(&id).unwrap(), dx1);
        assert_eq!(dx1.pullback(&swap).unwrap(), dx2);
        let f = Form::scalar(2, TrigPoly::monomial(vec![1, 2], Phase::Sin, BigRational::from_integer(3.into()))).unwrap();
        assert_eq!(f.pullback(&id).unwrap(), f);
    }

    #[test]
    fn mismatched_spaces_rejected() {
        let a = Form::<TrigPoly>::zero(2, 3, 1, 2).unwrap();
        let b = Form::<TrigPoly>::zero(2, 3, 2, 2).unwrap();
        assert!(inner_product(&a, &b).is_err());
        assert!(Form::<TrigPoly>::zero(3, 2, 0, 3).is_err());
        let top = Form::<TrigPoly>::zero(2, 2, 3, 2).unwrap();
        assert!(top.is_zero() && top.dense().is_empty());
        let mut c = Form::<TrigPoly>::zero(2, 3, 1, 2).unwrap();
        assert!(c.set(lab(&[1, 2]), one(2)).is_err());
    }
}
