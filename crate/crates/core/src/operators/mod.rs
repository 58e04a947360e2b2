//! The operators `T̃`, `𝒯` and their adjoints, compiled from an ordering
//! into sparse label-coupling tables.

mod invariance;
mod laplacian;

pub use invariance::{
    invariance_defect, invariance_residual, plane_rotation, random_rotation, search_rotations,
    RotationSearch, DEFECT_THRESHOLD,
};
pub use laplacian::{
    box_apply, box_apply_tensor, box_coeff_closed_form, box_coeff_tensor, box_contract,
    restricted_coeff_tensor, CoeffTensor,
};

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::{Field, Form};
use crate::multiindex::{enum_labels, make_ordering, Label, MultiIndex, Ordering, OrderingKind};

/// One output row of a coupling table: `out = Σ sign · ∂^alpha input`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CouplingRow {
    pub out: Label,
    pub terms: Vec<(i32, usize, Label)>,
}

/// Sparse table for one operator at one input degree. Multi-indices are
/// referenced by their position in the ordering's canonical list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coupling {
    pub q_in: usize,
    pub q_out: usize,
    pub rows: Vec<CouplingRow>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum TableKind {
    Forward,
    Transpose,
}

/// Sign convention for the coordinate adjoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjointSign {
    /// `(-1)^k`: the sign from integrating `k` derivatives by parts.
    Derived,
    /// `(-1)^{k + N l}`, as printed in the coordinate display.
    Printed,
}

/// `(n, k, l, N, ℵ)`: everything that determines one operator.
#[derive(Clone, Debug)]
pub struct OperatorSpec {
    n: usize,
    k: u32,
    l: usize,
    big_n: usize,
    ordering: Arc<Ordering>,
    alphas: Arc<Vec<Vec<u32>>>,
    cache: Arc<Mutex<HashMap<(TableKind, usize), Arc<Coupling>>>>,
}

impl PartialEq for OperatorSpec {
    fn eq(&self, other: &Self) -> bool {
        self.ordering == other.ordering
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpecSummary {
    pub n: usize,
    pub k: u32,
    pub l: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub ordering: String,
    pub ordering_hash: String,
}

pub(crate) fn sign_pow(e: usize) -> i64 {
    if e.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

impl OperatorSpec {
    pub fn new(ordering: Ordering) -> Result<Self> {
        let (n, k, l, big_n) = (
            ordering.source_dim(),
            ordering.order(),
            ordering.increment(),
            ordering.ambient_dim(),
        );
        if l == 0 || l as u32 > k.max(1) {
            return Err(Error::InvalidArgument(format!("increment {l} outside 1..={k}")));
        }
        if big_n + 1 < n + l {
            return Err(Error::InvalidArgument(format!(
                "ambient dimension {big_n} violates N >= n-1+l = {}",
                n - 1 + l
            )));
        }
        let alphas = ordering
            .multiindices()
            .iter()
            .map(|a| a.exponents().to_vec())
            .collect();
        Ok(OperatorSpec {
            n,
            k,
            l,
            big_n,
            ordering: Arc::new(ordering),
            alphas: Arc::new(alphas),
            cache: Arc::new(Mutex::new(HashMap::new())),
        })
    }

    /// Builds the spec for an admissible `(n, k, l)` with the ambient
    /// dimension solved from the increment equation.
    pub fn build(n: usize, k: u32, l: usize, kind: OrderingKind) -> Result<Self> {
        let rep = crate::increments::admissible_increments(n as u64, k as u64)?;
        let big_n = rep.ambient_for(l as u64).ok_or_else(|| {
            Error::InvalidArgument(format!("{l} is not an admissible increment for ({n}, {k})"))
        })? as usize;
        OperatorSpec::new(make_ordering(n, k, l, big_n, kind)?)
    }

    pub fn source_dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> u32 {
        self.k
    }

    pub fn increment(&self) -> usize {
        self.l
    }

    pub fn ambient_dim(&self) -> usize {
        self.big_n
    }

    pub fn ordering(&self) -> &Ordering {
        &self.ordering
    }

    /// Exponent vectors (over the source variables) in canonical order.
    pub fn alphas(&self) -> &[Vec<u32>] {
        &self.alphas
    }

    /// `ℵ(iα)` for the `idx`-th multi-index.
    pub fn aleph(&self, idx: usize) -> Label {
        self.ordering.label(idx)
    }

    pub fn multiindex(&self, idx: usize) -> &MultiIndex {
        &self.ordering.multiindices()[idx]
    }

    pub fn summary(&self) -> SpecSummary {
        SpecSummary {
            n: self.n,
            k: self.k,
            l: self.l,
            big_n: self.big_n,
            ordering: self.ordering.kind().name().into(),
            ordering_hash: self.ordering.hash(),
        }
    }

    fn table(&self, kind: TableKind, q: usize) -> Arc<Coupling> {
        if let Some(t) = self.cache.lock().expect("cache lock").get(&(kind, q)) {
            return t.clone();
        }
        let t = Arc::new(match kind {
            TableKind::Forward => self.compile_forward(q),
            TableKind::Transpose => self.compile_transpose(q),
        });
        self.cache
            .lock()
            .expect("cache lock")
            .entry((kind, q))
            .or_insert(t)
            .clone()
    }

    /// Table of `T̃` on `q`-forms: `(T̃F)_L = Σ ε^{ℵ(iα) I}_L ∂^α F_I`.
    pub fn forward_table(&self, q: usize) -> Arc<Coupling> {
        self.table(TableKind::Forward, q)
    }

    /// Transposed table on `q`-forms (`q >= l`):
    /// `V ↦ Σ ε^{ℵ(iβ) V}_I ∂^β H_I` with `I = ℵ(iβ) ∪ V`.
    pub fn transpose_table(&self, q: usize) -> Arc<Coupling> {
        self.table(TableKind::Transpose, q)
    }

    fn compile_forward(&self, q: usize) -> Coupling {
        let mut rows: BTreeMap<Label, Vec<(i32, usize, Label)>> = BTreeMap::new();
        if q + self.l <= self.big_n {
            let inputs = enum_labels(self.big_n, q).expect("degree in range");
            for idx in 0..self.ordering.len() {
                let a = self.aleph(idx);
                for &i in &inputs {
                    let s = a.concat_sign(i);
                    if s != 0 {
                        rows.entry(a.union(i)).or_default().push((s, idx, i));
                    }
                }
            }
        }
        Coupling {
            q_in: q,
            q_out: q + self.l,
            rows: rows.into_iter().map(|(out, terms)| CouplingRow { out, terms }).collect(),
        }
    }

    fn compile_transpose(&self, q: usize) -> Coupling {
        let mut rows: BTreeMap<Label, Vec<(i32, usize, Label)>> = BTreeMap::new();
        if q >= self.l && q <= self.big_n {
            let outputs = enum_labels(self.big_n, q - self.l).expect("degree in range");
            for idx in 0..self.ordering.len() {
                let b = self.aleph(idx);
                for &v in &outputs {
                    let s = b.concat_sign(v);
                    if s != 0 {
                        rows.entry(v).or_default().push((s, idx, b.union(v)));
                    }
                }
            }
        }
        Coupling {
            q_in: q,
            q_out: q.saturating_sub(self.l),
            rows: rows.into_iter().map(|(out, terms)| CouplingRow { out, terms }).collect(),
        }
    }

    fn check_form<F: Field>(&self, f: &Form<F>) -> Result<()> {
        if f.source_dim() != self.n || f.ambient_dim() != self.big_n {
            return Err(Error::DimensionMismatch(format!(
                "form over (n={}, N={}) does not match operator (n={}, N={})",
                f.source_dim(),
                f.ambient_dim(),
                self.n,
                self.big_n
            )));
        }
        Ok(())
    }

    /// Applies a table with an overall sign.
    pub fn apply_table<F: Field>(&self, table: &Coupling, f: &Form<F>, sign: i64) -> Form<F> {
        let shape = f.field_shape().clone();
        let prepared: HashMap<Label, F::Prepared> =
            f.components().map(|(l, c)| (l, c.prepare())).collect();
        let outs: Vec<(Label, F)> = table
            .rows
            .par_iter()
            .filter_map(|row| {
                let terms: Vec<(i64, &[u32], &F::Prepared)> = row
                    .terms
                    .iter()
                    .filter_map(|(s, idx, inp)| {
                        prepared
                            .get(inp)
                            .map(|p| (*s as i64 * sign, self.alphas[*idx].as_slice(), p))
                    })
                    .collect();
                if terms.is_empty() {
                    return None;
                }
                let v = F::differential_sum(&shape, &terms);
                (!v.is_zero()).then_some((row.out, v))
            })
            .collect();
        Form::from_components(self.n, self.big_n, table.q_out, shape, outs).expect("table output is well formed")
    }

    /// `T̃F`; the result has degree `q + l` and is the overflow zero form when
    /// that exceeds `N`.
    pub fn apply_t_total<F: Field>(&self, f: &Form<F>) -> Result<Form<F>> {
        self.check_form(f)?;
        let q = f.degree();
        if q + self.l > self.big_n {
            return Form::zero(self.n, self.big_n, q + self.l, f.field_shape().clone());
        }
        Ok(self.apply_table(&self.forward_table(q), f, 1))
    }

    /// Star-conjugation adjoint, `(-1)^{k + q(N-l-q)} *T̃*` with `q` the output
    /// degree; zero below degree `l`.
    pub fn apply_t_star_total<F: Field>(&self, g: &Form<F>) -> Result<Form<F>> {
        self.check_form(g)?;
        let qg = g.degree();
        if qg < self.l || qg > self.big_n {
            return Form::zero(self.n, self.big_n, qg.saturating_sub(self.l), g.field_shape().clone());
        }
        let q = qg - self.l;
        let sign = sign_pow(self.k as usize + q * (self.big_n - self.l - q));
        let inner = self.apply_t_total(&g.hodge_star())?;
        Ok(inner.hodge_star().scale_int(sign))
    }

    /// Coordinate adjoint `(T̃*H)_V = s Σ ε^{ℵ(iβ) V}_I ∂^β H_I`.
    pub fn apply_t_star_coord<F: Field>(&self, g: &Form<F>, sign: AdjointSign) -> Result<Form<F>> {
        self.check_form(g)?;
        let qg = g.degree();
        if qg < self.l || qg > self.big_n {
            return Form::zero(self.n, self.big_n, qg.saturating_sub(self.l), g.field_shape().clone());
        }
        let s = match sign {
            AdjointSign::Derived => sign_pow(self.k as usize),
            AdjointSign::Printed => sign_pow(self.k as usize + self.big_n * self.l),
        };
        Ok(self.apply_table(&self.transpose_table(qg), g, s))
    }

    /// `𝒯 = i* T̃ π*` on forms over `R^n`.
    pub fn apply_top<F: Field>(&self, f: &Form<F>) -> Result<Form<F>> {
        self.check_source(f)?;
        let ext = f.extend(self.big_n)?;
        self.apply_t_total(&ext)?.restrict()
    }

    /// `(-1)^{k + q(n-l-q)} *_n 𝒯 *_n` with `q` the output degree.
    pub fn apply_top_star<F: Field>(&self, g: &Form<F>) -> Result<Form<F>> {
        self.check_source(g)?;
        let qg = g.degree();
        let n = self.n;
        if qg < self.l || qg > n {
            return Form::zero(n, n, qg.saturating_sub(self.l), g.field_shape().clone());
        }
        let q = qg - self.l;
        let sign = sign_pow(self.k as usize + q * (n - self.l - q));
        Ok(self.apply_top(&g.hodge_star())?.hodge_star().scale_int(sign))
    }

    /// `i* T̃* π*`, the adjoint of `𝒯` assembled from the coordinate formula.
    pub fn apply_top_star_coord<F: Field>(&self, g: &Form<F>) -> Result<Form<F>> {
        self.check_source(g)?;
        let ext = g.extend(self.big_n)?;
        self.apply_t_star_coord(&ext, AdjointSign::Derived)?.restrict()
    }

    fn check_source<F: Field>(&self, f: &Form<F>) -> Result<()> {
        if self.n < self.l {
            return Err(Error::Precondition(format!(
                "𝒯 needs n >= l, got n={} l={}",
                self.n, self.l
            )));
        }
        if f.source_dim() != self.n || f.ambient_dim() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "𝒯 acts on forms over R^{}; got (n={}, N={})",
                self.n,
                f.source_dim(),
                f.ambient_dim()
            )));
        }
        Ok(())
    }
}

/// `T̃F`, rejecting `q + l > N`.
pub fn apply_t<F: Field>(spec: &OperatorSpec, f: &Form<F>) -> Result<Form<F>> {
    if f.degree() + spec.l > spec.big_n {
        return Err(Error::DegreeOutOfRange(format!(
            "q + l = {} exceeds N = {}",
            f.degree() + spec.l,
            spec.big_n
        )));
    }
    spec.apply_t_total(f)
}

/// `T̃*G` by star conjugation, rejecting `q < l`.
pub fn apply_t_star<F: Field>(spec: &OperatorSpec, g: &Form<F>) -> Result<Form<F>> {
    if g.degree() < spec.l {
        return Err(Error::DegreeOutOfRange(format!(
            "adjoint needs degree >= {}, got {}",
            spec.l,
            g.degree()
        )));
    }
    spec.apply_t_star_total(g)
}

pub fn apply_top<F: Field>(spec: &OperatorSpec, f: &Form<F>) -> Result<Form<F>> {
    spec.apply_top(f)
}

pub fn apply_top_star<F: Field>(spec: &OperatorSpec, g: &Form<F>) -> Result<Form<F>> {
    spec.apply_top_star(g)
}

/// Outcome of applying `T̃∘T̃` to probes.
#[derive(Clone, Debug, Serialize)]
pub struct CompositionReport {
    pub q: usize,
    pub probes: usize,
    /// Largest coefficient magnitude of `T̃T̃F` over the probes.
    pub max_residual: f64,
    /// Largest coefficient magnitude of the single-orientation sum.
    pub max_single: f64,
    /// `1 + (-1)^{l^2}`.
    pub factor: i64,
    /// Whether `T̃T̃F = factor · single` held for every probe.
    pub factor_identity: bool,
}

/// `S_M = Σ_{α<β, I} ε^{ℵ(iβ) ℵ(iα) I}_M ∂^{α+β} F_I`, each unordered pair
/// counted once.
pub fn single_orientation_sum<F: Field>(spec: &OperatorSpec, f: &Form<F>) -> Result<Form<F>> {
    spec.check_form(f)?;
    let q = f.degree();
    let l = spec.l;
    let shape = f.field_shape().clone();
    let mut out = Form::zero(spec.n, spec.big_n, q + 2 * l, shape)?;
    if q + 2 * l > spec.big_n {
        return Ok(out);
    }
    let m = spec.ordering.len();
    for a_idx in 0..m {
        for b_idx in a_idx + 1..m {
            let (a, b) = (spec.aleph(a_idx), spec.aleph(b_idx));
            if !a.is_disjoint(b) {
                continue;
            }
            let mut mix: Vec<u32> = spec.alphas[a_idx].clone();
            mix.iter_mut().zip(&spec.alphas[b_idx]).for_each(|(x, y)| *x += y);
            for (i, c) in f.components() {
                let ai = a.concat_sign(i);
                if ai == 0 || !b.is_disjoint(a.union(i)) {
                    continue;
                }
                let s = b.concat_sign(a.union(i)) * ai;
                out.accumulate(a.union(b).union(i), &c.derivative(&mix), s as i64);
            }
        }
    }
    Ok(out)
}

/// Applies `T̃∘T̃` to each probe and checks it against the single-orientation
/// sum times `1 + (-1)^{l^2}`.
pub fn compose_tt<F: Field>(spec: &OperatorSpec, q: usize, probes: &[Form<F>]) -> Result<CompositionReport> {
    if q + 2 * spec.l > spec.big_n {
        return Err(Error::DegreeOutOfRange(format!(
            "q + 2l = {} exceeds N = {}",
            q + 2 * spec.l,
            spec.big_n
        )));
    }
    let factor = 1 + sign_pow(spec.l * spec.l);
    let mut rep = CompositionReport {
        q,
        probes: probes.len(),
        max_residual: 0.0,
        max_single: 0.0,
        factor,
        factor_identity: true,
    };
    for f in probes {
        if f.degree() != q {
            return Err(Error::DegreeOutOfRange(format!("probe has degree {}, expected {q}", f.degree())));
        }
        let tt = spec.apply_t_total(&spec.apply_t_total(f)?)?;
        let single = single_orientation_sum(spec, f)?;
        rep.max_residual = rep.max_residual.max(tt.max_abs());
        rep.max_single = rep.max_single.max(single.max_abs());
        if !tt.sub(&single.scale_int(factor))?.is_zero() {
            rep.factor_identity = false;
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests;
