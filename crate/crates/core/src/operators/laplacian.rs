//! Hodge Laplacians `□̃ = T̃T̃* + T̃*T̃` and their coefficient tensors.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{sign_pow, AdjointSign, OperatorSpec};
use crate::error::{Error, Result};
use crate::forms::{Field, Form};
use crate::multiindex::{enum_labels, epsilon, Label};

/// `□̃H`. Terms whose intermediate degree leaves `[0, N]` vanish.
pub fn box_apply<F: Field>(spec: &OperatorSpec, h: &Form<F>) -> Result<Form<F>> {
    let up = spec.apply_t_total(&spec.apply_t_star_total(h)?)?;
    let down = spec.apply_t_star_total(&spec.apply_t_total(h)?)?;
    if h.degree() < spec.increment() {
        return Ok(down);
    }
    up.add(&down)
}

/// Sparse integer tensor `C̃^{MI}_{ℵ(iα)ℵ(iβ)}` at one degree. Multi-indices
/// are positions in the ordering's canonical list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoeffTensor {
    pub q: usize,
    pub entries: BTreeMap<(Label, Label, usize, usize), i64>,
}

#[derive(Serialize)]
struct EntryJson {
    #[serde(rename = "M")]
    m: Label,
    #[serde(rename = "I")]
    i: Label,
    alpha: Vec<u32>,
    beta: Vec<u32>,
    value: i64,
}

impl CoeffTensor {
    fn new(q: usize) -> Self {
        CoeffTensor {
            q,
            entries: BTreeMap::new(),
        }
    }

    fn add(&mut self, key: (Label, Label, usize, usize), v: i64) {
        if v == 0 {
            return;
        }
        let e = self.entries.entry(key).or_insert(0);
        *e += v;
        if *e == 0 {
            self.entries.remove(&key);
        }
    }

    pub fn get(&self, m: Label, i: Label, a: usize, b: usize) -> i64 {
        self.entries.get(&(m, i, a, b)).copied().unwrap_or(0)
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn max_abs(&self) -> i64 {
        self.entries.values().map(|v| v.abs()).max().unwrap_or(0)
    }

    /// Whether the tensor is `δ_{MI} δ_{αβ}` over all labels of degree `q`.
    pub fn is_kronecker(&self, spec: &OperatorSpec) -> bool {
        let labels = enum_labels(spec.ambient_dim(), self.q).unwrap_or_default();
        let m = spec.ordering().len();
        self.entries.len() == labels.len() * m
            && self
                .entries
                .iter()
                .all(|(&(mm, ii, a, b), &v)| mm == ii && a == b && v == 1)
    }

    /// Entries where the two tensors differ, as `(key, self, other)`.
    pub fn diff(&self, other: &CoeffTensor) -> Vec<((Label, Label, usize, usize), i64, i64)> {
        let mut keys: Vec<_> = self.entries.keys().chain(other.entries.keys()).copied().collect();
        keys.sort();
        keys.dedup();
        keys.into_iter()
            .filter_map(|k| {
                let (x, y) = (
                    self.entries.get(&k).copied().unwrap_or(0),
                    other.entries.get(&k).copied().unwrap_or(0),
                );
                (x != y).then_some((k, x, y))
            })
            .collect()
    }

    pub fn to_json(&self, spec: &OperatorSpec) -> serde_json::Value {
        let entries: Vec<EntryJson> = self
            .entries
            .iter()
            .map(|(&(m, i, a, b), &value)| EntryJson {
                m,
                i,
                alpha: spec.alphas()[a].clone(),
                beta: spec.alphas()[b].clone(),
                value,
            })
            .collect();
        serde_json::json!({
            "spec": spec.summary(),
            "q": self.q,
            "nnz": entries.len(),
            "kronecker": self.is_kronecker(spec),
            "entries": entries,
        })
    }
}

fn check_degree(spec: &OperatorSpec, q: usize) -> Result<()> {
    if q > spec.ambient_dim() {
        return Err(Error::DegreeOutOfRange(format!(
            "degree {q} exceeds N = {}",
            spec.ambient_dim()
        )));
    }
    Ok(())
}

/// `Σ_L ε^L_{ℵ(iα)I} ε^L_{ℵ(iβ)M} + Σ_K ε^M_{ℵ(iα)K} ε^I_{ℵ(iβ)K}` by direct
/// summation over `L ∈ I(N, q+l)` and `K ∈ I(N, q-l)`.
pub fn box_coeff_tensor(spec: &OperatorSpec, q: usize) -> Result<CoeffTensor> {
    check_degree(spec, q)?;
    coeff_tensor_within(spec, q, spec.ambient_dim())
}

/// The same sums with every label inside `{1, ..., n}`: the tensor of
/// `𝒯𝒯* + 𝒯*𝒯` on forms over `R^n`.
pub fn restricted_coeff_tensor(spec: &OperatorSpec, q: usize) -> Result<CoeffTensor> {
    if q > spec.source_dim() {
        return Err(Error::DegreeOutOfRange(format!(
            "degree {q} exceeds n = {}",
            spec.source_dim()
        )));
    }
    coeff_tensor_within(spec, q, spec.source_dim())
}

fn coeff_tensor_within(spec: &OperatorSpec, q: usize, big: usize) -> Result<CoeffTensor> {
    let (l, m) = (spec.increment(), spec.ordering().len());
    let mut t = CoeffTensor::new(q);
    if q + l <= big {
        for big_l in enum_labels(big, q + l)? {
            let inside: Vec<(usize, Label, i64)> = (0..m)
                .filter_map(|idx| {
                    let a = spec.aleph(idx);
                    a.is_subset(big_l).then(|| {
                        let rest = big_l.difference(a);
                        (idx, rest, a.concat_sign(rest) as i64)
                    })
                })
                .collect();
            for &(ai, i, sa) in &inside {
                for &(bi, mm, sb) in &inside {
                    t.add((mm, i, ai, bi), sa * sb);
                }
            }
        }
    }
    if q >= l {
        for k in enum_labels(big, q - l)? {
            let outside: Vec<(usize, Label, i64)> = (0..m)
                .filter_map(|idx| {
                    let a = spec.aleph(idx);
                    (a.within(big) && a.is_disjoint(k)).then(|| (idx, a.union(k), a.concat_sign(k) as i64))
                })
                .collect();
            for &(ai, mm, sa) in &outside {
                for &(bi, i, sb) in &outside {
                    t.add((mm, i, ai, bi), sa * sb);
                }
            }
        }
    }
    Ok(t)
}

/// The closed form `(1 + (-1)^{(l-|λ0|)^2}) ε^{a}_{λ0 â} ε^{b}_{λ0 b̂} ε^{â I}_{b̂ M}`
/// with `a = ℵ(iα)`, `b = ℵ(iβ)`, `λ0 = a ∩ b`, `â = a \ λ0`, `b̂ = b \ λ0`.
pub fn box_coeff_closed_form(spec: &OperatorSpec, q: usize) -> Result<CoeffTensor> {
    check_degree(spec, q)?;
    let (big, l, m) = (spec.ambient_dim(), spec.increment(), spec.ordering().len());
    let mut t = CoeffTensor::new(q);
    let labels = enum_labels(big, q)?;
    for ai in 0..m {
        let a = spec.aleph(ai);
        for bi in 0..m {
            let b = spec.aleph(bi);
            let lam = a.intersection(b);
            let d = l - lam.len();
            let factor = 1 + sign_pow(d * d);
            if factor == 0 {
                continue;
            }
            let (ah, bh) = (a.difference(lam), b.difference(lam));
            let sa = epsilon(&lam.indices(), &ah.indices(), &a.indices()) as i64;
            let sb = epsilon(&lam.indices(), &bh.indices(), &b.indices()) as i64;
            for &i in &labels {
                if !ah.is_disjoint(i) || !bh.is_subset(ah.union(i)) {
                    continue;
                }
                let mm = ah.union(i).difference(bh);
                let target: Vec<usize> = bh.indices().into_iter().chain(mm.indices()).collect();
                let s = epsilon(&ah.indices(), &i.indices(), &target) as i64;
                t.add((mm, i, ai, bi), factor * sa * sb * s);
            }
        }
    }
    Ok(t)
}

/// `s Σ C̃^{MI}_{ab} ∂^{α+β} H_I dz^M` with `s = (-1)^k` for
/// [`AdjointSign::Derived`] and `(-1)^{k + lN}` for [`AdjointSign::Printed`].
pub fn box_contract<F: Field>(
    spec: &OperatorSpec,
    tensor: &CoeffTensor,
    h: &Form<F>,
    sign: AdjointSign,
) -> Result<Form<F>> {
    if h.degree() != tensor.q {
        return Err(Error::DegreeOutOfRange(format!(
            "tensor has degree {}, form has degree {}",
            tensor.q,
            h.degree()
        )));
    }
    let s = match sign {
        AdjointSign::Derived => sign_pow(spec.order() as usize),
        AdjointSign::Printed => sign_pow(spec.order() as usize + spec.increment() * spec.ambient_dim()),
    };
    let mut out = Form::zero(h.source_dim(), h.ambient_dim(), h.degree(), h.field_shape().clone())?;
    let alphas = spec.alphas();
    for (&(mm, i, a, b), &c) in &tensor.entries {
        let Some(hi) = h.get(i) else { continue };
        let mix: Vec<u32> = alphas[a].iter().zip(&alphas[b]).map(|(x, y)| x + y).collect();
        out.accumulate(mm, &hi.derivative(&mix), s * c);
    }
    Ok(out)
}

/// `□̃H` through the direct-summation tensor.
pub fn box_apply_tensor<F: Field>(spec: &OperatorSpec, h: &Form<F>) -> Result<Form<F>> {
    let t = box_coeff_tensor(spec, h.degree())?;
    box_contract(spec, &t, h, AdjointSign::Derived)
}
