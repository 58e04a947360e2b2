//! Multi-indices, labels, permutation signs and the orderings that pair
//! embedded multi-indices with labels.
//!
//! Labels are stored as bitmasks over `{1, ..., 64}`; every label used by the
//! operators lives in an ambient dimension far below that limit.

use std::collections::HashMap;
use std::fmt;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::increments::binom_u64;

/// Largest ambient dimension a [`Label`] can index.
pub const MAX_DIM: usize = 64;

/// Exponent vector of a mixed partial derivative.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// `k` times the `j`-th unit vector (0-based `j`).
    pub fn pure_power(n: usize, j: usize, k: u32) -> Self {
        let mut e = vec![0; n];
        e[j] = k;
        MultiIndex(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Zero-padding into a larger ambient dimension.
    pub fn embed(&self, ambient: usize) -> Result<MultiIndex> {
        if ambient < self.0.len() {
            return invalid(format!(
                "cannot embed a multi-index over {} variables into dimension {}",
                self.0.len(),
                ambient
            ));
        }
        let mut e = self.0.clone();
        e.resize(ambient, 0);
        Ok(MultiIndex(e))
    }

    /// Drops trailing slots; fails when a dropped slot is nonzero.
    pub fn restrict(&self, n: usize) -> Result<MultiIndex> {
        if self.0.iter().skip(n).any(|&a| a != 0) {
            return invalid(format!("multi-index {self} has support beyond slot {n}"));
        }
        Ok(MultiIndex(self.0[..n.min(self.0.len())].to_vec()))
    }

    /// Componentwise sum.
    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.0.len(), other.0.len());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Whether `self` precedes `other` in the canonical graded
    /// reverse-lexicographic enumeration.
    pub fn grevlex_before(&self, other: &MultiIndex) -> bool {
        grevlex_cmp(self, other) == std::cmp::Ordering::Less
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.0.iter().join(","))
    }
}

// Descending grevlex: higher total degree first; among equal degree, the
// larger monomial is the one whose last nonzero entry of (a - b) is negative.
fn grevlex_cmp(a: &MultiIndex, b: &MultiIndex) -> std::cmp::Ordering {
    use std::cmp::Ordering::*;
    match b.order().cmp(&a.order()) {
        Equal => {}
        o => return o,
    }
    for (x, y) in a.0.iter().zip(&b.0).rev() {
        if x != y {
            return if x < y { Less } else { Greater };
        }
    }
    Equal
}

/// All multi-indices over `n` variables of total order `k`, in graded
/// reverse-lexicographic order (descending).
pub fn enum_multiindices(n: usize, k: u32) -> Vec<MultiIndex> {
    assert!(n >= 1, "enum_multiindices needs n >= 1");
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    compositions(&mut cur, 0, k, &mut out);
    out.sort_by(grevlex_cmp);
    out
}

fn compositions(cur: &mut Vec<u32>, pos: usize, left: u32, out: &mut Vec<MultiIndex>) {
    if pos + 1 == cur.len() {
        cur[pos] = left;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    for a in (0..=left).rev() {
        cur[pos] = a;
        compositions(cur, pos + 1, left - a, out);
    }
    cur[pos] = 0;
}

/// A strictly increasing tuple of indices in `{1, ..., 64}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Label(u64);

impl Label {
    pub const EMPTY: Label = Label(0);

    /// Builds a label from 1-based indices, which must be strictly increasing.
    pub fn new(indices: &[usize]) -> Result<Label> {
        let mut bits = 0u64;
        let mut prev = 0usize;
        for &i in indices {
            if i == 0 || i > MAX_DIM {
                return invalid(format!("label index {i} outside 1..={MAX_DIM}"));
            }
            if i <= prev {
                return invalid(format!("label {indices:?} is not strictly increasing"));
            }
            prev = i;
            bits |= 1 << (i - 1);
        }
        Ok(Label(bits))
    }

    /// Label with the given index set, in any order; duplicates are rejected.
    pub fn from_set(indices: &[usize]) -> Result<Label> {
        let mut v = indices.to_vec();
        v.sort_unstable();
        Label::new(&v)
    }

    pub fn from_bits(bits: u64) -> Label {
        Label(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    /// `(1, ..., n)`.
    pub fn full(n: usize) -> Label {
        assert!(n <= MAX_DIM);
        if n == MAX_DIM {
            Label(u64::MAX)
        } else {
            Label((1u64 << n) - 1)
        }
    }

    pub fn singleton(i: usize) -> Label {
        assert!((1..=MAX_DIM).contains(&i));
        Label(1 << (i - 1))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn indices(self) -> Vec<usize> {
        let mut v = Vec::with_capacity(self.len());
        let mut b = self.0;
        while b != 0 {
            let t = b.trailing_zeros() as usize;
            v.push(t + 1);
            b &= b - 1;
        }
        v
    }

    pub fn contains(self, i: usize) -> bool {
        (1..=MAX_DIM).contains(&i) && self.0 & (1 << (i - 1)) != 0
    }

    pub fn max_index(self) -> usize {
        if self.0 == 0 {
            0
        } else {
            64 - self.0.leading_zeros() as usize
        }
    }

    pub fn is_disjoint(self, other: Label) -> bool {
        self.0 & other.0 == 0
    }

    pub fn is_subset(self, other: Label) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: Label) -> Label {
        Label(self.0 | other.0)
    }

    pub fn intersection(self, other: Label) -> Label {
        Label(self.0 & other.0)
    }

    pub fn difference(self, other: Label) -> Label {
        Label(self.0 & !other.0)
    }

    /// Whether every index is at most `n`.
    pub fn within(self, n: usize) -> bool {
        self.max_index() <= n
    }

    /// Sign carrying the concatenation `self ‖ other` to the sorted union;
    /// zero when the two share an index.
    pub fn concat_sign(self, other: Label) -> i32 {
        if !self.is_disjoint(other) {
            return 0;
        }
        // Inversions: pairs (a in self, b in other) with a > b.
        let mut inv = 0u32;
        let mut b = self.0;
        while b != 0 {
            let t = b.trailing_zeros();
            let below = if t == 0 { 0 } else { other.0 & ((1u64 << t) - 1) };
            inv += below.count_ones();
            b &= b - 1;
        }
        if inv.is_multiple_of(2) {
            1
        } else {
            -1
        }
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Label {
    /// Shorter labels first, then lexicographic on the index sequence.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.indices().cmp(&other.indices()))
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.indices().iter().join(","))
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.indices().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        Label::new(&v).map_err(serde::de::Error::custom)
    }
}

/// All strictly increasing `q`-tuples over `{1, ..., n}` in lexicographic order.
pub fn enum_labels(n: usize, q: usize) -> Result<Vec<Label>> {
    if q > n {
        return invalid(format!("no {q}-labels over {n} indices"));
    }
    if n > MAX_DIM {
        return invalid(format!("dimension {n} exceeds {MAX_DIM}"));
    }
    Ok((1..=n)
        .combinations(q)
        .map(|c| Label::new(&c).expect("combinations are increasing"))
        .collect())
}

/// Sign of the permutation carrying `prefix ‖ body` to `target`; zero when
/// the contents differ or an index repeats.
pub fn epsilon(prefix: &[usize], body: &[usize], target: &[usize]) -> i32 {
    let seq: Vec<usize> = prefix.iter().chain(body).copied().collect();
    if seq.len() != target.len() {
        return 0;
    }
    let mut pos = Vec::with_capacity(seq.len());
    for s in &seq {
        match target.iter().position(|t| t == s) {
            Some(p) => pos.push(p),
            None => return 0,
        }
    }
    if pos.iter().unique().count() != pos.len() {
        return 0;
    }
    // `target` itself may repeat an index; the bijection test above catches
    // that only when `seq` is shorter, so check explicitly.
    if target.iter().unique().count() != target.len() {
        return 0;
    }
    let inv = (0..pos.len())
        .flat_map(|i| (i + 1..pos.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| pos[i] > pos[j])
        .count();
    if inv % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Sorted complement of `label` in `{1, ..., ambient}` together with the sign
/// carrying `label ‖ complement` to `(1, ..., ambient)`, which is the Hodge
/// star sign of `dx^label`.
pub fn complement(label: Label, ambient: usize) -> Result<(Label, i32)> {
    if !label.within(ambient) {
        return invalid(format!("label {label} is not inside dimension {ambient}"));
    }
    let comp = Label::full(ambient).difference(label);
    Ok((comp, label.concat_sign(comp)))
}

/// How an ordering assigns labels to the enumerated multi-indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "permutation")]
pub enum OrderingKind {
    /// The i-th multi-index (grevlex) gets the i-th label (lexicographic).
    Lexicographic,
    /// Pure powers `k e_j` get the singletons `(j)`; the rest follow in order.
    Diagonal,
    /// `(k,0,..)`, `(1,k-1,0,..)`, ..., `(1,0,..,k-1)` get `(1)`, ..., `(n)`.
    Chained,
    /// Explicit table: multi-index `i` gets lexicographic label `perm[i]`.
    Custom(Vec<usize>),
}

impl OrderingKind {
    pub fn name(&self) -> &'static str {
        match self {
            OrderingKind::Lexicographic => "lexicographic",
            OrderingKind::Diagonal => "diagonal",
            OrderingKind::Chained => "chained",
            OrderingKind::Custom(_) => "custom",
        }
    }
}

/// Bijection between the embedded multi-indices `iS(n,k)` and the labels
/// `I(N, l)`.
#[derive(Clone, Debug)]
pub struct Ordering {
    n: usize,
    k: u32,
    l: usize,
    ambient: usize,
    kind: OrderingKind,
    multiindices: Vec<MultiIndex>,
    forward: Vec<Label>,
    backward: HashMap<Label, usize>,
}

impl PartialEq for Ordering {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.k == other.k
            && self.l == other.l
            && self.ambient == other.ambient
            && self.forward == other.forward
    }
}

impl Ordering {
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
        self.ambient
    }

    pub fn kind(&self) -> &OrderingKind {
        &self.kind
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    /// Source multi-indices in canonical order.
    pub fn multiindices(&self) -> &[MultiIndex] {
        &self.multiindices
    }

    /// Label assigned to the `idx`-th multi-index.
    pub fn label(&self, idx: usize) -> Label {
        self.forward[idx]
    }

    pub fn labels(&self) -> &[Label] {
        &self.forward
    }

    /// Label assigned to a source multi-index.
    pub fn forward(&self, alpha: &MultiIndex) -> Option<Label> {
        self.multiindices
            .iter()
            .position(|a| a == alpha)
            .map(|i| self.forward[i])
    }

    /// Index of the multi-index paired with `label`.
    pub fn backward(&self, label: Label) -> Option<usize> {
        self.backward.get(&label).copied()
    }

    /// `(multi-index, label)` pairs in canonical multi-index order.
    pub fn pairs(&self) -> impl Iterator<Item = (&MultiIndex, Label)> {
        self.multiindices.iter().zip(self.forward.iter().copied())
    }

    /// Canonical JSON table: `[[multiindex],[label]]` pairs.
    pub fn table(&self) -> Vec<(MultiIndex, Label)> {
        self.pairs().map(|(a, l)| (a.clone(), l)).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n,
            "k": self.k,
            "l": self.l,
            "N": self.ambient,
            "kind": self.kind.name(),
            "table": self.table(),
        })
    }

    /// Parses either the object written by [`Ordering::to_json`] or a bare
    /// table of `[[multiindex],[label]]` pairs.
    pub fn from_json(value: &serde_json::Value) -> Result<Ordering> {
        let table_val = match value {
            serde_json::Value::Array(_) => value.clone(),
            serde_json::Value::Object(o) => o
                .get("table")
                .cloned()
                .ok_or_else(|| Error::Serialization("ordering object without `table`".into()))?,
            _ => return Err(Error::Serialization("ordering must be an array or object".into())),
        };
        let table: Vec<(MultiIndex, Label)> = serde_json::from_value(table_val)
            .map_err(|e| Error::Serialization(e.to_string()))?;
        let first = table
            .first()
            .ok_or_else(|| Error::Ordering("empty ordering table".into()))?;
        let n = first.0.dim();
        let k = first.0.order();
        let l = first.1.len();
        let ambient = match value.get("N").and_then(|v| v.as_u64()) {
            Some(v) => v as usize,
            None => {
                let m = table.len() as u64;
                (l..=MAX_DIM)
                    .find(|&nn| binom_u64(nn as u64, l as u64) == Some(m))
                    .ok_or_else(|| Error::Ordering("cannot infer ambient dimension".into()))?
            }
        };
        Ordering::from_table(n, k, l, ambient, &table)
    }

    /// Validates an explicit table and turns it into an ordering.
    pub fn from_table(
        n: usize,
        k: u32,
        l: usize,
        ambient: usize,
        table: &[(MultiIndex, Label)],
    ) -> Result<Ordering> {
        check_cardinality(n, k, l, ambient)?;
        let multis = enum_multiindices(n, k);
        let lex = enum_labels(ambient, l)?;
        if table.len() != multis.len() {
            return Err(Error::Ordering(format!(
                "table has {} rows, expected {}",
                table.len(),
                multis.len()
            )));
        }
        let mut perm = vec![usize::MAX; multis.len()];
        for (alpha, label) in table {
            let i = multis
                .iter()
                .position(|a| a == alpha)
                .ok_or_else(|| Error::Ordering(format!("{alpha} is not in S({n},{k})")))?;
            let j = lex
                .iter()
                .position(|x| x == label)
                .ok_or_else(|| Error::Ordering(format!("{label} is not in I({ambient},{l})")))?;
            if perm[i] != usize::MAX {
                return Err(Error::Ordering(format!("{alpha} assigned twice")));
            }
            perm[i] = j;
        }
        make_ordering(n, k, l, ambient, OrderingKind::Custom(perm))
    }

    /// Short stable digest of the table, used to tag reports.
    pub fn hash(&self) -> String {
        let s = serde_json::to_string(&self.table()).expect("table serializes");
        let digest = Sha256::digest(s.as_bytes());
        hex::encode(&digest[..8])
    }
}

fn check_cardinality(n: usize, k: u32, l: usize, ambient: usize) -> Result<u64> {
    if n == 0 {
        return invalid("source dimension must be positive");
    }
    if ambient < n {
        return invalid(format!("ambient dimension {ambient} below source dimension {n}"));
    }
    if ambient > MAX_DIM {
        return invalid(format!("ambient dimension {ambient} exceeds {MAX_DIM}"));
    }
    let m = binom_u64((n as u64) - 1 + k as u64, k as u64)
        .ok_or_else(|| Error::Ordering("multi-index count overflows".into()))?;
    let labels = binom_u64(ambient as u64, l as u64)
        .ok_or_else(|| Error::Ordering("label count overflows".into()))?;
    if m != labels {
        return Err(Error::Ordering(format!(
            "C({ambient},{l}) = {labels} differs from C({},{k}) = {m}",
            n - 1 + k as usize
        )));
    }
    Ok(m)
}

/// Builds an ordering of the given kind.
pub fn make_ordering(
    n: usize,
    k: u32,
    l: usize,
    ambient: usize,
    kind: OrderingKind,
) -> Result<Ordering> {
    let m = check_cardinality(n, k, l, ambient)? as usize;
    let multis = enum_multiindices(n, k);
    let lex = enum_labels(ambient, l)?;
    debug_assert_eq!(multis.len(), m);

    let forward: Vec<Label> = match &kind {
        OrderingKind::Lexicographic => lex.clone(),
        OrderingKind::Diagonal | OrderingKind::Chained => {
            if l != 1 {
                return Err(Error::Ordering(format!(
                    "{} orderings need increment 1, got {l}",
                    kind.name()
                )));
            }
            let heads: Vec<MultiIndex> = if kind == OrderingKind::Diagonal {
                (0..n).map(|j| MultiIndex::pure_power(n, j, k)).collect()
            } else {
                if k < 2 {
                    return Err(Error::Ordering("chained ordering needs k >= 2".into()));
                }
                (0..n)
                    .map(|j| {
                        if j == 0 {
                            MultiIndex::pure_power(n, 0, k)
                        } else {
                            let mut e = vec![0; n];
                            e[0] = 1;
                            e[j] = k - 1;
                            MultiIndex::new(e)
                        }
                    })
                    .collect()
            };
            let mut forward = vec![Label::EMPTY; m];
            let mut used = vec![false; m];
            for (j, h) in heads.iter().enumerate() {
                let i = multis.iter().position(|a| a == h).expect("head in S(n,k)");
                forward[i] = Label::singleton(j + 1);
                used[i] = true;
            }
            let mut next = n + 1;
            for (i, slot) in forward.iter_mut().enumerate() {
                if !used[i] {
                    *slot = Label::singleton(next);
                    next += 1;
                }
            }
            forward
        }
        OrderingKind::Custom(perm) => {
            if perm.len() != m {
                return Err(Error::Ordering(format!(
                    "permutation has length {}, expected {m}",
                    perm.len()
                )));
            }
            let mut seen = vec![false; m];
            for &p in perm {
                if p >= m || seen[p] {
                    return Err(Error::Ordering(format!("{perm:?} is not a permutation")));
                }
                seen[p] = true;
            }
            perm.iter().map(|&p| lex[p]).collect()
        }
    };

    let backward: HashMap<Label, usize> =
        forward.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    if backward.len() != m {
        return Err(Error::Ordering("assignment is not injective".into()));
    }
    Ok(Ordering {
        n,
        k,
        l,
        ambient,
        kind,
        multiindices: multis,
        forward,
        backward,
    })
}

/// Seeded uniformly random ordering.
pub fn random_ordering(n: usize, k: u32, l: usize, ambient: usize, seed: u64) -> Result<Ordering> {
    let m = check_cardinality(n, k, l, ambient)? as usize;
    let mut perm: Vec<usize> = (0..m).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    perm.shuffle(&mut rng);
    make_ordering(n, k, l, ambient, OrderingKind::Custom(perm))
}
