use std::collections::BTreeMap;
use std::f64::consts::PI;

use ordered_float::OrderedFloat;
use rand::Rng;

use super::{Field, GridField, Sample};

/// `∂^deriv exp(-|x - center|^2 / (2 width^2))`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BumpTerm {
    pub center: Vec<OrderedFloat<f64>>,
    pub width: OrderedFloat<f64>,
    pub deriv: Vec<u32>,
}

/// Finite sum of Gaussian derivatives, treated as a function on the torus.
///
/// Differentiation only touches the `deriv` keys, so sign-weighted sums of
/// derivatives cancel exactly whenever the coefficients are dyadic.
#[derive(Clone, Debug, PartialEq)]
pub struct BumpField {
    n: usize,
    terms: BTreeMap<BumpTerm, f64>,
}

/// Box center `(pi, ..., pi)`; rotations and dilations act about it.
pub fn box_center(n: usize) -> Vec<f64> {
    vec![PI; n]
}

// Probabilists' Hermite polynomial He_d(t).
fn hermite(d: u32, t: f64) -> f64 {
    let (mut a, mut b) = (1.0, t);
    if d == 0 {
        return a;
    }
    for k in 1..d {
        let c = t * b - k as f64 * a;
        a = b;
        b = c;
    }
    b
}

fn wrap(d: f64) -> f64 {
    (d + PI).rem_euclid(2.0 * PI) - PI
}

fn axis_profile(x: f64, c: f64, s: f64, d: u32) -> f64 {
    let t = wrap(x - c) / s;
    let sign = if d % 2 == 1 { -1.0 } else { 1.0 };
    sign * s.powi(-(d as i32)) * hermite(d, t) * (-0.5 * t * t).exp()
}

impl BumpField {
    pub fn zero(n: usize) -> Self {
        BumpField {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn gaussian(center: &[f64], width: f64, amp: f64) -> Self {
        let mut f = BumpField::zero(center.len());
        f.push(
            BumpTerm {
                center: center.iter().map(|&c| OrderedFloat(c)).collect(),
                width: OrderedFloat(width),
                deriv: vec![0; center.len()],
            },
            amp,
        );
        f
    }

    /// Sum of `count` Gaussians with centers within `radius` of the box
    /// center, widths in `[w_lo, w_hi]` and dyadic amplitudes `j/8`,
    /// `1 <= |j| <= 16`.
    pub fn random<R: Rng + ?Sized>(
        n: usize,
        count: usize,
        radius: f64,
        widths: (f64, f64),
        rng: &mut R,
    ) -> Self {
        let mut f = BumpField::zero(n);
        for _ in 0..count {
            let center: Vec<f64> = loop {
                let off: Vec<f64> = (0..n).map(|_| rng.gen_range(-radius..=radius)).collect();
                if off.iter().map(|v| v * v).sum::<f64>() <= radius * radius {
                    break off.iter().map(|o| PI + o).collect();
                }
            };
            let width = if widths.0 == widths.1 {
                widths.0
            } else {
                rng.gen_range(widths.0..=widths.1)
            };
            let mut j: i32 = rng.gen_range(-16..=16);
            if j == 0 {
                j = 1;
            }
            f.add_assign(&BumpField::gaussian(&center, width, j as f64 / 8.0));
        }
        f
    }

    pub fn push(&mut self, term: BumpTerm, coef: f64) {
        assert_eq!(term.center.len(), self.n);
        if coef == 0.0 {
            return;
        }
        match self.terms.entry(term) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coef);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += coef;
                if *e.get() == 0.0 {
                    e.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&BumpTerm, f64)> {
        self.terms.iter().map(|(k, v)| (k, *v))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms()
            .map(|(t, c)| {
                c * (0..self.n)
                    .map(|j| axis_profile(x[j], t.center[j].0, t.width.0, t.deriv[j]))
                    .product::<f64>()
            })
            .sum()
    }

    /// Pullback under `x ↦ c0 + s^-1 (x - c0)`: the field spread out by `s`
    /// about the box center.
    pub fn dilate(&self, s: f64) -> BumpField {
        let c0 = box_center(self.n);
        let mut out = BumpField::zero(self.n);
        for (t, c) in self.terms() {
            let order: u32 = t.deriv.iter().sum();
            let center = t
                .center
                .iter()
                .zip(&c0)
                .map(|(c, z)| OrderedFloat(z + s * (c.0 - z)))
                .collect();
            out.push(
                BumpTerm {
                    center,
                    width: OrderedFloat(t.width.0 * s),
                    deriv: t.deriv.clone(),
                },
                c * s.powi(order as i32),
            );
        }
        out
    }

    /// Pullback under the rotation `x ↦ c0 + A (x - c0)` with orthogonal `A`.
    ///
    /// `(∂_i G)∘ψ = Σ_j A_ij ∂_j (G∘ψ)` and an isotropic Gaussian composed
    /// with `ψ` is the Gaussian centered at `c0 + A^T (c - c0)`.
    pub fn rotate(&self, a: &[Vec<f64>]) -> BumpField {
        let n = self.n;
        let c0 = box_center(n);
        let mut out = BumpField::zero(n);
        for (t, c) in self.terms() {
            let rel: Vec<f64> = t.center.iter().zip(&c0).map(|(c, z)| c.0 - z).collect();
            let center: Vec<OrderedFloat<f64>> = (0..n)
                .map(|j| OrderedFloat(c0[j] + (0..n).map(|i| a[i][j] * rel[i]).sum::<f64>()))
                .collect();
            // Expand Π_i (Σ_j A_ij ∂_j)^{d_i} as a polynomial in ∂.
            let mut poly: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
            poly.insert(vec![0; n], 1.0);
            for (i, &d) in t.deriv.iter().enumerate() {
                for _ in 0..d {
                    let mut next: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
                    for (mono, v) in &poly {
                        for (j, row) in a[i].iter().enumerate() {
                            if *row == 0.0 {
                                continue;
                            }
                            let mut m = mono.clone();
                            m[j] += 1;
                            *next.entry(m).or_insert(0.0) += v * row;
                        }
                    }
                    poly = next;
                }
            }
            for (mono, v) in poly {
                out.push(
                    BumpTerm {
                        center: center.clone(),
                        width: t.width,
                        deriv: mono,
                    },
                    c * v,
                );
            }
        }
        out
    }

    /// Largest total derivative order appearing.
    pub fn max_order(&self) -> u32 {
        self.terms.keys().map(|t| t.deriv.iter().sum()).max().unwrap_or(0)
    }
}

impl Field for BumpField {
    type Scalar = f64;
    type Shape = usize;
    type Prepared = BumpField;

    fn shape(&self) -> usize {
        self.n
    }

    fn zero(shape: &usize) -> Self {
        BumpField::zero(*shape)
    }

    fn nvars(&self) -> usize {
        self.n
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_assign(&mut self, other: &Self) {
        for (t, c) in other.terms() {
            self.push(t.clone(), c);
        }
    }

    fn add_scaled_int(&mut self, other: &Self, c: i64) {
        for (t, v) in other.terms() {
            self.push(t.clone(), v * c as f64);
        }
    }

    fn scale(&mut self, c: &f64) {
        if *c == 0.0 {
            self.terms.clear();
            return;
        }
        self.terms.values_mut().for_each(|v| *v *= c);
    }

    fn derivative(&self, alpha: &[u32]) -> Self {
        assert_eq!(alpha.len(), self.n);
        let terms = self
            .terms
            .iter()
            .map(|(t, c)| {
                let mut t = t.clone();
                t.deriv.iter_mut().zip(alpha).for_each(|(d, a)| *d += a);
                (t, *c)
            })
            .collect();
        BumpField { n: self.n, terms }
    }

    fn prepare(&self) -> BumpField {
        self.clone()
    }

    fn differential_sum(shape: &usize, terms: &[(i64, &[u32], &BumpField)]) -> Self {
        let mut out = BumpField::zero(*shape);
        for (c, alpha, f) in terms {
            out.add_scaled_int(&f.derivative(alpha), *c);
        }
        out
    }

    fn max_abs(&self) -> f64 {
        self.terms.values().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

impl Sample for BumpField {
    /// Separable evaluation: one axis profile per term and axis, then an
    /// outer product.
    fn sample(&self, p: usize) -> GridField {
        let n = self.n;
        let shape = super::GridShape { n, p };
        let h = 2.0 * PI / p as f64;
        let mut data = vec![0.0; shape.len()];
        for (t, c) in self.terms() {
            let profiles: Vec<Vec<f64>> = (0..n)
                .map(|j| {
                    (0..p)
                        .map(|i| axis_profile(h * i as f64, t.center[j].0, t.width.0, t.deriv[j]))
                        .collect()
                })
                .collect();
            // Outer product over all axes but the last, then one contiguous
            // row per prefix.
            let mut prefix = vec![c];
            for prof in &profiles[..n - 1] {
                prefix = prefix.iter().flat_map(|a| prof.iter().map(move |b| a * b)).collect();
            }
            let last = &profiles[n - 1];
            for (row, a) in data.chunks_mut(p).zip(&prefix) {
                if *a == 0.0 {
                    continue;
                }
                row.iter_mut().zip(last).for_each(|(d, b)| *d += a * b);
            }
        }
        GridField::from_samples(n, p, data).expect("finite bump samples")
    }
}
