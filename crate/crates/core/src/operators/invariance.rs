//! Commutation of `T̃` with rotation pullbacks.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::OperatorSpec;
use crate::error::{invalid, Result};
use crate::forms::{is_orthogonal, lp_norm, Field, Form, LinearPullback, Sample};

/// Threshold separating a genuine defect from discretisation noise.
pub const DEFECT_THRESHOLD: f64 = 1e-3;

/// `T̃(ψ*F) - ψ*(T̃F)` for `ψ(x) = c0 + A (x - c0)`.
pub fn invariance_residual<F>(spec: &OperatorSpec, a: &[Vec<f64>], f: &Form<F>) -> Result<Form<F>>
where
    F: Field + LinearPullback,
{
    if !is_orthogonal(a, 1e-12) {
        return invalid("invariance probe needs an orthogonal matrix");
    }
    let lhs = spec.apply_t_total(&f.pullback(a)?)?;
    let rhs = spec.apply_t_total(f)?.pullback(a)?;
    lhs.sub(&rhs)
}

/// L2 norm (normalized measure) of the residual, sampled on a `p`-grid.
pub fn invariance_defect<F>(spec: &OperatorSpec, a: &[Vec<f64>], f: &Form<F>, p: usize) -> Result<f64>
where
    F: Field + LinearPullback + Sample,
{
    let r = invariance_residual(spec, a, f)?;
    lp_norm(&r.sample(p)?, 2.0)
}

/// Rotation by `theta` in the `(i, j)` coordinate plane.
pub fn plane_rotation(n: usize, i: usize, j: usize, theta: f64) -> Vec<Vec<f64>> {
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|r| (0..n).map(|c| if r == c { 1.0 } else { 0.0 }).collect())
        .collect();
    let (s, c) = theta.sin_cos();
    a[i][i] = c;
    a[j][j] = c;
    a[i][j] = -s;
    a[j][i] = s;
    a
}

/// Haar-distributed rotation from the QR factorisation of a Gaussian matrix.
pub fn random_rotation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    (0..n).map(|i| (0..n).map(|j| q[(i, j)]).collect()).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct RotationSearch {
    pub tried: usize,
    pub max_defect: f64,
    pub best_rotation: Vec<Vec<f64>>,
    /// `true` when some rotation exceeded [`DEFECT_THRESHOLD`]; a search
    /// where none did is inconclusive, not a proof of invariance.
    pub conclusive: bool,
}

/// Tries every coordinate-plane rotation by `pi/8`, `pi/6`, `pi/4`, `pi/3`,
/// then `extra` random rotations, stopping at the first that exceeds the
/// threshold.
pub fn search_rotations<F, R>(
    spec: &OperatorSpec,
    f: &Form<F>,
    p: usize,
    extra: usize,
    rng: &mut R,
) -> Result<RotationSearch>
where
    F: Field + LinearPullback + Sample,
    R: Rng + ?Sized,
{
    let n = spec.source_dim();
    let mut candidates = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for th in [PI / 8.0, PI / 6.0, PI / 4.0, PI / 3.0] {
                candidates.push(plane_rotation(n, i, j, th));
            }
        }
    }
    let mut out = RotationSearch {
        tried: 0,
        max_defect: 0.0,
        best_rotation: plane_rotation(n, 0, 0, 0.0),
        conclusive: false,
    };
    let mut randoms = 0;
    loop {
        let a = match candidates.pop() {
            Some(a) => a,
            None if randoms < extra => {
                randoms += 1;
                random_rotation(n, rng)
            }
            None => break,
        };
        let d = invariance_defect(spec, &a, f, p)?;
        out.tried += 1;
        if d > out.max_defect {
            out.max_defect = d;
            out.best_rotation = a;
        }
        if d > DEFECT_THRESHOLD {
            out.conclusive = true;
            break;
        }
    }
    Ok(out)
}
