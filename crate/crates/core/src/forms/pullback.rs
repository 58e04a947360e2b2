//! Pullbacks of coefficient fields under `x ↦ c0 + A (x - c0)`, where `c0`
//! is the box center.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use super::grid::{for_each_index, wavenumber, GridShape};
use super::{BumpField, GridField, TrigPoly};
use crate::error::{invalid, Result};

/// Fields that can be composed with an affine map fixing the box center.
pub trait LinearPullback: Sized {
    fn pullback(&self, a: &[Vec<f64>]) -> Result<Self>;
}

fn check_square(a: &[Vec<f64>], n: usize) -> Result<()> {
    if a.len() != n || a.iter().any(|r| r.len() != n) {
        return invalid(format!("matrix must be {n}x{n}"));
    }
    if a.iter().flatten().any(|v| !v.is_finite()) {
        return invalid("matrix entries must be finite");
    }
    Ok(())
}

pub fn is_orthogonal(a: &[Vec<f64>], tol: f64) -> bool {
    let n = a.len();
    (0..n).all(|i| {
        (0..n).all(|j| {
            let d: f64 = (0..n).map(|k| a[k][i] * a[k][j]).sum();
            (d - if i == j { 1.0 } else { 0.0 }).abs() <= tol
        })
    })
}

/// Determinant of the submatrix with the given 0-based rows and columns.
pub fn minor_det(a: &[Vec<f64>], rows: &[usize], cols: &[usize]) -> f64 {
    let k = rows.len();
    if k == 0 {
        return 1.0;
    }
    let mut m: Vec<Vec<f64>> = rows
        .iter()
        .map(|&r| cols.iter().map(|&c| a[r][c]).collect())
        .collect();
    let mut det = 1.0;
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))
            .expect("nonempty");
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        det *= m[col][col];
        for r in col + 1..k {
            let f = m[r][col] / m[col][col];
            if f != 0.0 {
                for c in col..k {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    det
}

/// Factors an orthogonal `A` as `G_1 G_2 ... G_m D` with plane rotations
/// `G = (i, j, theta)` acting on `(x_i, x_j)` by `[[cos, -sin], [sin, cos]]`
/// and `D` diagonal with entries `±1`.
pub fn givens_factor(a: &[Vec<f64>]) -> (Vec<(usize, usize, f64)>, Vec<f64>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut rots = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (x, y) = (m[i][i], m[j][i]);
            if y.abs() < 1e-15 {
                continue;
            }
            let r = x.hypot(y);
            let (c, s) = (x / r, y / r);
            for col in 0..n {
                let (u, v) = (m[i][col], m[j][col]);
                m[i][col] = c * u + s * v;
                m[j][col] = -s * u + c * v;
            }
            rots.push((i, j, s.atan2(c)));
        }
    }
    let diag = (0..n).map(|i| if m[i][i] < 0.0 { -1.0 } else { 1.0 }).collect();
    (rots, diag)
}

impl LinearPullback for TrigPoly {
    /// Exact for integer matrices: the center shift becomes a phase that is
    /// a multiple of `pi`.
    fn pullback(&self, a: &[Vec<f64>]) -> Result<TrigPoly> {
        let n = super::Field::nvars(self);
        check_square(a, n)?;
        if a.iter().flatten().any(|v| v.fract() != 0.0) {
            return invalid("exact pullback of trigonometric data needs an integer matrix");
        }
        let ai: Vec<Vec<i64>> = a.iter().map(|r| r.iter().map(|&v| v as i64).collect()).collect();
        let all: Vec<usize> = (0..n).collect();
        if minor_det(a, &all, &all) == 0.0 {
            return invalid("singular matrix");
        }
        // c0 + A(x - c0) = A x + (I - A) c0, with c0 = pi (1, ..., 1)
        let shift: Vec<i64> = (0..n)
            .map(|i| 1 - ai[i].iter().sum::<i64>())
            .collect();
        Ok(self.compose_affine(&ai, &shift))
    }
}

impl LinearPullback for BumpField {
    fn pullback(&self, a: &[Vec<f64>]) -> Result<BumpField> {
        check_square(a, super::Field::nvars(self))?;
        if !is_orthogonal(a, 1e-12) {
            return invalid("analytic bump pullback needs an orthogonal matrix");
        }
        Ok(self.rotate(a))
    }
}

impl LinearPullback for GridField {
    /// Orthogonal matrices use exact quarter turns and reflections plus
    /// three-shear rotations with spectral shifts; other invertible matrices
    /// fall back to direct trigonometric interpolation, which costs `P^{2n}`.
    fn pullback(&self, a: &[Vec<f64>]) -> Result<GridField> {
        let shape = self.grid();
        check_square(a, shape.n)?;
        let all: Vec<usize> = (0..shape.n).collect();
        if minor_det(a, &all, &all).abs() < 1e-12 {
            return invalid("singular matrix");
        }
        if is_orthogonal(a, 1e-12) {
            let (rots, diag) = givens_factor(a);
            let mut f = self.clone();
            for (i, j, th) in rots {
                f = rotate_plane(&f, i, j, th);
            }
            for (axis, d) in diag.iter().enumerate() {
                if *d < 0.0 {
                    f = reflect(&f, axis);
                }
            }
            return Ok(f);
        }
        if shape.len() > 1 << 13 {
            return invalid(format!(
                "direct interpolation for a non-orthogonal matrix is limited to {} points, grid has {}",
                1 << 13,
                shape.len()
            ));
        }
        Ok(interpolate(self, a))
    }
}

fn permute(f: &GridField, src: impl Fn(&[usize]) -> Vec<usize>) -> GridField {
    let shape = f.grid();
    let p = shape.p;
    let mut out = vec![0.0; shape.len()];
    let data = f.data();
    for_each_index(shape, |flat, idx| {
        let s = src(idx);
        let mut k = 0;
        for v in s {
            k = k * p + v;
        }
        out[flat] = data[k];
    });
    GridField::from_samples(shape.n, p, out).expect("permuted grid")
}

fn reflect(f: &GridField, axis: usize) -> GridField {
    let p = f.grid().p;
    permute(f, |idx| {
        let mut s = idx.to_vec();
        s[axis] = (p - idx[axis]) % p;
        s
    })
}

// g(u) = f(-u_j, u_i) in the (i, j) plane, about the center index P/2.
fn quarter_turn(f: &GridField, i: usize, j: usize) -> GridField {
    let p = f.grid().p;
    permute(f, |idx| {
        let mut s = idx.to_vec();
        s[i] = (p - idx[j]) % p;
        s[j] = idx[i];
        s
    })
}

// g(x) = f(x with x_axis shifted by a (x_by - pi)), by spectral shifts along
// `axis`.
fn shear(f: &GridField, axis: usize, by: usize, a: f64) -> GridField {
    let shape = f.grid();
    let GridShape { n, p } = shape;
    let stride = p.pow((n - 1 - axis) as u32);
    let by_stride = p.pow((n - 1 - by) as u32);
    let h = 2.0 * PI / p as f64;
    let mut planner = rustfft::FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(p);
    let inv = planner.plan_fft_inverse(p);
    let data = f.data();
    let mut out = vec![0.0; shape.len()];
    let mut line = vec![Complex64::new(0.0, 0.0); p];
    for start in 0..shape.len() {
        if (start / stride) % p != 0 {
            continue;
        }
        let m_by = (start / by_stride) % p;
        let delta = a * (h * m_by as f64 - PI);
        for (k, v) in line.iter_mut().enumerate() {
            *v = Complex64::new(data[start + k * stride], 0.0);
        }
        fwd.process(&mut line);
        for (k, v) in line.iter_mut().enumerate() {
            let w = wavenumber(k, p) as f64;
            if k == p / 2 {
                *v *= (w * delta).cos();
            } else {
                *v *= Complex64::from_polar(1.0, w * delta);
            }
        }
        inv.process(&mut line);
        for (k, v) in line.iter().enumerate() {
            out[start + k * stride] = v.re / p as f64;
        }
    }
    GridField::from_samples(n, p, out).expect("sheared grid")
}

/// Pullback by the rotation `[[cos, -sin], [sin, cos]]` acting on
/// `(x_i - pi, x_j - pi)`.
fn rotate_plane(f: &GridField, i: usize, j: usize, theta: f64) -> GridField {
    let quarter = (theta / (PI / 2.0)).round();
    let rest = theta - quarter * PI / 2.0;
    let mut g = f.clone();
    for _ in 0..(quarter as i64).rem_euclid(4) {
        g = quarter_turn(&g, i, j);
    }
    if rest.abs() < 1e-15 {
        return g;
    }
    let a = -(rest / 2.0).tan();
    let b = rest.sin();
    let g = shear(&g, i, j, a);
    let g = shear(&g, j, i, b);
    shear(&g, i, j, a)
}

fn interpolate(f: &GridField, a: &[Vec<f64>]) -> GridField {
    let shape = f.grid();
    let GridShape { n, p } = shape;
    let spec = f.spectrum();
    let h = 2.0 * PI / p as f64;
    let mut freqs: Vec<(Vec<f64>, Complex64)> = Vec::new();
    for_each_index(shape, |flat, idx| {
        let w: Vec<f64> = idx.iter().map(|&k| wavenumber(k, p) as f64).collect();
        freqs.push((w, spec[flat] / shape.len() as f64));
    });
    let mut out = vec![0.0; shape.len()];
    for_each_index(shape, |flat, idx| {
        let u: Vec<f64> = idx.iter().map(|&k| h * k as f64 - PI).collect();
        let y: Vec<f64> = (0..n)
            .map(|r| PI + (0..n).map(|c| a[r][c] * u[c]).sum::<f64>())
            .collect();
        let mut acc = 0.0;
        for (w, c) in &freqs {
            let t: f64 = w.iter().zip(&y).map(|(a, b)| a * b).sum();
            acc += (c * Complex64::from_polar(1.0, t)).re;
        }
        out[flat] = acc;
    });
    GridField::from_samples(n, p, out).expect("interpolated grid")
}
