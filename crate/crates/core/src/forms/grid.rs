use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{Algebra, Field, Sample};
use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridShape {
    pub n: usize,
    pub p: usize,
}

impl GridShape {
    pub fn len(&self) -> usize {
        self.p.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Real samples on the uniform grid `x_j = 2pi i_j / P`, row-major with the
/// last axis fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    shape: GridShape,
    data: Vec<f64>,
}

struct Plans {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<usize, Arc<Plans>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plans(p: usize) -> Arc<Plans> {
    PLANS.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (planner, cache) = &mut *guard;
        if let Some(pl) = cache.get(&p) {
            return pl.clone();
        }
        let pl = Arc::new(Plans {
            fwd: planner.plan_fft_forward(p),
            inv: planner.plan_fft_inverse(p),
        });
        cache.insert(p, pl.clone());
        pl
    })
}

/// In-place n-dimensional FFT along every axis; the inverse is normalized.
pub(crate) fn fft_nd(buf: &mut [Complex64], shape: GridShape, inverse: bool) {
    let GridShape { n, p } = shape;
    let pl = plans(p);
    let fft = if inverse { &pl.inv } else { &pl.fwd };
    let mut line = vec![Complex64::new(0.0, 0.0); p];
    let total = buf.len();
    for axis in 0..n {
        let stride = p.pow((n - 1 - axis) as u32);
        if stride == 1 {
            for chunk in buf.chunks_mut(p) {
                fft.process(chunk);
            }
            continue;
        }
        let block = stride * p;
        for base in (0..total).step_by(block) {
            for off in 0..stride {
                let start = base + off;
                for (i, v) in line.iter_mut().enumerate() {
                    *v = buf[start + i * stride];
                }
                fft.process(&mut line);
                for (i, v) in line.iter().enumerate() {
                    buf[start + i * stride] = *v;
                }
            }
        }
    }
    if inverse {
        let s = 1.0 / total as f64;
        buf.iter_mut().for_each(|v| *v *= s);
    }
}

/// Signed wavenumber of FFT bin `j`.
pub(crate) fn wavenumber(j: usize, p: usize) -> i64 {
    if j < p / 2 {
        j as i64
    } else {
        j as i64 - p as i64
    }
}

/// Per-axis table of `(i ω)^a`, with the Nyquist bin zeroed for odd `a`.
pub(crate) fn axis_multiplier(p: usize, a: u32) -> Vec<Complex64> {
    let ia = match a % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    (0..p)
        .map(|j| {
            if a % 2 == 1 && j == p / 2 {
                return Complex64::new(0.0, 0.0);
            }
            let w = wavenumber(j, p) as f64;
            ia * w.powi(a as i32)
        })
        .collect()
}

/// Visits every multi-index of a `P^n` grid in storage order.
pub(crate) fn for_each_index(shape: GridShape, mut f: impl FnMut(usize, &[usize])) {
    let GridShape { n, p } = shape;
    let mut idx = vec![0usize; n];
    for flat in 0..shape.len() {
        f(flat, &idx);
        for ax in (0..n).rev() {
            idx[ax] += 1;
            if idx[ax] < p {
                break;
            }
            idx[ax] = 0;
        }
    }
}

/// Full spectral multiplier `Π_j (i ω_j)^{a_j}` on the grid.
pub(crate) fn multiplier(shape: GridShape, alpha: &[u32]) -> Vec<Complex64> {
    let tables: Vec<Vec<Complex64>> = alpha.iter().map(|&a| axis_multiplier(shape.p, a)).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); shape.len()];
    for_each_index(shape, |flat, idx| {
        let mut v = Complex64::new(1.0, 0.0);
        for (t, &i) in tables.iter().zip(idx) {
            v *= t[i];
        }
        out[flat] = v;
    });
    out
}

impl GridField {
    pub fn from_samples(n: usize, p: usize, data: Vec<f64>) -> Result<GridField> {
        if p < 2 || !p.is_power_of_two() {
            return invalid(format!("grid size {p} is not a power of two >= 2"));
        }
        let shape = GridShape { n, p };
        if data.len() != shape.len() {
            return invalid(format!(
                "expected {} samples for P={p}, n={n}, got {}",
                shape.len(),
                data.len()
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return invalid("grid samples must be finite");
        }
        Ok(GridField { shape, data })
    }

    pub fn from_fn(n: usize, p: usize, f: impl Fn(&[f64]) -> f64) -> Result<GridField> {
        let shape = GridShape { n, p };
        let h = 2.0 * PI / p as f64;
        let mut data = vec![0.0; shape.len()];
        let mut x = vec![0.0; n];
        for_each_index(shape, |flat, idx| {
            for (xi, &i) in x.iter_mut().zip(idx) {
                *xi = h * i as f64;
            }
            data[flat] = f(&x);
        });
        GridField::from_samples(n, p, data)
    }

    pub fn grid(&self) -> GridShape {
        self.shape
    }

    pub fn resolution(&self) -> usize {
        self.shape.p
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_nd(&mut buf, self.shape, false);
        buf
    }

    pub fn from_spectrum(shape: GridShape, mut spec: Vec<Complex64>) -> GridField {
        fft_nd(&mut spec, shape, true);
        GridField {
            shape,
            data: spec.into_iter().map(|c| c.re).collect(),
        }
    }

    /// `(2pi)^-n ∫ |f|^p`.
    pub fn mean_abs_pow(&self, p: f64) -> f64 {
        self.data.iter().map(|v| v.abs().powf(p)).sum::<f64>() / self.data.len() as f64
    }

    /// Spectral interpolation to a different power-of-two resolution.
    pub fn resample(&self, p_new: usize) -> Result<GridField> {
        let GridShape { n, p } = self.shape;
        if p_new == p {
            return Ok(self.clone());
        }
        if p_new < 2 || !p_new.is_power_of_two() {
            return invalid(format!("grid size {p_new} is not a power of two"));
        }
        let spec = self.spectrum();
        let new_shape = GridShape { n, p: p_new };
        let mut out = vec![Complex64::new(0.0, 0.0); new_shape.len()];
        let limit = (p.min(p_new) / 2) as i64;
        let scale = (p_new as f64 / p as f64).powi(n as i32);
        for_each_index(self.shape, |flat, idx| {
            let ws: Vec<i64> = idx.iter().map(|&j| wavenumber(j, p)).collect();
            if ws.iter().any(|w| w.abs() >= limit) {
                return;
            }
            let mut dst = 0usize;
            for &w in &ws {
                dst = dst * p_new + w.rem_euclid(p_new as i64) as usize;
            }
            out[dst] = spec[flat] * scale;
        });
        Ok(GridField::from_spectrum(new_shape, out))
    }

    pub fn max_abs_diff(&self, other: &GridField) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Field for GridField {
    type Scalar = f64;
    type Shape = GridShape;
    type Prepared = Vec<Complex64>;

    fn shape(&self) -> GridShape {
        self.shape
    }

    fn zero(shape: &GridShape) -> Self {
        GridField {
            shape: *shape,
            data: vec![0.0; shape.len()],
        }
    }

    fn nvars(&self) -> usize {
        self.shape.n
    }

    fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    fn add_assign(&mut self, other: &Self) {
        assert_eq!(self.shape, other.shape, "grid shapes differ");
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += b);
    }

    fn add_scaled_int(&mut self, other: &Self, c: i64) {
        assert_eq!(self.shape, other.shape, "grid shapes differ");
        let c = c as f64;
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += c * b);
    }

    fn scale(&mut self, c: &f64) {
        self.data.iter_mut().for_each(|v| *v *= c);
    }

    fn derivative(&self, alpha: &[u32]) -> Self {
        assert_eq!(alpha.len(), self.shape.n, "derivative multi-index length");
        if alpha.iter().all(|&a| a == 0) {
            return self.clone();
        }
        let spec = self.spectrum();
        GridField::differential_sum(&self.shape, &[(1, alpha, &spec)])
    }

    fn prepare(&self) -> Vec<Complex64> {
        self.spectrum()
    }

    fn differential_sum(shape: &GridShape, terms: &[(i64, &[u32], &Vec<Complex64>)]) -> Self {
        if terms.is_empty() {
            return GridField::zero(shape);
        }
        let mut acc = vec![Complex64::new(0.0, 0.0); shape.len()];
        let mut cache: HashMap<&[u32], Vec<Complex64>> = HashMap::new();
        for (c, alpha, spec) in terms {
            let m = cache.entry(*alpha).or_insert_with(|| multiplier(*shape, alpha));
            let c = *c as f64;
            for ((a, s), w) in acc.iter_mut().zip(spec.iter()).zip(m.iter()) {
                *a += s * w * c;
            }
        }
        GridField::from_spectrum(*shape, acc)
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

impl Algebra for GridField {
    fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.shape, other.shape, "grid shapes differ");
        GridField {
            shape: self.shape,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect(),
        }
    }

    fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    fn inner(&self, other: &Self) -> f64 {
        assert_eq!(self.shape, other.shape, "grid shapes differ");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum::<f64>() / self.data.len() as f64
    }
}

impl Sample for GridField {
    fn sample(&self, p: usize) -> GridField {
        self.resample(p).expect("valid resample target")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(GridField::from_samples(1, 6, vec![0.0; 6]).is_err());
        assert!(GridField::from_samples(1, 8, vec![0.0; 7]).is_err());
        assert!(GridField::from_samples(1, 4, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn spectral_derivative_of_trig_data() {
        let f = GridField::from_fn(2, 16, |x| (2.0 * x[0]).sin() * x[1].cos()).unwrap();
        let d = f.derivative(&[1, 1]);
        let want = GridField::from_fn(2, 16, |x| -2.0 * (2.0 * x[0]).cos() * x[1].sin()).unwrap();
        assert!(d.max_abs_diff(&want) < 1e-12);
        let d4 = f.derivative(&[0, 4]);
        assert!(d4.max_abs_diff(&f) < 1e-11);
    }

    #[test]
    fn resample_round_trip() {
        let f = GridField::from_fn(2, 16, |x| (3.0 * x[0] - x[1]).cos() + 0.25).unwrap();
        let up = f.resample(32).unwrap();
        let want = GridField::from_fn(2, 32, |x| (3.0 * x[0] - x[1]).cos() + 0.25).unwrap();
        assert!(up.max_abs_diff(&want) < 1e-12);
        assert!(up.resample(16).unwrap().max_abs_diff(&f) < 1e-12);
    }

    #[test]
    fn quadrature_of_band_limited_product() {
        let f = GridField::from_fn(1, 8, |x| x[0].cos()).unwrap();
        assert!((f.inner(&f) - 0.5).abs() < 1e-15);
    }
}
