//! Spectral solution of the Hodge system `T̃Z = F`, `T̃*Z = G` for `l = 1`.

use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::{lp_norm, sobolev_norm, Form, GridField, GridShape};
use crate::operators::OperatorSpec;
use crate::symbol::{SymbolKind, SymbolPolynomials};

use super::closed::closure_residual;

#[derive(Clone, Debug)]
pub struct HodgeSolution {
    pub z: Form<GridField>,
    /// `‖T̃Z - F‖_2 / ‖F‖_2` (absolute when `F` vanishes).
    pub residual_f: f64,
    /// `‖T̃*Z - G‖_2 / ‖G‖_2` (absolute when `G` vanishes).
    pub residual_g: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HodgeResiduals {
    pub residual_f: f64,
    pub residual_g: f64,
}

const PRECHECK_TOL: f64 = 1e-6;

fn relative(diff: &Form<GridField>, reference: &Form<GridField>) -> Result<f64> {
    let d = lp_norm(diff, 2.0)?;
    let r = lp_norm(reference, 2.0)?;
    Ok(if r > 0.0 { d / r } else { d })
}

fn check_mean_zero(f: &Form<GridField>, what: &str) -> Result<()> {
    let scale = f.max_abs().max(1.0);
    for (l, c) in f.components() {
        let mean = c.data().iter().sum::<f64>() / c.data().len() as f64;
        if mean.abs() > PRECHECK_TOL * scale {
            return Err(Error::Precondition(format!("{what} component {l} has mean {mean:e}")));
        }
    }
    Ok(())
}

fn zero_grid(spec: &OperatorSpec, q: usize, shape: GridShape) -> Result<Form<GridField>> {
    Form::zero(spec.source_dim(), spec.ambient_dim(), q, shape)
}

/// Solves `T̃Z = F`, `T̃*Z = G` on mean-zero data via
/// `Z = □̃^{-1}(T̃*F + T̃G)`, dividing by the scalar symbol `Σ_α ξ^{2α}`.
/// `F` has degree `q + 1`, `G` degree `q - 1`; `None` stands for zero.
pub fn hodge_solve(
    spec: &OperatorSpec,
    q: usize,
    f: Option<&Form<GridField>>,
    g: Option<&Form<GridField>>,
    shape: GridShape,
) -> Result<HodgeSolution> {
    if spec.increment() != 1 {
        return Err(Error::Precondition("the Hodge solver needs l = 1".into()));
    }
    let big = spec.ambient_dim();
    if q > big {
        return Err(Error::DegreeOutOfRange(format!("degree {q} exceeds N = {big}")));
    }
    if shape.n != spec.source_dim() {
        return Err(Error::DimensionMismatch("grid dimension differs from n".into()));
    }
    let f = match f {
        Some(f) => f.clone(),
        None => zero_grid(spec, q + 1, shape)?,
    };
    let g = match (g, q) {
        (Some(g), _) => g.clone(),
        (None, 0) => zero_grid(spec, 0, shape)?,
        (None, _) => zero_grid(spec, q - 1, shape)?,
    };
    if f.degree() != q + 1 || (q > 0 && g.degree() + 1 != q) {
        return Err(Error::DegreeOutOfRange(format!(
            "F must have degree {} and G degree {}",
            q + 1,
            q as i64 - 1
        )));
    }
    if q == 0 && !g.is_zero() {
        return Err(Error::DegreeOutOfRange("G must vanish for q = 0".into()));
    }
    let rf = closure_residual(spec, &f)?;
    if rf > PRECHECK_TOL {
        return Err(Error::Precondition(format!("F is not closed (residual {rf:e})")));
    }
    if q > 0 {
        let tg = spec.apply_t_star_total(&g)?;
        let scale = sobolev_norm(&g, spec.order(), 2.0)?;
        let rg = if scale > 0.0 { lp_norm(&tg, 2.0)? / scale } else { 0.0 };
        if rg > PRECHECK_TOL {
            return Err(Error::Precondition(format!("G is not coclosed (residual {rg:e})")));
        }
    }
    check_mean_zero(&f, "F")?;
    check_mean_zero(&g, "G")?;

    let mut rhs = spec.apply_t_star_total(&f)?;
    if q > 0 {
        rhs = rhs.add(&spec.apply_t_total(&g)?)?;
    }
    let poly = SymbolPolynomials::build(spec, q, SymbolKind::Hybrid)?
        .scalar()
        .ok_or_else(|| Error::Precondition("symbol is not scalar".into()))?;
    let inv = inverse_symbol(&poly, shape);
    let z = rhs.map_fields(shape, |c| {
        let spec: Vec<Complex64> = c.spectrum().iter().zip(&inv).map(|(v, m)| v * m).collect();
        GridField::from_spectrum(shape, spec)
    })?;
    let residual_f = relative(&spec.apply_t_total(&z)?.sub(&f)?, &f)?;
    let residual_g = if q > 0 {
        relative(&spec.apply_t_star_total(&z)?.sub(&g)?, &g)?
    } else {
        0.0
    };
    Ok(HodgeSolution {
        z,
        residual_f,
        residual_g,
    })
}

// 1/σ(ξ) on the grid, zero at ξ = 0 and on Nyquist bins.
fn inverse_symbol(poly: &crate::symbol::Poly, shape: GridShape) -> Vec<Complex64> {
    let GridShape { n, p } = shape;
    let mut out = vec![Complex64::new(0.0, 0.0); shape.len()];
    let mut idx = vec![0usize; n];
    for v in out.iter_mut() {
        if idx.iter().all(|&i| i != p / 2) && idx.iter().any(|&i| i != 0) {
            let xi: Vec<f64> = idx.iter().map(|&i| if i < p / 2 { i as f64 } else { i as f64 - p as f64 }).collect();
            let s: f64 = poly
                .iter()
                .map(|(e, c)| *c as f64 * e.iter().zip(&xi).map(|(a, x)| x.powi(*a as i32)).product::<f64>())
                .sum();
            *v = Complex64::new(1.0 / s, 0.0);
        }
        for ax in (0..n).rev() {
            idx[ax] += 1;
            if idx[ax] < p {
                break;
            }
            idx[ax] = 0;
        }
    }
    out
}

impl HodgeSolution {
    pub fn residuals(&self) -> HodgeResiduals {
        HodgeResiduals {
            residual_f: self.residual_f,
            residual_g: self.residual_g,
        }
    }
}
