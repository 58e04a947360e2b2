//! Seeded sweeps over operator specs producing a versioned JSON report.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{BumpField, Form, GridShape};
use crate::multiindex::OrderingKind;
use crate::operators::OperatorSpec;

use super::closed::{random_bump_form, BumpParams};
use super::hodge::hodge_solve;
use super::ratios::{bump_duality_ratio, bump_gn_ratio, GnOptions, Ratio};

pub const SCHEMA_VERSION: u32 = 1;

/// Hodge residuals above this count as failed checks.
pub const HODGE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecEntry {
    pub n: usize,
    pub k: u32,
    pub l: usize,
    #[serde(default = "diagonal")]
    pub ordering: OrderingKind,
}

fn diagonal() -> OrderingKind {
    OrderingKind::Diagonal
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub specs: Vec<SpecEntry>,
    /// Random cases per spec and probe.
    pub cases: usize,
    pub seed: u64,
    /// Grid for dilated cases.
    pub grid: usize,
    /// Doubled grid for the refinement comparison at unit dilation.
    pub fine_grid: usize,
    pub dilations: Vec<f64>,
    pub duality_degrees: Vec<usize>,
    pub gn_degrees: Vec<usize>,
    pub hodge_degrees: Vec<usize>,
    pub hodge_grids: Vec<usize>,
    pub bump: BumpParams,
    pub exploratory: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        let specs = [(2, 1), (2, 2), (3, 1), (3, 2)]
            .into_iter()
            .map(|(n, k)| SpecEntry {
                n,
                k,
                l: 1,
                ordering: OrderingKind::Diagonal,
            })
            .collect();
        SuiteConfig {
            specs,
            cases: 50,
            seed: 1,
            grid: 64,
            fine_grid: 128,
            dilations: vec![0.5, 1.0, 2.0],
            duality_degrees: vec![1],
            gn_degrees: vec![0],
            hodge_degrees: vec![0],
            hodge_grids: vec![32, 64],
            bump: BumpParams::default(),
            exploratory: false,
        }
    }
}

impl SuiteConfig {
    /// A config with no specs; its report has no records.
    pub fn empty() -> Self {
        SuiteConfig {
            specs: Vec::new(),
            ..SuiteConfig::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseKind {
    Duality,
    Gn,
    Hodge,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseRecord {
    pub spec_index: usize,
    pub spec_hash: String,
    pub kind: CaseKind,
    pub q: usize,
    pub case: usize,
    pub seed: u64,
    pub grid: usize,
    pub dilation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub numerator: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub denominator: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Maxima of one probe kind over the cases of one spec.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioSummary {
    pub kind: CaseKind,
    pub q: usize,
    pub max_coarse: f64,
    pub max_fine: f64,
    /// `|max_fine - max_coarse| / max_fine`.
    pub refinement_delta: f64,
    /// `(s, max)` on the coarse grid.
    pub max_by_dilation: Vec<(f64, f64)>,
    /// `max_s |max(s) - max(1)| / max(1)`.
    pub dilation_drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpecSummaryRecord {
    pub spec_index: usize,
    pub entry: SpecEntry,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub big_n: Option<usize>,
    pub spec_hash: String,
    pub ratios: Vec<RatioSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_hodge_residual: Option<f64>,
    /// `(grid, max residual)` per Hodge grid.
    pub hodge_by_grid: Vec<(usize, f64)>,
    pub failures: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestReport {
    pub schema_version: u32,
    pub domain: String,
    pub config: SuiteConfig,
    pub records: Vec<CaseRecord>,
    pub summaries: Vec<SpecSummaryRecord>,
    pub max_duality_ratio: Option<f64>,
    pub max_gn_ratio: Option<f64>,
    pub failures: usize,
    /// No failed case and Hodge residuals on the finest grid within tolerance.
    pub residual_checks_pass: bool,
}

impl TestReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn case_seed(seed: u64, spec_index: usize, kind: CaseKind, case: usize) -> u64 {
    let k = match kind {
        CaseKind::Duality => 0u64,
        CaseKind::Gn => 1,
        CaseKind::Hodge => 2,
    };
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((spec_index as u64) << 40 | k << 32 | case as u64)
}

struct Job {
    kind: CaseKind,
    q: usize,
    case: usize,
}

fn blank(spec_index: usize, hash: &str, job: &Job, seed: u64, grid: usize, dilation: f64) -> CaseRecord {
    CaseRecord {
        spec_index,
        spec_hash: hash.to_string(),
        kind: job.kind,
        q: job.q,
        case: job.case,
        seed,
        grid,
        dilation,
        numerator: None,
        denominator: None,
        ratio: None,
        residual_f: None,
        residual_g: None,
        error: None,
    }
}

fn with_ratio(mut r: CaseRecord, v: Result<Ratio>) -> CaseRecord {
    match v {
        Ok(v) => {
            r.numerator = Some(v.numerator);
            r.denominator = Some(v.denominator);
            r.ratio = Some(v.value);
        }
        Err(e) => r.error = Some(e.to_string()),
    }
    r
}

fn dilate(f: &Form<BumpField>, s: f64) -> Form<BumpField> {
    f.map_fields(f.source_dim(), |c| c.dilate(s)).expect("same shape")
}

// Grids and dilations at which each ratio case is evaluated: every dilation
// on the coarse grid, then unit dilation on the fine grid.
fn ratio_points(cfg: &SuiteConfig) -> Vec<(usize, f64)> {
    let mut pts: Vec<(usize, f64)> = cfg.dilations.iter().map(|&s| (cfg.grid, s)).collect();
    pts.push((cfg.fine_grid, 1.0));
    pts
}

fn duality_case(spec: &OperatorSpec, idx: usize, hash: &str, job: &Job, cfg: &SuiteConfig) -> Vec<CaseRecord> {
    let seed = case_seed(cfg.seed, idx, job.kind, job.case);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, big, l) = (spec.source_dim(), spec.ambient_dim(), spec.increment());
    let pts = ratio_points(cfg);
    let data = (|| -> Result<(Option<Form<BumpField>>, Form<BumpField>, Form<BumpField>)> {
        if job.q > big {
            return Err(Error::DegreeOutOfRange(format!("degree {} exceeds N = {big}", job.q)));
        }
        if job.q + l > big {
            let f = random_bump_form(n, big, job.q, &cfg.bump, &mut rng)?;
            let h = random_bump_form(n, big, job.q, &cfg.bump, &mut rng)?;
            return Ok((None, f, h));
        }
        if l % 2 == 0 || job.q < l {
            return Err(Error::Precondition(format!("no potential route for l = {l}, q = {}", job.q)));
        }
        let phi = random_bump_form(n, big, job.q - l, &cfg.bump, &mut rng)?;
        let h = random_bump_form(n, big, job.q, &cfg.bump, &mut rng)?;
        Ok((Some(phi.clone()), spec.apply_t_total(&phi)?, h))
    })();
    match data {
        Err(e) => {
            let mut r = blank(idx, hash, job, seed, cfg.grid, 1.0);
            r.error = Some(e.to_string());
            vec![r]
        }
        Ok((phi, f, h)) => pts
            .iter()
            .map(|&(p, s)| {
                let r = blank(idx, hash, job, seed, p, s);
                let v = (|| {
                    // Dilating the potential keeps F exactly closed.
                    let fs = match &phi {
                        Some(phi) => spec.apply_t_total(&dilate(phi, s))?,
                        None => dilate(&f, s),
                    };
                    bump_duality_ratio(spec, &fs, &dilate(&h, s), p)
                })();
                with_ratio(r, v)
            })
            .collect(),
    }
}

fn gn_case(spec: &OperatorSpec, idx: usize, hash: &str, job: &Job, cfg: &SuiteConfig) -> Vec<CaseRecord> {
    let seed = case_seed(cfg.seed, idx, job.kind, job.case);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.source_dim();
    let opts = GnOptions {
        exploratory: cfg.exploratory,
    };
    match random_bump_form(n, n, job.q, &cfg.bump, &mut rng) {
        Err(e) => {
            let mut r = blank(idx, hash, job, seed, cfg.grid, 1.0);
            r.error = Some(e.to_string());
            vec![r]
        }
        Ok(u) => ratio_points(cfg)
            .iter()
            .map(|&(p, s)| {
                let r = blank(idx, hash, job, seed, p, s);
                with_ratio(r, bump_gn_ratio(spec, job.q, &dilate(&u, s), p, opts))
            })
            .collect(),
    }
}

// Potentials are sampled first and differentiated on the grid, so the data
// is closed and coclosed to rounding at every resolution.
fn hodge_case(spec: &OperatorSpec, idx: usize, hash: &str, job: &Job, cfg: &SuiteConfig) -> Vec<CaseRecord> {
    let seed = case_seed(cfg.seed, idx, job.kind, job.case);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, big, l) = (spec.source_dim(), spec.ambient_dim(), spec.increment());
    let q = job.q;
    let potentials = (|| -> Result<(Form<BumpField>, Option<Form<BumpField>>)> {
        if l != 1 {
            return Err(Error::Precondition("the Hodge solver needs l = 1".into()));
        }
        if q + 1 > big {
            return Err(Error::DegreeOutOfRange(format!("F would have degree {} > N = {big}", q + 1)));
        }
        let phi = random_bump_form(n, big, q, &cfg.bump, &mut rng)?;
        let psi = if q >= 1 {
            Some(random_bump_form(n, big, q, &cfg.bump, &mut rng)?)
        } else {
            None
        };
        Ok((phi, psi))
    })();
    let (phi, psi) = match potentials {
        Ok(v) => v,
        Err(e) => {
            let mut r = blank(idx, hash, job, seed, cfg.grid, 1.0);
            r.error = Some(e.to_string());
            return vec![r];
        }
    };
    cfg.hodge_grids
        .iter()
        .map(|&p| {
            let mut r = blank(idx, hash, job, seed, p, 1.0);
            let out = (|| {
                let f = spec.apply_t_total(&phi.sample(p)?)?;
                let g = match &psi {
                    Some(psi) => Some(spec.apply_t_star_total(&psi.sample(p)?)?),
                    None => None,
                };
                hodge_solve(spec, q, Some(&f), g.as_ref(), GridShape { n, p })
            })();
            match out {
                Ok(sol) => {
                    r.residual_f = Some(sol.residual_f);
                    r.residual_g = Some(sol.residual_g);
                }
                Err(e) => r.error = Some(e.to_string()),
            }
            r
        })
        .collect()
}

fn max_of(it: impl Iterator<Item = f64>) -> Option<f64> {
    it.fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
}

fn summarize_ratios(records: &[CaseRecord], kind: CaseKind, q: usize, cfg: &SuiteConfig) -> Option<RatioSummary> {
    let sel = |p: usize, s: f64| {
        max_of(
            records
                .iter()
                .filter(|r| r.kind == kind && r.q == q && r.grid == p && r.dilation == s)
                .filter_map(|r| r.ratio),
        )
    };
    let max_coarse = sel(cfg.grid, 1.0)?;
    let max_fine = sel(cfg.fine_grid, 1.0)?;
    let max_by_dilation: Vec<(f64, f64)> = cfg
        .dilations
        .iter()
        .filter_map(|&s| sel(cfg.grid, s).map(|m| (s, m)))
        .collect();
    let dilation_drift = max_by_dilation
        .iter()
        .map(|(_, m)| (m - max_coarse).abs() / max_coarse)
        .fold(0.0, f64::max);
    Some(RatioSummary {
        kind,
        q,
        max_coarse,
        max_fine,
        refinement_delta: (max_fine - max_coarse).abs() / max_fine,
        max_by_dilation,
        dilation_drift,
    })
}

fn run_spec(idx: usize, entry: &SpecEntry, cfg: &SuiteConfig) -> (Vec<CaseRecord>, SpecSummaryRecord) {
    let spec = match OperatorSpec::build(entry.n, entry.k, entry.l, entry.ordering.clone()) {
        Ok(s) => s,
        Err(e) => {
            let summary = SpecSummaryRecord {
                spec_index: idx,
                entry: entry.clone(),
                big_n: None,
                spec_hash: String::new(),
                ratios: Vec::new(),
                max_hodge_residual: None,
                hodge_by_grid: Vec::new(),
                failures: 1,
                error: Some(e.to_string()),
            };
            return (Vec::new(), summary);
        }
    };
    let hash = spec.summary().ordering_hash;
    let mut jobs = Vec::new();
    for (kind, degrees) in [
        (CaseKind::Duality, &cfg.duality_degrees),
        (CaseKind::Gn, &cfg.gn_degrees),
        (CaseKind::Hodge, &cfg.hodge_degrees),
    ] {
        for &q in degrees {
            for case in 0..cfg.cases {
                jobs.push(Job { kind, q, case });
            }
        }
    }
    let records: Vec<CaseRecord> = jobs
        .par_iter()
        .map(|job| match job.kind {
            CaseKind::Duality => duality_case(&spec, idx, &hash, job, cfg),
            CaseKind::Gn => gn_case(&spec, idx, &hash, job, cfg),
            CaseKind::Hodge => hodge_case(&spec, idx, &hash, job, cfg),
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let mut ratios = Vec::new();
    for &q in &cfg.duality_degrees {
        ratios.extend(summarize_ratios(&records, CaseKind::Duality, q, cfg));
    }
    for &q in &cfg.gn_degrees {
        ratios.extend(summarize_ratios(&records, CaseKind::Gn, q, cfg));
    }
    let hodge_res = |r: &CaseRecord| r.residual_f.unwrap_or(0.0).max(r.residual_g.unwrap_or(0.0));
    let hodge: Vec<&CaseRecord> = records
        .iter()
        .filter(|r| r.kind == CaseKind::Hodge && r.error.is_none())
        .collect();
    let hodge_by_grid = cfg
        .hodge_grids
        .iter()
        .filter_map(|&p| max_of(hodge.iter().filter(|r| r.grid == p).map(|r| hodge_res(r))).map(|m| (p, m)))
        .collect();
    let summary = SpecSummaryRecord {
        spec_index: idx,
        entry: entry.clone(),
        big_n: Some(spec.ambient_dim()),
        spec_hash: hash,
        ratios,
        max_hodge_residual: max_of(hodge.iter().map(|r| hodge_res(r))),
        hodge_by_grid,
        failures: records.iter().filter(|r| r.error.is_some()).count(),
        error: None,
    };
    (records, summary)
}

/// Runs every probe of `cfg`. Per-case errors are recorded, never raised.
pub fn run_suite(cfg: &SuiteConfig) -> TestReport {
    let mut records = Vec::new();
    let mut summaries = Vec::new();
    for (idx, entry) in cfg.specs.iter().enumerate() {
        let (r, s) = run_spec(idx, entry, cfg);
        records.extend(r);
        summaries.push(s);
    }
    let ratio_max = |kind: CaseKind| {
        max_of(
            records
                .iter()
                .filter(|r| r.kind == kind)
                .filter_map(|r| r.ratio),
        )
    };
    let failures = summaries.iter().map(|s| s.failures).sum();
    // Coarser Hodge grids only document the decay; the finest one is judged.
    let hodge_ok = summaries.iter().all(|s| {
        s.hodge_by_grid
            .iter()
            .max_by_key(|(p, _)| *p)
            .is_none_or(|(_, m)| *m <= HODGE_TOL)
    });
    TestReport {
        schema_version: SCHEMA_VERSION,
        domain: "periodic box [0, 2pi)^n, measure (2pi)^-n dx".into(),
        config: cfg.clone(),
        max_duality_ratio: ratio_max(CaseKind::Duality),
        max_gn_ratio: ratio_max(CaseKind::Gn),
        records,
        summaries,
        failures,
        residual_checks_pass: failures == 0 && hodge_ok,
    }
}
