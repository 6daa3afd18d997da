use std::path::Path;

use kwgauss::baseline::{baseline_cnot_formulas, BaselineVariant};
use kwgauss::circuit::{simulate, to_text, SparseState};
use kwgauss::kw1d::{build_kw1d, Kw1dCircuit, Kw1dConfig};
use kwgauss::reference_math::{
    exact_xi_state, fidelity, optimal_state_nd_with_cap, scalar_field_covariance, CovarianceSpec, GaussianSpec1D,
    Regime, Thresholds,
};
use kwgauss::shear::{self, ShearPlan};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::Config;
use crate::fit::{self, FidelityFit, Sample};
use crate::output::{opt, Row};
use crate::{flatten, CliError, Prep1dArgs, ShearArgs};

pub struct Settings {
    pub config: Config,
    pub count_only: bool,
}

impl Settings {
    /// Whether a simulation of a `qubits`-qubit target state may run. The sparse
    /// simulator's cost follows the target's support, so ancillas don't count.
    /// Above the cap this warns, or fails in strict mode.
    fn admit(&self, qubits: usize, what: &str, warnings: &mut Vec<String>) -> Result<bool, CliError> {
        if self.count_only {
            return Ok(false);
        }
        let cap = self.config.qubit_cap;
        if qubits <= cap {
            return Ok(true);
        }
        let msg = format!("{what}: a {qubits}-qubit target exceeds the cap of {cap}");
        if self.config.strict {
            return Err(CliError::Cap(msg));
        }
        warnings.push(format!("{msg}; counts only"));
        Ok(false)
    }
}

/// Runs every point in parallel, keeping input order, then prints warnings
/// in that order.
fn sweep<P: Sync, R: Send>(
    points: &[P],
    f: impl Fn(&P, &mut Vec<String>) -> Result<R, CliError> + Sync,
) -> Result<Vec<R>, CliError> {
    let results: Vec<Result<(R, Vec<String>), CliError>> = points
        .par_iter()
        .map(|p| {
            let mut w = Vec::new();
            f(p, &mut w).map(|r| (r, w))
        })
        .collect();
    let mut rows = Vec::with_capacity(points.len());
    for r in results {
        let (row, warnings) = r?;
        for w in warnings {
            eprintln!("warning: {w}");
        }
        rows.push(row);
    }
    Ok(rows)
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::Hi => "hi",
        Regime::Intermediate => "intermediate",
        Regime::SquareWave => "square_wave",
        Regime::Constant => "constant",
    }
}

fn thresholds(a: &Prep1dArgs, cfg: &Config) -> Result<Thresholds, CliError> {
    Ok(Thresholds::new(a.threshold_lo.unwrap_or(cfg.thresholds.lo), a.threshold_hi.unwrap_or(cfg.thresholds.hi))?)
}

#[derive(Clone, Copy, Debug)]
struct Point1d {
    k: u32,
    b: u32,
    sigma: f64,
}

fn points_1d(a: &Prep1dArgs) -> Result<Vec<Point1d>, CliError> {
    let (ks, bs) = (flatten(&a.k), flatten(&a.b));
    if a.sigma.iter().any(|s| !s.is_finite() || *s <= 0.0) {
        return Err(CliError::Validation("sigma must be positive and finite".into()));
    }
    let mut pts = Vec::new();
    for &k in &ks {
        for &b in &bs {
            for &s in &a.sigma {
                let sigma = if a.physical_scaling { s * f64::powf(2.0, k as f64 / 2.0) } else { s };
                pts.push(Point1d { k, b, sigma });
            }
        }
    }
    Ok(pts)
}

fn build_1d(a: &Prep1dArgs, th: Thresholds, p: Point1d) -> Result<(GaussianSpec1D, Kw1dCircuit), CliError> {
    let spec = GaussianSpec1D::new(a.mu, p.sigma)?;
    let built = build_kw1d(&Kw1dConfig::new(spec, p.k, p.b, th)?)?;
    Ok((spec, built))
}

#[derive(Clone, Debug, Serialize)]
pub struct Prep1dRow {
    pub k: u32,
    pub b: u32,
    pub sigma: f64,
    pub regimes: Vec<Regime>,
    pub qubits: usize,
    pub cnot_kw: u64,
    pub cnot_angle: u64,
    pub cnot_exponential_formula: u128,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<f64>,
}

impl Row for Prep1dRow {
    fn header() -> &'static [&'static str] {
        &["k", "b", "sigma", "regimes", "qubits", "cnot_kw", "cnot_angle", "cnot_exponential_formula", "fidelity"]
    }

    fn record(&self) -> Vec<String> {
        let regimes: Vec<&str> = self.regimes.iter().map(|r| regime_name(*r)).collect();
        vec![
            self.k.to_string(),
            self.b.to_string(),
            self.sigma.to_string(),
            regimes.join(";"),
            self.qubits.to_string(),
            self.cnot_kw.to_string(),
            self.cnot_angle.to_string(),
            self.cnot_exponential_formula.to_string(),
            opt(&self.fidelity),
        ]
    }
}

pub fn prep1d(a: &Prep1dArgs, s: &Settings) -> Result<Vec<Prep1dRow>, CliError> {
    let th = thresholds(a, &s.config)?;
    sweep(&points_1d(a)?, |&p, warnings| {
        let (spec, built) = build_1d(a, th, p)?;
        let qubits = built.circuit.qubit_count();
        let label = format!("k={} b={} sigma={}", p.k, p.b, p.sigma);
        let fidelity = if s.admit(p.k as usize, &label, warnings)? {
            let start = SparseState::zero(qubits)?.with_prune(s.config.prune_floor);
            let (state, _) = simulate(&built.circuit, &start)?.project_low(p.k as usize)?;
            Some(fidelity(&state, &exact_xi_state(spec, p.k)?)?)
        } else {
            None
        };
        Ok(Prep1dRow {
            k: p.k,
            b: p.b,
            sigma: p.sigma,
            regimes: built.levels.iter().map(|l| l.regime()).collect(),
            qubits,
            cnot_kw: built.total_cnots(),
            cnot_angle: built.levels.iter().map(|l| l.angle_cnots).sum(),
            cnot_exponential_formula: baseline_cnot_formulas(p.k, BaselineVariant::GenericReal)?,
            fidelity,
        })
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CountsRow {
    pub k: u32,
    pub b: u32,
    pub sigma: f64,
    pub cnot_kw: u64,
    pub generic_complex: u128,
    pub generic_real: u128,
    pub symmetric_real: u128,
}

impl Row for CountsRow {
    fn header() -> &'static [&'static str] {
        &["k", "b", "sigma", "cnot_kw", "generic_complex", "generic_real", "symmetric_real"]
    }

    fn record(&self) -> Vec<String> {
        vec![
            self.k.to_string(),
            self.b.to_string(),
            self.sigma.to_string(),
            self.cnot_kw.to_string(),
            self.generic_complex.to_string(),
            self.generic_real.to_string(),
            self.symmetric_real.to_string(),
        ]
    }
}

pub fn counts(a: &Prep1dArgs, s: &Settings) -> Result<Vec<CountsRow>, CliError> {
    let th = thresholds(a, &s.config)?;
    sweep(&points_1d(a)?, |&p, _| {
        let (_, built) = build_1d(a, th, p)?;
        let f = |v| baseline_cnot_formulas(p.k, v);
        Ok(CountsRow {
            k: p.k,
            b: p.b,
            sigma: p.sigma,
            cnot_kw: built.total_cnots(),
            generic_complex: f(BaselineVariant::GenericComplex)?,
            generic_real: f(BaselineVariant::GenericReal)?,
            symmetric_real: f(BaselineVariant::SymmetricReal)?,
        })
    })
}

fn single<T: Copy>(what: &str, v: &[T]) -> Result<T, CliError> {
    match v {
        [x] => Ok(*x),
        _ => Err(CliError::Validation(format!("export takes exactly one {what}"))),
    }
}

pub fn export_prep1d(a: &Prep1dArgs, s: &Settings) -> Result<String, CliError> {
    let pts = points_1d(a)?;
    let p = single("(k, b, sigma) point", &pts)?;
    let (_, built) = build_1d(a, thresholds(a, &s.config)?, p)?;
    Ok(to_text(&built.circuit))
}

fn read_covariance(path: &Path) -> Result<CovarianceSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| CliError::Validation(format!("bad covariance entry {t:?}"))))
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Validation(format!("covariance in {} is not square", path.display())));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(CovarianceSpec::centred(DMatrix::from_row_slice(n, n, &flat))?)
}

#[derive(Clone, Debug)]
struct ShearPoint {
    k: u32,
    mass: Option<f64>,
    scale: Option<f64>,
    spec: CovarianceSpec,
}

fn shear_points(a: &ShearArgs) -> Result<Vec<ShearPoint>, CliError> {
    let ks = flatten(&a.k);
    let mut pts = Vec::new();
    if let Some(path) = &a.covariance {
        let spec = read_covariance(path)?;
        for &k in &ks {
            pts.push(ShearPoint { k, mass: None, scale: None, spec: spec.clone() });
        }
        return Ok(pts);
    }
    for &k in &ks {
        for n in flatten(&a.n_dims) {
            for &scale in &a.scale {
                let spec = scalar_field_covariance(n as usize, a.mass, scale)?;
                pts.push(ShearPoint { k, mass: Some(a.mass), scale: Some(scale), spec });
            }
        }
    }
    Ok(pts)
}

/// `sqrt(tr(Sigma) / N)`, the width entering the fidelity fit.
fn characteristic_width(spec: &CovarianceSpec) -> f64 {
    (spec.sigma_mat.trace() / spec.dims() as f64).sqrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct ShearRow {
    pub n: usize,
    pub k: u32,
    pub r: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    pub sigma_char: f64,
    pub cnot_measured: u64,
    pub cnot_bound: u64,
    /// Shear plus N generic real 1D preparations.
    pub cnot_pipeline: u128,
    /// Generic real preparation of the whole Nk-qubit state; absent past 126 qubits.
    pub cnot_generic_real: Option<u128>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity_vs_optimal: Option<f64>,
    /// Fit over every simulated row sharing this k.
    pub fit: Option<FidelityFit>,
}

impl Row for ShearRow {
    fn header() -> &'static [&'static str] {
        &[
            "n",
            "k",
            "r",
            "mass",
            "scale",
            "sigma_char",
            "cnot_measured",
            "cnot_bound",
            "cnot_pipeline",
            "cnot_generic_real",
            "fidelity_vs_optimal",
            "fit_a",
            "fit_b",
            "fit_a_tilde",
        ]
    }

    fn record(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.k.to_string(),
            self.r.to_string(),
            opt(&self.mass),
            opt(&self.scale),
            self.sigma_char.to_string(),
            self.cnot_measured.to_string(),
            self.cnot_bound.to_string(),
            self.cnot_pipeline.to_string(),
            opt(&self.cnot_generic_real),
            opt(&self.fidelity_vs_optimal),
            opt(&self.fit.map(|f| f.a)),
            opt(&self.fit.map(|f| f.b)),
            opt(&self.fit.map(|f| f.a_tilde)),
        ]
    }
}

fn shear_plan(spec: &CovarianceSpec, k: u32) -> Result<ShearPlan, CliError> {
    Ok(ShearPlan::from_covariance(spec, k)?.0)
}

pub fn shear(a: &ShearArgs, s: &Settings) -> Result<Vec<ShearRow>, CliError> {
    let cap = s.config.qubit_cap;
    let mut rows = sweep(&shear_points(a)?, |p, warnings| {
        let n = p.spec.dims();
        let plan = shear_plan(&p.spec, p.k)?;
        let (_, report) = shear::build_shear(&plan)?;
        let label = format!("N={n} k={}", p.k);
        let fidelity_vs_optimal = if s.admit(n * p.k as usize, &label, warnings)? {
            let (_, state) = shear::sheared_gaussian(&p.spec, p.k, cap)?;
            Some(fidelity(&state, &optimal_state_nd_with_cap(&p.spec, p.k, cap)?)?)
        } else {
            None
        };
        let total = n as u32 * p.k;
        Ok(ShearRow {
            n,
            k: p.k,
            r: plan.r,
            mass: p.mass,
            scale: p.scale,
            sigma_char: characteristic_width(&p.spec),
            cnot_measured: report.cnot_count,
            cnot_bound: shear::shear_cnot_bound(n as u64, p.k as u64, plan.r as u64),
            cnot_pipeline: report.cnot_count as u128
                + n as u128 * baseline_cnot_formulas(p.k, BaselineVariant::GenericReal)?,
            cnot_generic_real: baseline_cnot_formulas(total, BaselineVariant::GenericReal).ok(),
            fidelity_vs_optimal,
            fit: None,
        })
    })?;
    let mut ks: Vec<u32> = rows.iter().map(|r| r.k).collect();
    ks.dedup();
    for k in ks {
        let samples: Vec<Sample> = rows
            .iter()
            .filter(|r| r.k == k)
            .filter_map(|r| r.fidelity_vs_optimal.map(|f| Sample { n: r.n as f64, sigma: r.sigma_char, fidelity: f }))
            .collect();
        let fitted = fit::fit(&samples);
        for r in rows.iter_mut().filter(|r| r.k == k) {
            r.fit = fitted;
        }
    }
    Ok(rows)
}

pub fn export_shear(a: &ShearArgs) -> Result<String, CliError> {
    let pts = shear_points(a)?;
    let [p] = pts.as_slice() else {
        return Err(CliError::Validation("export takes exactly one (N, k, scale) point".into()));
    };
    let (circuit, _) = shear::build_shear(&shear_plan(&p.spec, p.k)?)?;
    Ok(to_text(&circuit))
}
