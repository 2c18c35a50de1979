//! The χ process, fixed-horizon and sequential drift estimators, and the
//! two likelihood ratios.

use crate::error::{Error, Result};
use crate::fgn::{bm_increments, inverse_from_derivative, kh_inverse, make_kernels, KernelSet, NoisePair};
use crate::fraccalc::{Grid, SampledFn};
use crate::reflect::{simulate_rfou, ModelParams, RfouPath};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::sync::Arc;

/// Everything the likelihood needs from one path.
///
/// `chi_cell[j]` is the ⟨M⟩-average of χ over cell j,
/// (A_{j+1} − A_j)/(⟨M⟩_{j+1} − ⟨M⟩_j) with A_t = ∫_0^t k_H(t,s)X_s ds, which
/// is the integrand used in every stochastic sum. `chi` holds nodal values
/// from the fractional-operator formula.
#[derive(Debug, Clone)]
pub struct SufficientProcess {
    pub grid: Grid,
    pub chi: Vec<f64>,
    pub chi_cell: Vec<f64>,
    pub qv: Vec<f64>,
    pub info: Vec<f64>,
    pub xt_tilde: Vec<f64>,
    pub lt_tilde: Vec<f64>,
    pub drift_tilde: Vec<f64>,
}

impl SufficientProcess {
    /// Σ_{j<m} χ̄_j(ΔL̃_j − ΔX̃_j).
    pub fn score_numerator(&self, m: usize) -> f64 {
        (0..m)
            .map(|j| {
                let dl = self.lt_tilde[j + 1] - self.lt_tilde[j];
                let dx = self.xt_tilde[j + 1] - self.xt_tilde[j];
                self.chi_cell[j] * (dl - dx)
            })
            .sum()
    }

    /// Σ_{j<m} χ̄_j ΔM_j for a martingale path given at the nodes.
    pub fn martingale_sum(&self, m_path: &[f64], m: usize) -> f64 {
        (0..m).map(|j| self.chi_cell[j] * (m_path[j + 1] - m_path[j])).sum()
    }

    /// Σ_{j<m} χ̄_j ΔX̃_j and Σ_{j<m} χ̄_j ΔL̃_j.
    pub fn tilde_sums(&self, m: usize) -> (f64, f64) {
        let mut sx = 0.0;
        let mut sl = 0.0;
        for j in 0..m {
            sx += self.chi_cell[j] * (self.xt_tilde[j + 1] - self.xt_tilde[j]);
            sl += self.chi_cell[j] * (self.lt_tilde[j + 1] - self.lt_tilde[j]);
        }
        (sx, sl)
    }
}

fn check_kernels(path: &RfouPath, kernels: &KernelSet) -> Result<()> {
    let g = path.grid();
    let kg = kernels.grid();
    if g.steps() > kg.steps() || (g.dt() - kg.dt()).abs() > 1e-12 * kg.dt() {
        return Err(Error::Structure("path grid is not covered by the kernel grid".into()));
    }
    if (kernels.hurst() - path.params.hurst).abs() > 1e-12 {
        return Err(Error::Structure(format!(
            "kernels for H={}, path has H={}",
            kernels.hurst(),
            path.params.hurst
        )));
    }
    if !(0.1..=0.9).contains(&kernels.hurst()) {
        return Err(Error::Parameter(format!("H={} outside [0.1, 0.9]", kernels.hurst())));
    }
    Ok(())
}

fn lean_process(path: &RfouPath, kernels: &KernelSet) -> SufficientProcess {
    let grid = *path.grid();
    let n = grid.steps();
    let dt = grid.dt();
    let x = path.x.values();
    let xt_tilde = kernels.apply_k(&path.x.increments());
    let lt_tilde = kernels.apply_k(&path.l.increments());
    let xd: Vec<f64> = x[..n].iter().map(|v| v * dt).collect();
    let drift_tilde = kernels.apply_k(&xd);
    let qv = kernels.qv()[..=n].to_vec();
    let mut chi_cell = Vec::with_capacity(n);
    let mut info = Vec::with_capacity(n + 1);
    info.push(0.0);
    let mut acc = 0.0;
    for j in 0..n {
        let dq = qv[j + 1] - qv[j];
        let c = (drift_tilde[j + 1] - drift_tilde[j]) / dq;
        acc += c * c * dq;
        chi_cell.push(c);
        info.push(acc);
    }
    SufficientProcess { grid, chi: Vec::new(), chi_cell, qv, info, xt_tilde, lt_tilde, drift_tilde }
}

/// Nodal χ_t = (2H/b_H) t^{H−1/2} (K_H⁻¹ ∫X)(t), equal to the operator
/// formula c·t^{2H−1} D^{H−1/2}(u^{1/2−H}X_u)(t).
pub fn chi_nodes(x: &SampledFn, kernels: &KernelSet) -> Result<Vec<f64>> {
    let c = kernels.consts();
    let g = c.gamma();
    if g == 0.0 {
        return Ok(x.values().to_vec());
    }
    let kinv = inverse_from_derivative(x, kernels)?;
    let t = x.grid().nodes();
    let f = 2.0 * c.hurst / c.b_h;
    let mut out: Vec<f64> = t.iter().zip(kinv.values()).map(|(&ti, &k)| f * ti.powf(g) * k).collect();
    out[0] = x.values()[0];
    Ok(out)
}

pub fn chi_process(path: &RfouPath, kernels: &KernelSet) -> Result<SufficientProcess> {
    check_kernels(path, kernels)?;
    let mut s = lean_process(path, kernels);
    s.chi = chi_nodes(&path.x, kernels)?;
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EstimateKind {
    #[serde(rename = "mle")]
    FixedT,
    #[serde(rename = "sequential")]
    Sequential,
}

impl EstimateKind {
    pub fn label(&self) -> &'static str {
        match self {
            EstimateKind::FixedT => "mle",
            EstimateKind::Sequential => "sequential",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub kind: EstimateKind,
    pub alpha_hat: f64,
    /// I_T for fixed-horizon records, I_τ for sequential ones.
    pub info_used: f64,
    pub horizon_or_tau: f64,
    pub hit: bool,
    /// Threshold h of a sequential plan.
    pub level: Option<f64>,
    pub standardized: Option<f64>,
}

/// (α̂ − α)·√I/σ, with I = h for sequential records and I_T otherwise.
pub fn standardized_stat(record: &EstimateRecord, alpha_true: f64, sigma: f64) -> Result<f64> {
    let info = match (record.kind, record.level) {
        (EstimateKind::Sequential, Some(h)) if record.hit => h,
        _ => record.info_used,
    };
    if !(info > 0.0) {
        return Err(Error::Degenerate("zero information".into()));
    }
    Ok((record.alpha_hat - alpha_true) * info.sqrt() / sigma)
}

/// α̃_T = (∫χ dL̃ − ∫χ dX̃) / ∫χ² d⟨M⟩.
pub fn mle(path: &RfouPath, kernels: &KernelSet, alpha_true: Option<f64>) -> Result<EstimateRecord> {
    check_kernels(path, kernels)?;
    let s = lean_process(path, kernels);
    mle_from(&s, path, alpha_true)
}

fn mle_from(s: &SufficientProcess, path: &RfouPath, alpha_true: Option<f64>) -> Result<EstimateRecord> {
    let n = s.grid.steps();
    let info = s.info[n];
    if !(info > 0.0) {
        return Err(Error::Degenerate("path carries no information (I_T = 0)".into()));
    }
    let mut rec = EstimateRecord {
        kind: EstimateKind::FixedT,
        alpha_hat: s.score_numerator(n) / info,
        info_used: info,
        horizon_or_tau: s.grid.horizon(),
        hit: true,
        level: None,
        standardized: None,
    };
    if let Some(a) = alpha_true {
        rec.standardized = Some(standardized_stat(&rec, a, path.params.sigma)?);
    }
    Ok(rec)
}

/// Log-likelihood ratio against the driftless reflected model.
pub fn log_likelihood(s: &SufficientProcess, alpha: f64, sigma: f64) -> f64 {
    let n = s.grid.steps();
    let (sx, sl) = s.tilde_sums(n);
    let s2 = sigma * sigma;
    -(alpha / s2) * sx - alpha * alpha / (2.0 * s2) * s.info[n] + (alpha / s2) * sl
}

/// Discretization of a sequential plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequentialPlan {
    pub h: f64,
    pub dt: f64,
    pub max_horizon: f64,
    pub initial_horizon: f64,
}

impl SequentialPlan {
    pub fn new(h: f64, dt: f64, max_horizon: f64) -> Result<Self> {
        let p = SequentialPlan { h, dt, max_horizon, initial_horizon: (64.0 * dt).min(max_horizon) };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::Parameter(format!("h must be positive, got {}", self.h)));
        }
        if !(self.dt > 0.0 && self.max_horizon.is_finite() && self.max_horizon >= 2.0 * self.dt) {
            return Err(Error::Parameter("need 0 < 2·dt ≤ max horizon < ∞".into()));
        }
        if !(self.initial_horizon > 0.0) {
            return Err(Error::Parameter("initial horizon must be positive".into()));
        }
        Ok(())
    }

    fn max_steps(&self) -> usize {
        (self.max_horizon / self.dt).round().max(2.0) as usize
    }
}

/// Result of one sequential run, with the simulated path up to the end of
/// the last chunk.
#[derive(Debug, Clone)]
pub struct SequentialOutcome {
    pub record: EstimateRecord,
    /// Index of the stopping node (or the last node on a miss).
    pub tau_index: usize,
    pub path: RfouPath,
    pub stats: SufficientProcess,
}

/// Sequential plans for one Hurst index and step, sharing kernels.
pub struct SequentialRunner {
    plan: SequentialPlan,
    kernels: Arc<KernelSet>,
}

impl SequentialRunner {
    pub fn new(hurst: f64, plan: SequentialPlan) -> Result<Self> {
        plan.validate()?;
        let grid = Grid::with_step(plan.dt, plan.max_steps())?;
        Ok(SequentialRunner { plan, kernels: Arc::new(make_kernels(hurst, grid)?) })
    }

    pub fn kernels(&self) -> &Arc<KernelSet> {
        &self.kernels
    }

    /// Simulates forward in doubling chunks until I first reaches h.
    pub fn run(&self, params: &ModelParams, seed: u64) -> Result<SequentialOutcome> {
        params.validate()?;
        let plan = &self.plan;
        let max_steps = plan.max_steps();
        let mut steps = ((plan.initial_horizon / plan.dt).round() as usize).clamp(2, max_steps);
        let mut incr = Vec::new();
        loop {
            if incr.len() < steps {
                incr = bm_increments(seed, steps, plan.dt);
            }
            let grid = Grid::with_step(plan.dt, steps)?;
            let noise = NoisePair::from_bm_increments(&self.kernels, grid, &incr)?;
            let path = simulate_rfou(params, &noise)?;
            check_kernels(&path, &self.kernels)?;
            let stats = lean_process(&path, &self.kernels);
            if let Some(tau) = stats.info.iter().position(|&v| v >= plan.h) {
                let alpha_hat = stats.score_numerator(tau) / plan.h;
                let record = EstimateRecord {
                    kind: EstimateKind::Sequential,
                    alpha_hat,
                    info_used: stats.info[tau],
                    horizon_or_tau: tau as f64 * plan.dt,
                    hit: true,
                    level: Some(plan.h),
                    standardized: Some((alpha_hat - params.alpha) * plan.h.sqrt() / params.sigma),
                };
                return Ok(SequentialOutcome { record, tau_index: tau, path, stats });
            }
            if steps == max_steps {
                let info = stats.info[steps];
                let alpha_hat = if info > 0.0 { stats.score_numerator(steps) / info } else { f64::NAN };
                let record = EstimateRecord {
                    kind: EstimateKind::Sequential,
                    alpha_hat,
                    info_used: info,
                    horizon_or_tau: grid.horizon(),
                    hit: false,
                    level: Some(plan.h),
                    standardized: if info > 0.0 {
                        Some((alpha_hat - params.alpha) * info.sqrt() / params.sigma)
                    } else {
                        None
                    },
                };
                return Ok(SequentialOutcome { record, tau_index: steps, path, stats });
            }
            steps = (steps * 2).min(max_steps);
        }
    }
}

/// One sequential plan: stop at the first node where I ≥ h, then
/// α̂ = (∫_0^τ χ dL̃ − ∫_0^τ χ dX̃)/h.
pub fn sequential_mle(params: &ModelParams, plan: &SequentialPlan, seed: u64) -> Result<EstimateRecord> {
    Ok(SequentialRunner::new(params.hurst, *plan)?.run(params, seed)?.record)
}

/// A likelihood ratio kept in the log domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikelihoodRatio {
    pub log_value: f64,
    pub value: f64,
    pub overflow: bool,
}

impl LikelihoodRatio {
    fn from_log(log_value: f64) -> Self {
        let value = log_value.exp();
        LikelihoodRatio { log_value, value, overflow: !value.is_finite() || (value == 0.0 && log_value.is_finite()) }
    }
}

/// η_T = exp((α/σ)∫χ dM − (α²/2σ²)∫χ² d⟨M⟩).
pub fn likelihood_ratio_fm(path: &RfouPath, alpha: f64, kernels: &KernelSet) -> Result<LikelihoodRatio> {
    check_kernels(path, kernels)?;
    if alpha == 0.0 {
        return Ok(LikelihoodRatio::from_log(0.0));
    }
    let s = lean_process(path, kernels);
    let n = s.grid.steps();
    let sigma = path.params.sigma;
    let mg = s.martingale_sum(path.noise.martingale.values(), n);
    Ok(LikelihoodRatio::from_log(alpha / sigma * mg - alpha * alpha / (2.0 * sigma * sigma) * s.info[n]))
}

/// ξ_T = exp(∫ K_H⁻¹(∫(α/σ)X)(s) dW_s − ½∫ (K_H⁻¹(∫(α/σ)X))² ds).
pub fn likelihood_ratio_kinv(path: &RfouPath, alpha: f64, kernels: &KernelSet) -> Result<LikelihoodRatio> {
    check_kernels(path, kernels)?;
    if alpha == 0.0 {
        return Ok(LikelihoodRatio::from_log(0.0));
    }
    let f = kinv_integrand(path, kernels)?;
    let c = alpha / path.params.sigma;
    let dt = path.grid().dt();
    let db = path.noise.bm.increments();
    let mut lin = 0.0;
    let mut quad = 0.0;
    for (fj, dbj) in f.iter().zip(&db) {
        lin += c * fj * dbj;
        quad += (c * fj).powi(2) * dt;
    }
    Ok(LikelihoodRatio::from_log(lin - 0.5 * quad))
}

/// Nodal values of K_H⁻¹(∫_0^· X_r dr).
pub fn kinv_integrand(path: &RfouPath, kernels: &KernelSet) -> Result<Vec<f64>> {
    let grid = *path.grid();
    let dt = grid.dt();
    let mut phi = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    phi.push(0.0);
    for &x in &path.x.values()[..grid.steps()] {
        acc += x * dt;
        phi.push(acc);
    }
    Ok(kh_inverse(&SampledFn::new(grid, phi)?, kernels)?.into_values())
}

/// Rows `kind,alpha_hat,info_used,tau_or_T,hit,standardized`.
pub fn write_estimates_csv<W: Write>(records: &[EstimateRecord], mut out: W) -> Result<()> {
    writeln!(out, "kind,alpha_hat,info_used,tau_or_T,hit,standardized")?;
    for r in records {
        let z = r.standardized.map_or(String::new(), |v| v.to_string());
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.kind.label(),
            r.alpha_hat,
            r.info_used,
            r.horizon_or_tau,
            r.hit,
            z
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fraccalc::SampledFn;

    fn setup(h: f64, n: usize, horizon: f64) -> Arc<KernelSet> {
        Arc::new(make_kernels(h, Grid::new(horizon, n).unwrap()).unwrap())
    }

    #[test]
    fn half_collapse_of_sufficient_process() {
        let k = setup(0.5, 200, 2.0);
        let p = ModelParams::new(1.0, 1.0, 0.0, 0.5, 0.5).unwrap();
        let path = simulate_rfou(&p, &NoisePair::sample(&k, 3)).unwrap();
        let s = chi_process(&path, &k).unwrap();
        let x = path.x.values();
        for i in 0..200 {
            assert!((s.chi[i] - x[i]).abs() < 1e-10);
            assert!((s.chi_cell[i] - x[i]).abs() < 1e-10);
            assert!((s.qv[i] - i as f64 * 0.01).abs() < 1e-12);
            assert!((s.xt_tilde[i] - (x[i] - x[0])).abs() < 1e-10);
            assert!((s.lt_tilde[i] - path.l.values()[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn info_monotone() {
        let k = setup(0.3, 300, 3.0);
        let p = ModelParams::new(0.5, 1.0, 0.0, 1.0, 0.3).unwrap();
        let path = simulate_rfou(&p, &NoisePair::sample(&k, 5)).unwrap();
        let s = chi_process(&path, &k).unwrap();
        assert_eq!(s.info[0], 0.0);
        assert!(s.info.windows(2).all(|w| w[1] >= w[0]));
        assert!(s.qv.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn degenerate_path_errors() {
        let k = setup(0.7, 50, 1.0);
        let g = *k.grid();
        let noise = NoisePair::from_bm(&k, &SampledFn::zeros(g)).unwrap();
        let p = ModelParams::new(1.0, 1.0, 0.0, 0.0, 0.7).unwrap();
        let path = simulate_rfou(&p, &noise).unwrap();
        assert!(matches!(mle(&path, &k, None), Err(Error::Degenerate(_))));
    }

    #[test]
    fn standardized_zero_when_exact() {
        let r = EstimateRecord {
            kind: EstimateKind::FixedT,
            alpha_hat: 1.3,
            info_used: 4.0,
            horizon_or_tau: 1.0,
            hit: true,
            level: None,
            standardized: None,
        };
        assert_eq!(standardized_stat(&r, 1.3, 2.0).unwrap(), 0.0);
        assert!((standardized_stat(&r, 1.0, 2.0).unwrap() - 0.3).abs() < 1e-12);
        let z = EstimateRecord { info_used: 0.0, ..r };
        assert!(standardized_stat(&z, 1.0, 1.0).is_err());
    }

    #[test]
    fn alpha_zero_ratios_are_one() {
        let k = setup(0.7, 64, 1.0);
        let p = ModelParams::new(0.0, 1.0, 0.0, 1.0, 0.7).unwrap();
        let path = simulate_rfou(&p, &NoisePair::sample(&k, 8)).unwrap();
        assert_eq!(likelihood_ratio_fm(&path, 0.0, &k).unwrap().value, 1.0);
        assert_eq!(likelihood_ratio_kinv(&path, 0.0, &k).unwrap().value, 1.0);
    }

    #[test]
    fn plan_validation() {
        assert!(SequentialPlan::new(0.0, 0.1, 10.0).is_err());
        assert!(SequentialPlan::new(1.0, 0.1, f64::INFINITY).is_err());
        assert!(SequentialPlan::new(1.0, 0.1, 10.0).is_ok());
    }

    #[test]
    fn csv_header() {
        let mut buf = Vec::new();
        write_estimates_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "kind,alpha_hat,info_used,tau_or_T,hit,standardized\n");
    }
}
