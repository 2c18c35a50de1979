//! Reflected and free fractional OU paths, the discrete Skorokhod map and
//! pathwise norms.

use crate::error::{Error, Result};
use crate::fgn::{check_hurst, NoisePair};
use crate::fraccalc::{Grid, SampledFn, SamplePath};
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub sigma: f64,
    pub barrier: f64,
    pub x0: f64,
    pub hurst: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, sigma: f64, barrier: f64, x0: f64, hurst: f64) -> Result<Self> {
        let p = ModelParams { alpha, sigma, barrier, x0, hurst };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() {
            return Err(Error::Parameter("alpha must be finite".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Parameter(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.barrier >= 0.0 && self.barrier.is_finite()) {
            return Err(Error::Parameter(format!("barrier must be ≥ 0, got {}", self.barrier)));
        }
        if !(self.x0 >= self.barrier && self.x0.is_finite()) {
            return Err(Error::Parameter(format!(
                "x0 = {} below barrier {}",
                self.x0, self.barrier
            )));
        }
        check_hurst(self.hurst)
    }
}

/// One reflected trajectory with its local time and driving noise.
#[derive(Debug, Clone)]
pub struct RfouPath {
    pub params: ModelParams,
    pub x: SamplePath,
    pub l: SamplePath,
    pub noise: NoisePair,
}

impl RfouPath {
    pub fn grid(&self) -> &Grid {
        self.x.grid()
    }

    pub fn prefix(&self, steps: usize) -> Result<Self> {
        Ok(RfouPath {
            params: self.params,
            x: self.x.prefix(steps)?,
            l: self.l.prefix(steps)?,
            noise: self.noise.prefix(steps)?,
        })
    }

    /// max_i |X_i − (x0 − αΣ_{j<i}X_jΔ + σW^H_i + L_i)|.
    pub fn balance_residual(&self) -> f64 {
        let p = &self.params;
        let dt = self.grid().dt();
        let x = self.x.values();
        let mut drift = 0.0;
        let mut worst: f64 = 0.0;
        for i in 0..x.len() {
            let rhs = p.x0 - p.alpha * drift + p.sigma * self.noise.fbm.values()[i] + self.l.values()[i];
            worst = worst.max((x[i] - rhs).abs());
            drift += x[i] * dt;
        }
        worst
    }

    /// Rows `t,X,L,WH`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,X,L,WH")?;
        let t = self.grid().nodes();
        for i in 0..t.len() {
            writeln!(
                out,
                "{},{},{},{}",
                t[i],
                self.x.values()[i],
                self.l.values()[i],
                self.noise.fbm.values()[i]
            )?;
        }
        Ok(())
    }
}

/// Reflection of a free path at `barrier`: L_t = max(0, sup_{s≤t}(b − ψ_s)).
pub fn skorokhod_map(free: &SamplePath, barrier: f64) -> Result<(SamplePath, SamplePath)> {
    let v = free.values();
    if v[0] < barrier {
        return Err(Error::Input(format!("free path starts at {} below barrier {barrier}", v[0])));
    }
    let mut l = Vec::with_capacity(v.len());
    let mut run: f64 = 0.0;
    for &psi in v {
        run = run.max(barrier - psi);
        l.push(run);
    }
    let x: Vec<f64> = v.iter().zip(&l).map(|(p, l)| (p + l).max(barrier)).collect();
    Ok((SampledFn::new(*free.grid(), x)?, SampledFn::new(*free.grid(), l)?))
}

fn check_noise(params: &ModelParams, noise: &NoisePair) -> Result<()> {
    params.validate()?;
    if (noise.kernels.hurst() - params.hurst).abs() > 1e-12 {
        return Err(Error::Structure(format!(
            "noise built for H={}, model has H={}",
            noise.kernels.hurst(),
            params.hurst
        )));
    }
    Ok(())
}

/// Euler scheme with projection onto [b, ∞).
pub fn simulate_rfou(params: &ModelParams, noise: &NoisePair) -> Result<RfouPath> {
    check_noise(params, noise)?;
    let grid = *noise.grid();
    let dt = grid.dt();
    let dwh = noise.fbm.increments();
    let b = params.barrier;
    let mut x = Vec::with_capacity(grid.len());
    let mut l = Vec::with_capacity(grid.len());
    x.push(params.x0);
    l.push(0.0);
    let mut xi = params.x0;
    let mut li = 0.0;
    for d in &dwh {
        let free = xi - params.alpha * xi * dt + params.sigma * d;
        if free < b {
            li += b - free;
            xi = b;
        } else {
            xi = free;
        }
        x.push(xi);
        l.push(li);
    }
    Ok(RfouPath {
        params: *params,
        x: SampledFn::new(grid, x).map_err(|_| Error::Numerical("state overflowed".into()))?,
        l: SampledFn::new(grid, l).map_err(|_| Error::Numerical("local time overflowed".into()))?,
        noise: noise.clone(),
    })
}

/// The same Euler scheme without reflection.
pub fn simulate_fou(params: &ModelParams, noise: &NoisePair) -> Result<SamplePath> {
    check_noise(params, noise)?;
    let grid = *noise.grid();
    let dt = grid.dt();
    let mut y = Vec::with_capacity(grid.len());
    let mut yi = params.x0;
    y.push(yi);
    for d in noise.fbm.increments() {
        yi = yi - params.alpha * yi * dt + params.sigma * d;
        y.push(yi);
    }
    SampledFn::new(grid, y).map_err(|_| Error::Numerical("state overflowed".into()))
}

/// max over node pairs of |x_r − x_s| / |r − s|^β.
pub fn holder_norm(path: &SamplePath, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Parameter(format!("Hölder exponent {beta} outside (0, 1)")));
    }
    let v = path.values();
    let dt = path.grid().dt();
    let n = v.len();
    let lag_w: Vec<f64> = (0..n).map(|k| (k as f64 * dt).powf(-beta)).collect();
    let mut best: f64 = 0.0;
    for i in 0..n {
        let vi = v[i];
        for (k, &vj) in v[i + 1..].iter().enumerate() {
            best = best.max((vj - vi).abs() * lag_w[k + 1]);
        }
    }
    Ok(best)
}

pub fn sup_norm(path: &SamplePath) -> f64 {
    path.values().iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Gronwall bound on ‖X‖_∞ for b = 0: 2(x0 + σ‖W^H‖_∞)e^{2|α|T}.
pub fn gronwall_bound(params: &ModelParams, wh_sup: f64, horizon: f64) -> f64 {
    2.0 * (params.x0 + params.sigma * wh_sup) * (2.0 * params.alpha.abs() * horizon).exp()
}

/// Hölder bound for b = 0: 2|α|‖X‖_∞T^{1−β} + 2σ‖W^H‖_β with β = H − ε.
pub fn holder_bound(params: &ModelParams, x_sup: f64, wh_holder: f64, horizon: f64, beta: f64) -> f64 {
    2.0 * params.alpha.abs() * x_sup * horizon.powf(1.0 - beta) + 2.0 * params.sigma * wh_holder
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fgn::make_kernels;
    use std::sync::Arc;

    fn grid(n: usize) -> Grid {
        Grid::new(1.0, n).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(1.0, 0.0, 0.0, 1.0, 0.7).is_err());
        assert!(ModelParams::new(1.0, 1.0, 1.0, 0.5, 0.7).is_err());
        assert!(ModelParams::new(1.0, 1.0, -1.0, 0.5, 0.7).is_err());
        assert!(ModelParams::new(-3.0, 1.0, 0.0, 0.0, 0.7).is_ok());
    }

    #[test]
    fn no_reflection_above_barrier() {
        let psi = SampledFn::from_fn(grid(10), |t| 2.0 + t).unwrap();
        let (x, l) = skorokhod_map(&psi, 1.0).unwrap();
        assert_eq!(x.values(), psi.values());
        assert!(l.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_descent_reflects() {
        let psi = SampledFn::from_fn(grid(10), |t| 1.0 - 2.0 * t).unwrap();
        let (x, l) = skorokhod_map(&psi, 0.0).unwrap();
        for (i, t) in grid(10).nodes().into_iter().enumerate() {
            assert!((x.values()[i] - (1.0 - 2.0 * t).max(0.0)).abs() < 1e-15);
            assert!((l.values()[i] - (2.0 * t - 1.0).max(0.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn start_below_barrier_rejected() {
        let psi = SampledFn::from_fn(grid(4), |_| -1.0).unwrap();
        assert!(skorokhod_map(&psi, 0.0).is_err());
    }

    #[test]
    fn noiseless_decay() {
        let g = Grid::new(1.0, 50).unwrap();
        let k = Arc::new(make_kernels(0.7, g).unwrap());
        let zero = SampledFn::zeros(g);
        let noise = NoisePair::from_bm(&k, &zero).unwrap();
        let p = ModelParams::new(2.0, 1.0, 0.0, 3.0, 0.7).unwrap();
        let path = simulate_rfou(&p, &noise).unwrap();
        let y = simulate_fou(&p, &noise).unwrap();
        for i in 0..=50 {
            let want = 3.0 * (1.0 - 2.0 * g.dt()).powi(i as i32);
            assert!((path.x.values()[i] - want).abs() < 1e-12);
            assert!((y.values()[i] - want).abs() < 1e-12);
        }
        assert!(path.l.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn holder_of_identity() {
        let f = SampledFn::from_fn(grid(64), |t| t).unwrap();
        assert!((holder_norm(&f, 0.5).unwrap() - 1.0).abs() < 1e-12);
        let c = SampledFn::from_fn(grid(8), |_| 4.0).unwrap();
        assert_eq!(holder_norm(&c, 0.3).unwrap(), 0.0);
        assert_eq!(sup_norm(&c), 4.0);
        assert!(holder_norm(&c, 1.0).is_err());
    }

    #[test]
    fn prefix_keeps_leading_nodes() {
        let g = Grid::new(2.0, 40).unwrap();
        let k = Arc::new(make_kernels(0.4, g).unwrap());
        let p = ModelParams::new(1.0, 1.0, 0.0, 0.2, 0.4).unwrap();
        let path = simulate_rfou(&p, &NoisePair::sample(&k, 9)).unwrap();
        let head = path.prefix(10).unwrap();
        assert_eq!(head.grid().steps(), 10);
        assert_eq!(head.x.values(), &path.x.values()[..11]);
        assert_eq!(head.l.values(), &path.l.values()[..11]);
        assert_eq!(head.noise.fbm.values(), &path.noise.fbm.values()[..11]);
        assert!(path.prefix(41).is_err());
    }

    #[test]
    fn hurst_mismatch_rejected() {
        let g = Grid::new(1.0, 8).unwrap();
        let k = Arc::new(make_kernels(0.6, g).unwrap());
        let noise = NoisePair::sample(&k, 1);
        let p = ModelParams::new(1.0, 1.0, 0.0, 1.0, 0.7).unwrap();
        assert!(simulate_rfou(&p, &noise).is_err());
    }
}
