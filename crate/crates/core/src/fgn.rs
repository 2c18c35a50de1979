//! Fractional Brownian motion: constants, kernels, samplers and the
//! fundamental martingale.

use crate::error::{Error, Result};
use crate::fraccalc::{causal_convolve, frac_operator_left, series_inverse, Grid, SampledFn, SamplePath};
use crate::special::{beta_lower, beta_upper, gamma, pow_diff};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::sync::{Arc, OnceLock};

/// Largest grid for which the dense K̄ table and the Cholesky sampler are built.
pub const DENSE_LIMIT: usize = 1 << 12;

pub fn check_hurst(h: f64) -> Result<()> {
    if !(h >= 1e-3 && h <= 1.0 - 1e-3) {
        return Err(Error::Parameter(format!("Hurst index {h} outside [0.001, 0.999]")));
    }
    Ok(())
}

/// Constants attached to a Hurst index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConsts {
    pub hurst: f64,
    pub b_h: f64,
    pub c_h: f64,
    pub kappa: f64,
    pub lambda: f64,
}

impl KernelConsts {
    pub fn new(h: f64) -> Result<Self> {
        check_hurst(h)?;
        let b_h = (2.0 * h * gamma(1.5 - h) / (gamma(h + 0.5) * gamma(2.0 - 2.0 * h))).sqrt();
        let kappa = 2.0 * h * gamma(1.5 - h) * gamma(h + 0.5);
        let lambda = 2.0 * h * gamma(3.0 - 2.0 * h) * gamma(h + 0.5) / gamma(1.5 - h);
        Ok(KernelConsts { hurst: h, b_h, c_h: b_h * (h - 0.5), kappa, lambda })
    }

    /// H − 1/2.
    pub fn gamma(&self) -> f64 {
        self.hurst - 0.5
    }

    /// ⟨M⟩_t = t^{2−2H}/λ.
    pub fn qv(&self, t: f64) -> f64 {
        t.powf(2.0 - 2.0 * self.hurst) / self.lambda
    }
}

/// fBm covariance ½(t^{2H} + s^{2H} − |t−s|^{2H}).
pub fn covariance(h: f64, t: f64, s: f64) -> Result<f64> {
    if t < 0.0 || s < 0.0 {
        return Err(Error::Parameter(format!("negative time ({t}, {s})")));
    }
    let p = 2.0 * h;
    Ok(0.5 * (t.powf(p) + s.powf(p) - (t - s).abs().powf(p)))
}

/// Constants and cell-averaged kernels on one grid.
///
/// The martingale kernel is stored in separable form
/// k̄(t_i, cell l) = κ⁻¹ Δ^{1−2H} a_l b_{i−l}, where a_l and b_m are the exact
/// cell averages of s^{1/2−H} and (t_i − s)^{1/2−H}. The dense K̄ table and
/// the inverse of k̄ are built on first use.
#[derive(Debug)]
pub struct KernelSet {
    consts: KernelConsts,
    grid: Grid,
    a: Vec<f64>,
    b: Vec<f64>,
    w: Vec<f64>,
    qv: Vec<f64>,
    dense: OnceLock<Vec<f64>>,
    inv: OnceLock<Vec<f64>>,
}

pub fn make_kernels(h: f64, grid: Grid) -> Result<KernelSet> {
    let consts = KernelConsts::new(h)?;
    let n = grid.steps();
    let g = consts.gamma();
    let p = 1.0 - g;
    let a: Vec<f64> = (0..n).map(|l| pow_diff(l as f64, p) / p).collect();
    let mut b = vec![0.0; n + 1];
    for (m, bm) in b.iter_mut().enumerate().skip(1) {
        *bm = pow_diff((m - 1) as f64, p) / p;
    }
    let dt = grid.dt();
    let q = 2.0 - 2.0 * h;
    let dq0 = dt.powf(q) / consts.lambda;
    let w: Vec<f64> = (0..n).map(|j| (dq0 * pow_diff(j as f64, q) / dt).sqrt()).collect();
    let qv: Vec<f64> = (0..=n).map(|i| dq0 * (i as f64).powf(q)).collect();
    Ok(KernelSet { consts, grid, a, b, w, qv, dense: OnceLock::new(), inv: OnceLock::new() })
}

impl KernelSet {
    pub fn hurst(&self) -> f64 {
        self.consts.hurst
    }

    pub fn consts(&self) -> &KernelConsts {
        &self.consts
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// ⟨M⟩ at every node.
    pub fn qv(&self) -> &[f64] {
        &self.qv
    }

    /// Root-mean-square cell average of dM/dB = (b_H/2H) s^{1/2−H} on cell j,
    /// so that w_j² Δ is exactly the ⟨M⟩ increment.
    pub fn martingale_weight(&self, j: usize) -> f64 {
        self.w[j]
    }

    pub fn martingale_weights(&self) -> &[f64] {
        &self.w
    }

    fn k_scale(&self) -> f64 {
        self.grid.dt().powf(-2.0 * self.consts.gamma()) / self.consts.kappa
    }

    /// Cell average of k_H(t_i, ·) over cell l < i.
    pub fn k_cell(&self, i: usize, l: usize) -> f64 {
        assert!(l < i && i <= self.grid.steps());
        self.k_scale() * self.a[l] * self.b[i - l]
    }

    /// Σ_l k̄(t_i, l)·z_l at nodes 0..=m for increments z of length m ≤ n.
    pub fn apply_k(&self, incr: &[f64]) -> Vec<f64> {
        let m = incr.len();
        assert!(m <= self.grid.steps());
        if self.consts.gamma() == 0.0 {
            let mut out = Vec::with_capacity(m + 1);
            let mut acc = 0.0;
            out.push(0.0);
            for z in incr {
                acc += z;
                out.push(acc);
            }
            return out;
        }
        let s: Vec<f64> = incr.iter().zip(&self.a).map(|(z, a)| z * a).collect();
        let y = causal_convolve(&self.b[..=m], &s, m + 1);
        let k = self.k_scale();
        let mut out: Vec<f64> = y.into_iter().map(|v| v * k).collect();
        out[0] = 0.0;
        out
    }

    fn inverse_series(&self) -> &[f64] {
        self.inv.get_or_init(|| {
            series_inverse(&self.b[1..], self.grid.steps()).expect("b_1 > 0 by construction")
        })
    }

    /// Increments z with apply_k(z) equal to the node values `m` (m[0] = 0).
    pub fn invert_k(&self, m: &[f64]) -> Vec<f64> {
        let len = m.len() - 1;
        assert!(len <= self.grid.steps());
        if self.consts.gamma() == 0.0 {
            return m.windows(2).map(|w| w[1] - w[0]).collect();
        }
        let k = self.k_scale();
        let rhs: Vec<f64> = m[1..].iter().map(|v| v / k).collect();
        let s = causal_convolve(self.inverse_series(), &rhs, len);
        s.iter().zip(&self.a).map(|(s, a)| s / a).collect()
    }

    fn dense(&self) -> Result<&[f64]> {
        let n = self.grid.steps();
        if n > DENSE_LIMIT {
            return Err(Error::Parameter(format!(
                "dense kernel table limited to {DENSE_LIMIT} steps, grid has {n}"
            )));
        }
        Ok(self.dense.get_or_init(|| dense_table(&self.consts, &self.grid)))
    }

    /// Cell average of K_H(t_i, ·) over cell j < i.
    pub fn kernel_cell(&self, i: usize, j: usize) -> Result<f64> {
        if !(j < i && i <= self.grid.steps()) {
            return Err(Error::Parameter(format!("kernel cell ({i}, {j}) outside the table")));
        }
        Ok(self.dense()?[i * (i - 1) / 2 + j])
    }

    /// Σ_{j<i} K̄(t_i, j)·z_j at every node.
    pub fn apply_kernel(&self, incr: &[f64]) -> Result<Vec<f64>> {
        let n = self.grid.steps();
        if incr.len() != n {
            return Err(Error::Structure(format!("{} increments for {} cells", incr.len(), n)));
        }
        let tab = self.dense()?;
        let mut out = vec![0.0; n + 1];
        for (i, o) in out.iter_mut().enumerate().skip(1) {
            let row = &tab[i * (i - 1) / 2..i * (i - 1) / 2 + i];
            *o = row.iter().zip(incr).map(|(k, z)| k * z).sum();
        }
        Ok(out)
    }
}

/// Primitive of K_H(1, ·) on [0, r].
fn kernel_primitive(c: &KernelConsts, r: f64) -> f64 {
    let g = c.gamma();
    let first = beta_lower(1.0 - g, 1.0 + g, r) / (1.0 + g);
    if r == 0.0 {
        return c.b_h * first;
    }
    // J(r) = ∫_r^1 v^{-2g-1}(1-v)^g dv
    let a = -2.0 * g;
    let j = if a > 0.0 {
        beta_upper(a, g + 1.0, r)
    } else {
        -r.powf(a) * (1.0 - r).powf(g) / a + (g / a) * beta_upper(a + 1.0, g, r)
    };
    c.b_h * (first - g / (1.0 + g) * r.powf(1.0 + g) * j)
}

fn dense_table(c: &KernelConsts, grid: &Grid) -> Vec<f64> {
    let n = grid.steps();
    let mut tab = Vec::with_capacity(n * (n + 1) / 2);
    let g = c.gamma();
    if g == 0.0 {
        tab.resize(n * (n + 1) / 2, 1.0);
        return tab;
    }
    let scale = grid.dt().powf(g);
    let mut prim = Vec::with_capacity(n + 1);
    for i in 1..=n {
        let fi = i as f64;
        prim.clear();
        prim.extend((0..=i).map(|j| kernel_primitive(c, j as f64 / fi)));
        let f = scale * fi.powf(1.0 + g);
        tab.extend(prim.windows(2).map(|w| f * (w[1] - w[0])));
    }
    tab
}

/// Seed mixing for per-replication streams.
pub fn derive_seed(root: u64, index: u64) -> u64 {
    let mut z = root ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` i.i.d. N(0, dt) increments from the stream of `seed`. Longer draws
/// extend shorter ones.
pub fn bm_increments(seed: u64, n: usize, dt: f64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    let s = dt.sqrt();
    (0..n).map(|_| s * rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn sample_bm(grid: Grid, seed: u64) -> SamplePath {
    let incr = bm_increments(seed, grid.steps(), grid.dt());
    SampledFn::from_increments(grid, &incr).expect("finite Gaussian draws")
}

fn check_grid(path: &SamplePath, grid: &Grid) -> Result<()> {
    if !path.grid().same_as(grid) {
        return Err(Error::Structure(format!(
            "path grid ({}, {}) differs from kernel grid ({}, {})",
            path.grid().horizon(),
            path.grid().steps(),
            grid.horizon(),
            grid.steps()
        )));
    }
    Ok(())
}

/// W^H(t_i) = Σ_{j<i} K̄(t_i, j)ΔW_j.
pub fn fbm_from_bm(bm: &SamplePath, kernels: &KernelSet) -> Result<SamplePath> {
    check_grid(bm, &kernels.grid)?;
    let v = kernels.apply_kernel(&bm.increments())?;
    SampledFn::new(*bm.grid(), v)
}

/// M from the driving BM: ΔM_j = w_j ΔB_j.
pub fn martingale_from_bm(bm: &SamplePath, kernels: &KernelSet) -> Result<SamplePath> {
    check_grid(bm, &kernels.grid)?;
    let incr: Vec<f64> = bm.increments().iter().zip(&kernels.w).map(|(d, w)| d * w).collect();
    SampledFn::from_increments(*bm.grid(), &incr)
}

/// Driving BM, fBm and fundamental martingale on one probability space.
///
/// The martingale is w_j ΔB_j cell by cell and the fBm is the unique path
/// whose cell-averaged k_H transform is that martingale, so ∫k_H dW^H = M
/// holds exactly on the grid.
#[derive(Debug, Clone)]
pub struct NoisePair {
    pub bm: SamplePath,
    pub fbm: SamplePath,
    pub martingale: SamplePath,
    pub kernels: Arc<KernelSet>,
    pub seed: Option<u64>,
}

impl NoisePair {
    pub fn sample(kernels: &Arc<KernelSet>, seed: u64) -> Self {
        let g = kernels.grid;
        let incr = bm_increments(seed, g.steps(), g.dt());
        let mut p = NoisePair::from_bm_increments(kernels, g, &incr).expect("grid matches kernels");
        p.seed = Some(seed);
        p
    }

    /// Noise on `grid`, which must share the kernel step and be no longer.
    pub fn from_bm_increments(kernels: &Arc<KernelSet>, grid: Grid, incr: &[f64]) -> Result<Self> {
        let kg = kernels.grid;
        if grid.steps() > kg.steps() || (grid.dt() - kg.dt()).abs() > 1e-12 * kg.dt() {
            return Err(Error::Structure("noise grid is not a prefix of the kernel grid".into()));
        }
        let bm = SampledFn::from_increments(grid, incr)?;
        let dm: Vec<f64> = incr.iter().zip(&kernels.w).map(|(d, w)| d * w).collect();
        let martingale = SampledFn::from_increments(grid, &dm)?;
        let dwh = kernels.invert_k(martingale.values());
        let fbm = SampledFn::from_increments(grid, &dwh)?;
        Ok(NoisePair { bm, fbm, martingale, kernels: kernels.clone(), seed: None })
    }

    pub fn from_bm(kernels: &Arc<KernelSet>, bm: &SamplePath) -> Result<Self> {
        check_grid(bm, &kernels.grid)?;
        NoisePair::from_bm_increments(kernels, *bm.grid(), &bm.increments())
    }

    /// The same noise on the first `steps` cells; every route is causal.
    pub fn prefix(&self, steps: usize) -> Result<Self> {
        Ok(NoisePair {
            bm: self.bm.prefix(steps)?,
            fbm: self.fbm.prefix(steps)?,
            martingale: self.martingale.prefix(steps)?,
            kernels: self.kernels.clone(),
            seed: self.seed,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.bm.grid()
    }

    /// Rows `t,W,WH,M`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,W,WH,M")?;
        let t = self.grid().nodes();
        for i in 0..t.len() {
            writeln!(
                out,
                "{},{},{},{}",
                t[i],
                self.bm.values()[i],
                self.fbm.values()[i],
                self.martingale.values()[i]
            )?;
        }
        Ok(())
    }
}

/// The fundamental martingale by the BM route.
pub fn fundamental_martingale(noise: &NoisePair) -> Result<SamplePath> {
    martingale_from_bm(&noise.bm, &noise.kernels)
}

/// The fundamental martingale by the direct route Σ k̄(t_i, ·)ΔW^H.
pub fn fundamental_martingale_direct(fbm: &SamplePath, kernels: &KernelSet) -> Result<SamplePath> {
    if fbm.grid().steps() > kernels.grid.steps() {
        return Err(Error::Structure("path longer than kernel grid".into()));
    }
    let v = kernels.apply_k(&fbm.increments());
    SampledFn::new(*fbm.grid(), v)
}

/// Recovers the driving BM: M by the k_H route, then dB = dM / w.
pub fn bm_from_fbm(fbm: &SamplePath, kernels: &KernelSet) -> Result<SamplePath> {
    check_grid(fbm, &kernels.grid)?;
    let m = kernels.apply_k(&fbm.increments());
    let incr: Vec<f64> = m.windows(2).zip(&kernels.w).map(|(d, w)| (d[1] - d[0]) / w).collect();
    SampledFn::from_increments(*fbm.grid(), &incr)
}

/// (K_H⁻¹φ)(t) = t^{H−1/2} D^{H−1/2}(u^{1/2−H}φ′)(t) / (b_H Γ(H+1/2)),
/// where a negative order means the integral of the opposite order.
pub fn kh_inverse(phi: &SampledFn, kernels: &KernelSet) -> Result<SampledFn> {
    let grid = *phi.grid();
    if grid.steps() > kernels.grid.steps() || (grid.dt() - kernels.grid.dt()).abs() > 1e-12 * grid.dt() {
        return Err(Error::Structure("phi grid is not a prefix of the kernel grid".into()));
    }
    let n = grid.steps();
    let dt = grid.dt();
    let v = phi.values();
    let mut d: Vec<f64> = v.windows(2).map(|w| (w[1] - w[0]) / dt).collect();
    d.push(d[n - 1]);
    let deriv = SampledFn::new(grid, d)?;
    inverse_from_derivative(&deriv, kernels)
}

/// K_H⁻¹ applied to a function given by its derivative at the nodes.
pub fn inverse_from_derivative(deriv: &SampledFn, kernels: &KernelSet) -> Result<SampledFn> {
    let grid = *deriv.grid();
    let c = kernels.consts;
    let g = c.gamma();
    if g == 0.0 {
        return Ok(deriv.clone());
    }
    // the constant part d_0 goes through the power rule exactly:
    // t^γ D^γ(u^{−γ}) = Γ(1−γ)/Γ(1−2γ)·t^{−γ}; the remainder vanishes at 0
    let d = deriv.values();
    let d0 = d[0];
    let t = grid.nodes();
    let u: Vec<f64> = t.iter().zip(d).map(|(&ti, &x)| if ti > 0.0 { ti.powf(-g) * (x - d0) } else { 0.0 }).collect();
    let y = frac_operator_left(&SampledFn::new(grid, u)?, g)?;
    let k = 1.0 / (c.b_h * gamma(c.hurst + 0.5));
    let pw = d0 * gamma(1.0 - g) / gamma(1.0 - 2.0 * g);
    let mut out: Vec<f64> = t.iter().zip(y.values()).map(|(&ti, &yi)| k * (ti.powf(g) * yi + pw * ti.powf(-g))).collect();
    out[0] = if g < 0.0 { 0.0 } else { out[1] };
    SampledFn::new(grid, out)
}

/// Exact sampler from the covariance matrix of W^H at the positive nodes.
pub struct CholeskySampler {
    grid: Grid,
    factor: DMatrix<f64>,
}

impl CholeskySampler {
    pub fn new(h: f64, grid: Grid) -> Result<Self> {
        check_hurst(h)?;
        let n = grid.steps();
        if n > DENSE_LIMIT {
            return Err(Error::Parameter(format!("Cholesky sampler limited to {DENSE_LIMIT} steps")));
        }
        let t = grid.nodes();
        let cov = DMatrix::from_fn(n, n, |i, j| covariance(h, t[i + 1], t[j + 1]).expect("t ≥ 0"));
        let chol = cov.cholesky().ok_or_else(|| {
            Error::Numerical(format!("covariance not positive definite for H={h}, n={n}"))
        })?;
        Ok(CholeskySampler { grid, factor: chol.l() })
    }

    pub fn sample(&self, seed: u64) -> SamplePath {
        let n = self.grid.steps();
        let mut rng = rng_from_seed(seed);
        let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let mut v = vec![0.0; n + 1];
        for i in 0..n {
            let row = self.factor.row(i);
            v[i + 1] = (0..=i).map(|j| row[j] * z[j]).sum();
        }
        SampledFn::new(self.grid, v).expect("finite draws")
    }
}

pub fn fbm_cholesky(h: f64, grid: Grid, seed: u64) -> Result<SamplePath> {
    Ok(CholeskySampler::new(h, grid)?.sample(seed))
}
