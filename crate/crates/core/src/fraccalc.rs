//! Riemann-Liouville fractional integrals and Marchaud derivatives on a
//! uniform grid, by product integration.

use crate::error::{Error, Result};
use crate::special::gamma;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

/// Uniform grid on [0, T] with `steps` cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    horizon: f64,
    steps: usize,
}

impl Grid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::Parameter(format!("horizon must be positive, got {horizon}")));
        }
        if steps < 2 {
            return Err(Error::Parameter(format!("need at least 2 steps, got {steps}")));
        }
        Ok(Grid { horizon, steps })
    }

    /// Grid with a given step size and number of cells.
    pub fn with_step(dt: f64, steps: usize) -> Result<Self> {
        Grid::new(dt * steps as f64, steps)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Number of nodes, n + 1.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.steps {
            self.horizon
        } else {
            i as f64 * self.dt()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.steps).map(|i| self.node(i)).collect()
    }

    /// Same step, first `steps` cells.
    pub fn prefix(&self, steps: usize) -> Result<Self> {
        Grid::with_step(self.dt(), steps)
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.steps == other.steps && (self.horizon - other.horizon).abs() <= 1e-12 * self.horizon
    }
}

/// A real function sampled at every node of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFn {
    grid: Grid,
    values: Vec<f64>,
}

/// Paths are sampled functions too.
pub type SamplePath = SampledFn;

impl SampledFn {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Structure(format!(
                "{} values for a grid with {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite value at node {i}")));
        }
        Ok(SampledFn { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        SampledFn::new(grid, grid.nodes().into_iter().map(f).collect())
    }

    pub fn zeros(grid: Grid) -> Self {
        SampledFn { grid, values: vec![0.0; grid.len()] }
    }

    /// Path with value 0 at t=0 and the given cell increments.
    pub fn from_increments(grid: Grid, incr: &[f64]) -> Result<Self> {
        if incr.len() != grid.steps() {
            return Err(Error::Structure(format!(
                "{} increments for a grid with {} cells",
                incr.len(),
                grid.steps()
            )));
        }
        let mut v = Vec::with_capacity(grid.len());
        let mut acc = 0.0;
        v.push(0.0);
        for d in incr {
            acc += d;
            v.push(acc);
        }
        SampledFn::new(grid, v)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Restriction to the first `steps` cells.
    pub fn prefix(&self, steps: usize) -> Result<Self> {
        if steps == 0 || steps > self.grid.steps() {
            return Err(Error::Parameter(format!("prefix of {steps} steps from {}", self.grid.steps())));
        }
        Ok(SampledFn { grid: self.grid.prefix(steps)?, values: self.values[..=steps].to_vec() })
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let t = self.grid.nodes();
        SampledFn::new(self.grid, t.iter().zip(&self.values).map(|(&t, &v)| f(t, v)).collect())
    }

    fn reversed(&self) -> Self {
        let mut v = self.values.clone();
        v.reverse();
        SampledFn { grid: self.grid, values: v }
    }

    fn check(&self) -> Result<()> {
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite value at node {i}")));
        }
        Ok(())
    }
}

const DIRECT_CONV_LIMIT: usize = 48;

/// y_i = Σ_{j≤i} kernel[i-j]·signal[j] for i < out_len.
pub fn causal_convolve(kernel: &[f64], signal: &[f64], out_len: usize) -> Vec<f64> {
    let nk = kernel.len().min(out_len);
    let ns = signal.len().min(out_len);
    if nk == 0 || ns == 0 {
        return vec![0.0; out_len];
    }
    if nk.min(ns) <= DIRECT_CONV_LIMIT {
        let mut y = vec![0.0; out_len];
        for (j, &s) in signal[..ns].iter().enumerate() {
            if s == 0.0 {
                continue;
            }
            let top = (out_len - j).min(nk);
            for m in 0..top {
                y[j + m] += kernel[m] * s;
            }
        }
        return y;
    }
    let size = (nk + ns - 1).min(out_len).max(1).next_power_of_two() * 2;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut a: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); size];
    let mut b = a.clone();
    for (i, &k) in kernel[..nk].iter().enumerate() {
        a[i].re = k;
    }
    for (i, &s) in signal[..ns].iter().enumerate() {
        b[i].re = s;
    }
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    inv.process(&mut a);
    let scale = 1.0 / size as f64;
    (0..out_len)
        .map(|i| if i < size { a[i].re * scale } else { 0.0 })
        .collect()
}

/// First `n` coefficients of the reciprocal power series of `b` (b[0] ≠ 0),
/// by Newton iteration.
pub fn series_inverse(b: &[f64], n: usize) -> Result<Vec<f64>> {
    if b.is_empty() || b[0] == 0.0 || !b[0].is_finite() {
        return Err(Error::Numerical("series inverse needs a nonzero leading term".into()));
    }
    let mut c = vec![1.0 / b[0]];
    while c.len() < n {
        let m = (2 * c.len()).min(n);
        let bc = causal_convolve(&b[..b.len().min(m)], &c, m);
        // c ← c·(2 − b·c)
        let mut corr: Vec<f64> = bc.iter().map(|v| -v).collect();
        corr[0] += 2.0;
        c = causal_convolve(&c, &corr, m);
    }
    c.truncate(n);
    Ok(c)
}

fn check_order(order: f64, lo: f64, hi: f64, what: &str) -> Result<()> {
    if !(order > lo && order < hi) {
        return Err(Error::Parameter(format!("{what} order {order} outside ({lo}, {hi})")));
    }
    Ok(())
}

/// Cumulative trapezoid rule, the order-one integral.
fn trapezoid_cumulative(f: &SampledFn) -> SampledFn {
    let h = f.grid.dt();
    let mut out = Vec::with_capacity(f.values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in f.values.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        out.push(acc);
    }
    SampledFn { grid: f.grid, values: out }
}

fn rl_integral(f: &SampledFn, alpha: f64) -> SampledFn {
    let n = f.grid.steps();
    let h = f.grid.dt();
    let p = alpha + 1.0;
    let mut c = vec![0.0; n + 1];
    c[0] = 1.0;
    for (m, cm) in c.iter_mut().enumerate().skip(1) {
        let m = m as f64;
        *cm = (m + 1.0).powf(p) - 2.0 * m.powf(p) + (m - 1.0).powf(p);
    }
    let mut g = f.values.clone();
    let f0 = g[0];
    g[0] = 0.0;
    let conv = causal_convolve(&c, &g, n + 1);
    let scale = h.powf(alpha) / gamma(alpha + 2.0);
    let mut out = vec![0.0; n + 1];
    for i in 1..=n {
        let fi = i as f64;
        let a0 = (fi - 1.0).powf(p) - (fi - alpha - 1.0) * fi.powf(alpha);
        out[i] = scale * (conv[i] + a0 * f0);
    }
    SampledFn { grid: f.grid, values: out }
}

/// Left Riemann-Liouville integral I_{0+}^order f at every node.
pub fn frac_integral_left(f: &SampledFn, order: f64) -> Result<SampledFn> {
    f.check()?;
    check_order(order, 0.0, 2.0, "integral")?;
    if order == 1.0 {
        Ok(trapezoid_cumulative(f))
    } else if order > 1.0 {
        Ok(trapezoid_cumulative(&rl_integral(f, order - 1.0)))
    } else {
        Ok(rl_integral(f, order))
    }
}

/// Right Riemann-Liouville integral I_{T-}^order f, without the complex phase.
pub fn frac_integral_right(f: &SampledFn, order: f64) -> Result<SampledFn> {
    f.check()?;
    check_order(order, 0.0, 2.0, "integral")?;
    Ok(frac_integral_left(&f.reversed(), order)?.reversed())
}

fn marchaud(f: &SampledFn, alpha: f64) -> SampledFn {
    let n = f.grid.steps();
    let h = f.grid.dt();
    let v = &f.values;
    // P_m = (m-1)^{-α} - m^{-α},  R_m = m P_m - α Q_m/(1-α),  m ≥ 2
    let mut pk = vec![0.0; n + 1];
    let mut rk = vec![0.0; n + 1];
    for m in 2..=n {
        let fm = m as f64;
        let pm = (fm - 1.0).powf(-alpha) - fm.powf(-alpha);
        let qm = fm.powf(1.0 - alpha) - (fm - 1.0).powf(1.0 - alpha);
        pk[m] = pm;
        rk[m] = fm * pm - alpha * qm / (1.0 - alpha);
    }
    let df: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
    let cp = causal_convolve(&pk, v, n + 1);
    let cr = causal_convolve(&rk, &df, n + 1);
    let scale = h.powf(-alpha) / gamma(1.0 - alpha);
    let mut out = vec![0.0; n + 1];
    for i in 1..=n {
        out[i] = scale * (v[i] + alpha * (v[i] - v[i - 1]) / (1.0 - alpha) - cp[i] - cr[i]);
    }
    out[0] = if v[0] == 0.0 { 0.0 } else { v[0] * h.powf(-alpha) / gamma(1.0 - alpha) };
    SampledFn { grid: f.grid, values: out }
}

/// Left Marchaud derivative D_{0+}^order f at every node.
///
/// At t=0 the value is 0 when f(0)=0; otherwise the first term f(0)/t^α is
/// reported at the first positive node.
pub fn frac_derivative_left(f: &SampledFn, order: f64) -> Result<SampledFn> {
    f.check()?;
    check_order(order, 0.0, 1.0, "derivative")?;
    Ok(marchaud(f, order))
}

/// Right Marchaud derivative D_{T-}^order f, without the complex phase.
pub fn frac_derivative_right(f: &SampledFn, order: f64) -> Result<SampledFn> {
    f.check()?;
    check_order(order, 0.0, 1.0, "derivative")?;
    Ok(marchaud(&f.reversed(), order).reversed())
}

/// Signed fractional operator: D^order for order > 0, I^{-order} for
/// order < 0, identity at 0.
pub fn frac_operator_left(f: &SampledFn, order: f64) -> Result<SampledFn> {
    if order == 0.0 {
        f.check()?;
        Ok(f.clone())
    } else if order > 0.0 {
        frac_derivative_left(f, order)
    } else {
        frac_integral_left(f, -order)
    }
}

/// Discrete Hölder exponent, from the slope of log window range against
/// log window length over dyadic lengths.
pub fn holder_exponent(f: &SampledFn) -> f64 {
    let n = f.grid.steps();
    let h = f.grid.dt();
    let mut mx = f.values.clone();
    let mut mn = f.values.clone();
    let mut pts = Vec::new();
    let mut k = 1;
    while 2 * k <= (n / 2).max(2) {
        // windows of length k become windows of length 2k
        let len = mx.len() - k;
        let nmx: Vec<f64> = (0..len).map(|i| mx[i].max(mx[i + k])).collect();
        let nmn: Vec<f64> = (0..len).map(|i| mn[i].min(mn[i + k])).collect();
        mx = nmx;
        mn = nmn;
        let osc = mx.iter().zip(&mn).map(|(a, b)| a - b).fold(0.0, f64::max);
        if osc > 0.0 {
            pts.push(((k as f64 * h).ln(), osc.ln()));
        }
        k *= 2;
    }
    if pts.len() < 2 {
        return 1.0;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxy / sxx).clamp(0.0, 1.0)
}

/// ∫_0^T f dg through the fractional integration-by-parts formula with
/// order α ∈ (1 − Hölder(g), Hölder(f)).
///
/// The two phases of the complex formula multiply to −1, which is applied
/// here so the result is the ordinary Stieltjes integral.
pub fn young_integral(f: &SampledFn, g: &SampledFn, order: f64) -> Result<f64> {
    if !f.grid.same_as(&g.grid) {
        return Err(Error::Structure("f and g live on different grids".into()));
    }
    f.check()?;
    g.check()?;
    let hf = holder_exponent(f);
    let hg = holder_exponent(g);
    if hf + hg <= 1.0 || !(order > 1.0 - hg && order < hf) || order >= 1.0 || order <= 0.0 {
        return Err(Error::Parameter(format!(
            "order {order} outside the window ({:.3}, {:.3})",
            1.0 - hg,
            hf
        )));
    }
    let gt = g.last();
    let g_shift = SampledFn { grid: g.grid, values: g.values.iter().map(|v| v - gt).collect() };
    let df = marchaud(f, order);
    let dg = marchaud(&g_shift.reversed(), 1.0 - order).reversed();
    let h = f.grid.dt();
    let n = f.grid.steps();
    let prod: Vec<f64> = df.values.iter().zip(&dg.values).map(|(a, b)| a * b).collect();
    let mut s = 0.0;
    let first = if f.values[0] != 0.0 {
        // df ~ c t^{-α} on the first cell: integrate the singular weight exactly
        let c = df.values[1] * h.powf(order);
        c * h.powf(1.0 - order)
            * (dg.values[0] / (1.0 - order) + (dg.values[1] - dg.values[0]) / (2.0 - order))
    } else {
        0.5 * h * (prod[0] + prod[1])
    };
    s += first;
    for i in 1..n {
        s += 0.5 * h * (prod[i] + prod[i + 1]);
    }
    Ok(-s)
}
