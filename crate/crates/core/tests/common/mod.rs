#![allow(dead_code)]

use rfou::fgn::KernelConsts;
use rfou::quad::tanh_sinh;

/// K_H(t, s) from its defining integral.
pub fn kernel_by_quadrature(h: f64, t: f64, s: f64) -> f64 {
    let c = KernelConsts::new(h).unwrap();
    let g = h - 0.5;
    if g == 0.0 {
        return 1.0;
    }
    if h > 0.5 {
        // v = (u − s)^g removes the endpoint singularity
        let v = tanh_sinh(|v| (s + v.powf(1.0 / g)).powf(g), 0.0, (t - s).powf(g), 1e-12) / g;
        c.c_h * s.powf(-g) * v
    } else {
        let e = 1.0 + g;
        let v = tanh_sinh(|v| (s + v.powf(1.0 / e)).powf(g - 1.0), 0.0, (t - s).powf(e), 1e-12) / e;
        c.b_h * ((t / s).powf(g) * (t - s).powf(g) - g * s.powf(-g) * v)
    }
}

/// Cell average of K_H(t, ·) over [lo, hi].
pub fn kernel_cell_by_quadrature(h: f64, t: f64, lo: f64, hi: f64) -> f64 {
    tanh_sinh(|s| kernel_by_quadrature(h, t, s), lo, hi, 1e-10) / (hi - lo)
}

pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Mean and standard error of the sample variance (zero-mean data).
pub fn second_moment_se(v: &[f64]) -> (f64, f64) {
    let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
    mean_se(&sq)
}
