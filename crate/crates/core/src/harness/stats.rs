//! Kolmogorov-Smirnov tests and summary moments.

use crate::special::norm_cdf;

/// Kolmogorov survival function Q(λ) = 2Σ(−1)^{k−1}e^{−2k²λ²}.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

fn p_value(d: f64, en: f64) -> f64 {
    let en = en.sqrt();
    kolmogorov_q((en + 0.12 + 0.11 / en) * d)
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s: Vec<f64> = v.iter().copied().filter(|x| !x.is_nan()).collect();
    s.sort_by(|a, b| a.total_cmp(b));
    s
}

/// One-sample test against a continuous CDF; returns (D, p).
pub fn ks_cdf(sample: &[f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    let s = sorted(sample);
    let n = s.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / nf).max((i + 1) as f64 / nf - f);
    }
    (d, p_value(d, nf))
}

/// One-sample test against N(0, 1).
pub fn ks_normal(sample: &[f64]) -> (f64, f64) {
    ks_cdf(sample, norm_cdf)
}

/// Two-sample statistic sup|F_a − F_b| and its asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let a = sorted(a);
    let b = sorted(b);
    let (na, nb) = (a.len(), b.len());
    if na == 0 || nb == 0 {
        return (f64::NAN, f64::NAN);
    }
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let x = a[i].min(b[j]);
        while i < na && a[i] <= x {
            i += 1;
        }
        while j < nb && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let en = (na * nb) as f64 / (na + nb) as f64;
    (d, p_value(d, en))
}

/// Mean, sample variance and standard error of the mean.
pub fn moments(v: &[f64]) -> (f64, f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (m, var, (var / n).sqrt())
}

pub fn median(v: &[f64]) -> f64 {
    let s = sorted(v);
    let n = s.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    fn normals(seed: u64, n: usize, shift: f64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| shift + rng.sample::<f64, _>(StandardNormal)).collect()
    }

    #[test]
    fn identical_samples() {
        let a = normals(1, 100, 0.0);
        assert_eq!(ks_two_sample(&a, &a).0, 0.0);
    }

    #[test]
    fn calibration() {
        let rejections = (0..200).filter(|&s| ks_normal(&normals(s, 200, 0.0)).1 < 0.01).count();
        assert!(rejections <= 6, "{rejections} rejections");
    }

    #[test]
    fn power() {
        let (_, p) = ks_normal(&normals(3, 1000, 1.0));
        assert!(p < 1e-6);
        let (_, p) = ks_two_sample(&normals(4, 1000, 0.0), &normals(5, 1000, 1.0));
        assert!(p < 1e-6);
    }

    #[test]
    fn q_limits() {
        assert_eq!(kolmogorov_q(0.0), 1.0);
        assert!((kolmogorov_q(1.358) - 0.05).abs() < 1e-3);
        assert!(kolmogorov_q(5.0) < 1e-20);
    }

    #[test]
    fn median_and_moments() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        let (m, v, _) = moments(&[1.0, 2.0, 3.0]);
        assert_eq!((m, v), (2.0, 1.0));
    }
}
