use proptest::prelude::*;
use rfou::fgn::{derive_seed, make_kernels, NoisePair};
use rfou::fraccalc::{Grid, SampledFn};
use rfou::reflect::*;
use rfou::special::gamma;
use std::sync::Arc;

mod common;
use common::mean_se;

fn kernels(h: f64, horizon: f64, n: usize) -> Arc<rfou::fgn::KernelSet> {
    Arc::new(make_kernels(h, Grid::new(horizon, n).unwrap()).unwrap())
}

#[test]
fn reflected_bm_mean() {
    // E|W_T| = √(2T/π); the projected Euler scheme undershoots by O(√Δ)
    let n = 4096;
    let k = kernels(0.5, 1.0, n);
    let p = ModelParams::new(0.0, 1.0, 0.0, 0.0, 0.5).unwrap();
    let ends: Vec<f64> =
        (0..2000).map(|i| simulate_rfou(&p, &NoisePair::sample(&k, derive_seed(11, i))).unwrap().x.last()).collect();
    let (m, se) = mean_se(&ends);
    let want = (2.0 / std::f64::consts::PI).sqrt();
    let bias_room = 0.6 / (n as f64).sqrt();
    assert!((m - want).abs() < 3.0 * se + bias_room, "{m} vs {want} (SE {se})");
}

#[test]
fn local_time_grows_only_at_the_barrier() {
    for i in 0..100u64 {
        let h = [0.3, 0.5, 0.8][i as usize % 3];
        let b = 0.5 * (i % 2) as f64;
        let k = kernels(h, 2.0, 256);
        let p = ModelParams::new(1.5 - 0.03 * i as f64, 0.7, b, b + 0.2, h).unwrap();
        let path = simulate_rfou(&p, &NoisePair::sample(&k, derive_seed(12, i))).unwrap();
        let (x, l) = (path.x.values(), path.l.values());
        assert!(x.iter().all(|&v| v >= b));
        assert!(l.windows(2).all(|w| w[1] >= w[0]));
        let off_barrier: f64 = (0..256).filter(|&j| x[j + 1] > b).map(|j| l[j + 1] - l[j]).sum();
        assert_eq!(off_barrier, 0.0);
        assert!(path.balance_residual() < 1e-12);
    }
}

#[test]
fn reflected_dominates_free() {
    for i in 0..50u64 {
        let h = if i % 2 == 0 { 0.3 } else { 0.7 };
        let k = kernels(h, 1.0, 256);
        let p = ModelParams::new(if i % 3 == 0 { -0.5 } else { 1.0 }, 1.0, 0.0, 0.5, h).unwrap();
        let noise = NoisePair::sample(&k, derive_seed(13, i));
        let x = simulate_rfou(&p, &noise).unwrap();
        let y = simulate_fou(&p, &noise).unwrap();
        assert!(x.x.values().iter().zip(y.values()).all(|(a, b)| a >= b));
    }
}

#[test]
fn reflected_can_sit_below_abs_of_free() {
    // α = 0, x0 = b = 0 and a falling driver: X stays at 0 while |Y| grows
    let g = Grid::new(1.0, 16).unwrap();
    let k = Arc::new(make_kernels(0.5, g).unwrap());
    let bm = SampledFn::from_fn(g, |t| -t).unwrap();
    let noise = NoisePair::from_bm(&k, &bm).unwrap();
    let p = ModelParams::new(0.0, 1.0, 0.0, 0.0, 0.5).unwrap();
    let x = simulate_rfou(&p, &noise).unwrap();
    let y = simulate_fou(&p, &noise).unwrap();
    assert_eq!(x.x.last(), 0.0);
    assert!((y.last() + 1.0).abs() < 1e-12);
}

#[test]
fn same_seed_same_path() {
    let k = kernels(0.7, 1.0, 128);
    let p = ModelParams::new(1.0, 1.0, 0.0, 1.0, 0.7).unwrap();
    let a = simulate_rfou(&p, &NoisePair::sample(&k, 5)).unwrap();
    let b = simulate_rfou(&p, &NoisePair::sample(&k, 5)).unwrap();
    let c = simulate_rfou(&p, &NoisePair::sample(&k, 6)).unwrap();
    assert_eq!(a.x.values(), b.x.values());
    assert_ne!(a.x.values(), c.x.values());
}

#[test]
fn shorter_grid_gives_the_prefix() {
    let k = kernels(0.35, 4.0, 400);
    let p = ModelParams::new(0.5, 1.2, 0.0, 0.1, 0.35).unwrap();
    let full_noise = NoisePair::sample(&k, 21);
    let full = simulate_rfou(&p, &full_noise).unwrap();
    let short_grid = Grid::with_step(0.01, 150).unwrap();
    let short_noise = NoisePair::from_bm_increments(&k, short_grid, &full_noise.bm.increments()[..150]).unwrap();
    let short = simulate_rfou(&p, &short_noise).unwrap();
    let head = full.prefix(150).unwrap();
    for (a, b) in short.x.values().iter().zip(head.x.values()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn free_process_settles_to_stationary_variance() {
    // time average of Y² against σ²α^{−2H}HΓ(2H)
    let h = 0.7;
    let k = kernels(h, 200.0, 4000);
    let p = ModelParams::new(1.0, 1.0, 0.0, 0.0, h).unwrap();
    let avgs: Vec<f64> = (0..20)
        .map(|i| {
            let y = simulate_fou(&p, &NoisePair::sample(&k, derive_seed(14, i))).unwrap();
            y.values()[1000..].iter().map(|v| v * v).sum::<f64>() / 3001.0
        })
        .collect();
    let (m, se) = mean_se(&avgs);
    let want = h * gamma(2.0 * h);
    assert!((m - want).abs() < 3.0 * se + 0.03, "{m} vs {want} (SE {se})");
}

#[test]
fn pathwise_bounds_hold() {
    for i in 0..40u64 {
        let h = if i % 2 == 0 { 0.3 } else { 0.8 };
        let k = kernels(h, 1.0, 256);
        let p = ModelParams::new(if i % 4 < 2 { 2.0 } else { -1.0 }, 1.0, 0.0, 0.5, h).unwrap();
        let noise = NoisePair::sample(&k, derive_seed(15, i));
        let path = simulate_rfou(&p, &noise).unwrap();
        let xs = sup_norm(&path.x);
        assert!(xs <= gronwall_bound(&p, sup_norm(&noise.fbm), 1.0));
        let beta = h - 0.05;
        let bound = holder_bound(&p, xs, holder_norm(&noise.fbm, beta).unwrap(), 1.0, beta);
        assert!(holder_norm(&path.x, beta).unwrap() <= bound);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn holder_norm_is_homogeneous(c in -5.0f64..5.0, beta in 0.05f64..0.95, w in 0.5f64..20.0) {
        let g = Grid::new(1.0, 64).unwrap();
        let f = SampledFn::from_fn(g, |t| (w * t).sin() + t).unwrap();
        let cf = f.map(|_, v| c * v).unwrap();
        let a = holder_norm(&cf, beta).unwrap();
        let b = c.abs() * holder_norm(&f, beta).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b));
    }

    #[test]
    fn skorokhod_is_minimal(vals in prop::collection::vec(-2.0f64..2.0, 9)) {
        let g = Grid::new(1.0, 8).unwrap();
        let mut v = vals.clone();
        v[0] = v[0].abs();
        let psi = SampledFn::new(g, v.clone()).unwrap();
        let (x, l) = skorokhod_map(&psi, 0.0).unwrap();
        for i in 0..9 {
            prop_assert!(x.values()[i] >= 0.0);
            prop_assert!((x.values()[i] - v[i] - l.values()[i]).abs() < 1e-12);
            let need = v[..=i].iter().map(|p| -p).fold(0.0, f64::max);
            prop_assert_eq!(l.values()[i], need);
        }
    }
}
