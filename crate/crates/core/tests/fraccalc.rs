use proptest::prelude::*;
use rfou::fraccalc::*;
use rfou::quad::tanh_sinh;
use rfou::special::gamma;

fn grid(n: usize) -> Grid {
    Grid::new(1.0, n).unwrap()
}

fn max_err(a: &SampledFn, b: &SampledFn) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn left_integral_examples() {
    let g = grid(1024);
    let one = SampledFn::from_fn(g, |_| 1.0).unwrap();
    let t = SampledFn::from_fn(g, |s| s).unwrap();
    assert!((frac_integral_left(&one, 0.5).unwrap().last() - 1.0 / gamma(1.5)).abs() < 1e-3);
    assert!((frac_integral_left(&t, 0.5).unwrap().last() - gamma(2.0) / gamma(2.5)).abs() < 1e-3);
    let run = frac_integral_left(&one, 1.0).unwrap();
    assert!(run.values().iter().zip(g.nodes()).all(|(v, s)| (v - s).abs() < 1e-12));
}

#[test]
fn left_integral_matches_defining_integral() {
    // independent oracle: the singular integral by tanh-sinh quadrature
    let g = grid(2048);
    let f = |s: f64| (2.0 * s).cos() + s;
    let sf = SampledFn::from_fn(g, f).unwrap();
    for &a in &[0.25, 0.6] {
        let got = frac_integral_left(&sf, a).unwrap();
        for &i in &[512, 1500, 2048] {
            let t = g.node(i);
            let want = tanh_sinh(|s| (t - s).powf(a - 1.0) * f(s), 0.0, t, 1e-12) / gamma(a);
            assert!((got.values()[i] - want).abs() < 1e-4 * want.abs().max(1.0), "a={a} i={i}");
        }
    }
}

#[test]
fn right_integral_examples() {
    let g = grid(1024);
    let one = SampledFn::from_fn(g, |_| 1.0).unwrap();
    let r = SampledFn::from_fn(g, |s| 1.0 - s).unwrap();
    assert!((frac_integral_right(&one, 0.5).unwrap().values()[0] - 1.0 / gamma(1.5)).abs() < 1e-3);
    assert!((frac_integral_right(&r, 0.5).unwrap().values()[0] - gamma(2.0) / gamma(2.5)).abs() < 1e-3);
    let z = frac_integral_right(&SampledFn::zeros(g), 0.5).unwrap();
    assert!(z.values().iter().all(|&v| v == 0.0));
}

#[test]
fn derivative_examples() {
    let g = grid(1024);
    let c = SampledFn::from_fn(g, |_| 2.0).unwrap();
    let d = frac_derivative_left(&c, 0.4).unwrap();
    for i in [1, 10, 1024] {
        let want = 2.0 * g.node(i).powf(-0.4) / gamma(0.6);
        assert!((d.values()[i] / want - 1.0).abs() < 1e-10);
    }
    let t = SampledFn::from_fn(g, |s| s).unwrap();
    assert!((frac_derivative_left(&t, 0.5).unwrap().last() - 2.0 / std::f64::consts::PI.sqrt()).abs() < 1e-3);

    let one = SampledFn::from_fn(g, |_| 1.0).unwrap();
    let dr = frac_derivative_right(&one, 0.3).unwrap();
    for i in [0, 500, 1023] {
        let want = (1.0 - g.node(i)).powf(-0.3) / gamma(0.7);
        assert!((dr.values()[i] / want - 1.0).abs() < 1e-10);
    }
    let zr = frac_derivative_right(&SampledFn::zeros(g), 0.3).unwrap();
    assert!(zr.values().iter().all(|&v| v == 0.0));
}

#[test]
fn semigroup_refines() {
    let f = |s: f64| (3.0 * s).sin();
    let err = |n: usize| {
        let sf = SampledFn::from_fn(grid(n), f).unwrap();
        let two = frac_integral_left(&frac_integral_left(&sf, 0.3).unwrap(), 0.4).unwrap();
        // I^{0.7} sin(3t) = Σ_k (-1)^k 3^{2k+1} t^{2k+1.7}/Γ(2k+2.7)
        let exact = SampledFn::from_fn(grid(n), |t| {
            (0..30).map(|k| (-1f64).powi(k) * 3f64.powi(2 * k + 1) * t.powf(2.0 * k as f64 + 1.7) / gamma(2.0 * k as f64 + 2.7)).sum()
        })
        .unwrap();
        max_err(&two, &exact)
    };
    let (e1, e2) = (err(256), err(512));
    assert!(e1 / e2 >= 1.5, "{e1} {e2}");
}

#[test]
fn order_above_one_composes() {
    let g = grid(512);
    let t = SampledFn::from_fn(g, |s| s).unwrap();
    let got = frac_integral_left(&t, 1.5).unwrap();
    let want = 1.0 / gamma(3.5);
    assert!((got.last() - want).abs() < 1e-4);
}

#[test]
fn inversions_refine() {
    let f = |s: f64| (2.0 * s).sin() + s * s;
    let errs = |n: usize| {
        let sf = SampledFn::from_fn(grid(n), f).unwrap();
        let di = frac_derivative_left(&frac_integral_left(&sf, 0.4).unwrap(), 0.4).unwrap();
        let id = frac_integral_left(&frac_derivative_left(&sf, 0.4).unwrap(), 0.4).unwrap();
        (max_err(&di, &sf), max_err(&id, &sf))
    };
    let (a1, b1) = errs(256);
    let (a2, b2) = errs(512);
    assert!(a1 / a2 >= 1.5 && b1 / b2 >= 1.5, "{a1} {a2} {b1} {b2}");
}

#[test]
fn integration_by_parts_refines() {
    let bump = |c: f64| move |s: f64| if (s - c).abs() < 0.3 { (1.0 - ((s - c) / 0.3).powi(2)).powi(3) } else { 0.0 };
    let gap = |n: usize| {
        let g = grid(n);
        let f = SampledFn::from_fn(g, bump(0.4)).unwrap();
        let h = SampledFn::from_fn(g, bump(0.55)).unwrap();
        let lhs: f64 = frac_derivative_left(&f, 0.6).unwrap().values().iter().zip(h.values()).map(|(a, b)| a * b).sum();
        let rhs: f64 = f.values().iter().zip(frac_derivative_right(&h, 0.6).unwrap().values()).map(|(a, b)| a * b).sum();
        ((lhs - rhs) / rhs).abs()
    };
    let (e1, e2) = (gap(256), gap(1024));
    assert!(e2 < e1 && e2 < 1e-2, "{e1} {e2}");
}

#[test]
fn young_examples() {
    let g = grid(2048);
    let t = SampledFn::from_fn(g, |s| s).unwrap();
    assert!((young_integral(&t, &t, 0.5).unwrap() - 0.5).abs() < 1e-3);
    let one = SampledFn::from_fn(g, |_| 1.0).unwrap();
    let e = SampledFn::from_fn(g, |s| s.exp()).unwrap();
    let v = young_integral(&one, &e, 0.5).unwrap();
    assert!((v - (1f64.exp() - 1.0)).abs() < 1e-3);
}

#[test]
fn young_matches_stieltjes_sum_with_refinement() {
    let gap = |n: usize| {
        let g = grid(n);
        let f = SampledFn::from_fn(g, |s| (4.0 * s).sin()).unwrap();
        let h = SampledFn::from_fn(g, |s| (2.0 * s + 0.5).sin()).unwrap();
        let direct: f64 =
            (0..n).map(|j| 0.5 * (f.values()[j] + f.values()[j + 1]) * (h.values()[j + 1] - h.values()[j])).sum();
        ((young_integral(&f, &h, 0.5).unwrap() - direct) / direct).abs()
    };
    let (e1, e2) = (gap(512), gap(2048));
    assert!(e2 < e1 && e2 < 1e-2, "{e1} {e2}");
}

#[test]
fn bad_orders_are_parameter_errors() {
    let f = SampledFn::from_fn(grid(64), |s| s).unwrap();
    assert!(matches!(frac_derivative_left(&f, 1.2), Err(rfou::Error::Parameter(_))));
    assert!(matches!(frac_derivative_right(&f, 0.0), Err(rfou::Error::Parameter(_))));
    assert!(matches!(frac_integral_left(&f, -0.5), Err(rfou::Error::Parameter(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn operators_are_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, order in 0.05f64..0.95, w in 0.5f64..6.0) {
        let g = grid(256);
        let f = SampledFn::from_fn(g, |s| (w * s).sin()).unwrap();
        let h = SampledFn::from_fn(g, |s| s * s - 0.3 * s).unwrap();
        let mix = SampledFn::from_fn(g, |s| a * (w * s).sin() + b * (s * s - 0.3 * s)).unwrap();
        type Op = fn(&SampledFn, f64) -> rfou::Result<SampledFn>;
        let ops: [Op; 4] = [frac_integral_left, frac_integral_right, frac_derivative_left, frac_derivative_right];
        for op in ops {
            let lhs = op(&mix, order).unwrap();
            let (of, oh) = (op(&f, order).unwrap(), op(&h, order).unwrap());
            for i in 0..=256 {
                let rhs = a * of.values()[i] + b * oh.values()[i];
                prop_assert!((lhs.values()[i] - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
            }
        }
    }
}
