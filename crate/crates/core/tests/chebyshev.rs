mod common;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use solext::chebyshev::{
    chebyshev_t, chebyshev_u, error_budget, fit, make_grid, select_degree, FitMethod, Provenance, SampleSet,
};
use solext::pipeline::NodeSpec;
use solext::rng::seeded;

fn dense(points: usize) -> impl Iterator<Item = f64> {
    (0..=points).map(move |i| -1.0 + 2.0 * i as f64 / points as f64)
}

#[test]
fn polynomials_below_degree_m_are_reproduced() {
    let mut rng = seeded(3);
    for m in [4, 9, 17] {
        let c: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = |x: f64| chebyshev_t(x, m).iter().zip(&c).map(|(t, a)| t * a).sum::<f64>();
        let t = common::interpolant(&p, m);
        for x in dense(200) {
            assert!((t.evaluate(&[x]) - p(x)).abs() < 1e-12, "M={m} x={x}");
        }
    }
    // 2-D: products of low-degree polynomials.
    let g = |x: &[f64]| (1.0 + x[0] - 0.5 * x[0].powi(3)) * (0.3 - x[1] * x[1]);
    let grid = make_grid(5, 2, None).unwrap();
    let t = fit(&SampleSet::from_fn(grid, Provenance::Exact, |_, x| g(x)), FitMethod::ExactSolve).unwrap();
    for x in dense(20) {
        for y in dense(20) {
            assert!((t.evaluate(&[x, y]) - g(&[x, y])).abs() < 1e-12);
        }
    }
}

#[test]
fn derivative_matches_finite_differences() {
    let f = common::sine_exp();
    let t = common::interpolant(&|x| f.cumulative(&[x]), 17);
    let h = 1e-6;
    for x in dense(100).map(|x| x * 0.999) {
        let fd = (t.evaluate(&[x + h]) - t.evaluate(&[x - h])) / (2.0 * h);
        let (psi2, psi) = t.differentiate_extract(&[x]);
        assert!((psi2 - fd).abs() < 1e-4, "x={x}: {psi2} vs {fd}");
        assert!((psi - psi2.abs().sqrt()).abs() < 1e-15);
    }
}

#[test]
fn derivative_of_normalized_polynomials_is_bounded() {
    for m in 2..=24usize {
        let s = (2.0 / m as f64).sqrt();
        for x in dense(400) {
            let u = chebyshev_u(x, m);
            for j in 1..m {
                let dt = s * j as f64 * u[j - 1];
                assert!(dt.abs() <= 2f64.sqrt() * (j as f64).powf(1.5) + 1e-12, "M={m} j={j} x={x}");
            }
            for (j, uj) in u.iter().enumerate() {
                assert!(uj.abs() <= j as f64 + 1.0 + 1e-12, "U_{j}({x})");
            }
        }
    }
}

#[test]
fn node_noise_propagates_within_the_bound() {
    let (m, eps, trials) = (9, 1e-3, 200);
    let f = common::sine_exp();
    let grid = make_grid(m, 1, None).unwrap();
    let clean = SampleSet::from_fn(grid.clone(), Provenance::Exact, |_, x| f.cumulative(x));
    let base = fit(&clean, FitMethod::ExactSolve).unwrap();
    let bound = 10.0 * error_budget(eps, m, 1, 1.0).unwrap().eps_psi2;
    let noise = Normal::new(0.0, eps).unwrap();
    let mut rng = seeded(17);
    let mut within = 0;
    for _ in 0..trials {
        let noisy = SampleSet::from_fn(grid.clone(), Provenance::NoisyOracle, |_, x| {
            f.cumulative(x) + noise.sample(&mut rng)
        });
        let t = fit(&noisy, FitMethod::ExactSolve).unwrap();
        let worst = dense(400)
            .map(|x| (t.differentiate_extract(&[x]).0 - base.differentiate_extract(&[x]).0).abs())
            .fold(0.0, f64::max);
        within += usize::from(worst <= bound);
    }
    assert!(within * 100 >= 95 * trials, "{within}/{trials}");
}

#[test]
fn aliasing_stays_within_three_times_truncation() {
    let f = common::sine_exp();
    let cumulative = |x: f64| f.cumulative(&[x]);
    let density = |x: f64| f.evaluate_1d(x).powi(2);
    for m in [9, 13, 17] {
        for (name, g) in [("Psi", &cumulative as &dyn Fn(f64) -> f64), ("psi2", &density)] {
            let (alias, trunc) = common::aliasing_and_truncation(g, m);
            assert!(alias <= 3.0 * trunc, "{name} M={m}: {alias:e} vs {trunc:e}");
        }
    }
}

#[test]
fn noise_free_error_falls_with_m() {
    let errs: Vec<f64> =
        [5, 9, 13, 17].iter().map(|&m| common::noise_free_error("paper-sine-exp", 1, NodeSpec::Fixed(m), 1e-2).1).collect();
    for w in errs.windows(2) {
        assert!(w[1] < w[0], "{errs:?}");
    }
}

#[test]
fn selected_degree_meets_the_target() {
    let family: [(&str, usize); 5] =
        [("paper-sine-exp", 1), ("constant", 1), ("gaussian", 1), ("gaussian(0.3)", 1), ("product-2d", 2)];
    for eps in [1e-2, 1e-3] {
        for (label, d) in family {
            let (m, err) = common::noise_free_error(label, d, NodeSpec::Auto, eps);
            assert!(err <= eps, "{label} ε={eps}: M={m} error {err:e}");
        }
    }
}

#[test]
fn degree_rule_grows_as_target_tightens() {
    let a = select_degree(1.0, 1e-2, 1, 2.0).unwrap();
    let b = select_degree(1.0, 1e-6, 1, 2.0).unwrap();
    let c = select_degree(1.0, 1e-6, 2, 2.0).unwrap();
    assert!(a < b && c < b);
    assert!(select_degree(1.0, 1e-2, 1, 1.0).is_err());
}
