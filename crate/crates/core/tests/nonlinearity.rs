use approx::assert_relative_eq;
use fracosc::constants::{kappa, unit_ball_volume};
use fracosc::nonlinearity::{
    adaptive_simpson, oscillation_diagnostics, positive_part, BumpNonlinearity, Oscillation, ProbeKind,
};
use proptest::prelude::*;

fn preset() -> BumpNonlinearity {
    BumpNonlinearity::factorial(2.0, 8).unwrap()
}

#[test]
fn telescoping_masses_for_several_p() {
    for &p in &[2.0, 2.5, 3.0] {
        let nl = BumpNonlinearity::factorial(p, 6).unwrap();
        let mut fact = 1.0f64;
        for k in 1..=6usize {
            let prev = fact;
            fact *= (k + 1) as f64;
            let b = nl.bump(k).unwrap();
            assert_relative_eq!(b.mass, fact.powf(p) - prev.powf(p), max_relative = 1e-13);
            assert_relative_eq!(nl.evaluate_big_f(b.hi()), fact.powf(p) - 1.0, max_relative = 1e-12);
        }
    }
}

#[test]
fn analytic_limits_and_threshold() {
    let nl = preset();
    let lim = nl.analytic.clone().unwrap();
    assert_eq!(lim.a_l, 0.0);
    assert_eq!(lim.b_l.finite(), Some(4.0));
    // κ ω_N 2^{N−p}/(p τ^{ps}) with τ = 1, N = 1
    let threshold = kappa(2.0, 1, 0.75).unwrap() * unit_ball_volume(1) * 0.5 / 2.0;
    // the oracle value is exact to 19 digits; the f64 coding lands within a few ulp
    assert_relative_eq!(threshold, 2.516470253126758744, max_relative = 1e-14);
}

#[test]
fn liminf_probes_shrink_limsup_probes_grow() {
    let d = oscillation_diagnostics(&preset(), 2.0, Oscillation::Infinity).unwrap();
    let sup: Vec<f64> = d.trend(ProbeKind::Limsup).into_iter().map(|x| x.1).collect();
    assert!(sup.windows(2).all(|w| w[1] > w[0]));
    let oracle = [1.13609, 2.14263, 2.55201, 2.77742, 2.93876, 3.06250, 3.16049, 3.24];
    for (a, b) in sup.iter().zip(oracle) {
        assert!((a - b).abs() < 1e-5, "{a} vs {b}");
    }
    let inf: Vec<(usize, f64)> = d.trend(ProbeKind::Liminf);
    let oracle_a = [0.191468, 0.155772, 0.110925, 0.0816271, 0.0624999, 0.0493827, 0.0399999999757];
    for ((k, r), o) in inf.iter().zip(oracle_a) {
        assert!((r - o).abs() < 1e-6, "k={k}: {r} vs {o}");
    }
}

#[test]
fn table_columns_consistent() {
    let nl = preset();
    let rows = nl.table(2.0);
    assert_eq!(rows.len(), 8);
    for r in &rows[..7] {
        let next = nl.bump(r.k + 1).unwrap();
        // F(a_{k+1}) is the mass of every bump through k
        let through: f64 = (1..=r.k).map(|j| nl.bump(j).unwrap().mass).sum();
        let expect = through / (next.lo() * next.lo());
        assert_relative_eq!(r.ratio_at_next_a.unwrap(), expect, max_relative = 1e-12);
    }
    assert!(rows[7].ratio_at_next_a.is_none());
}

#[test]
fn geometric_origin_self_similarity() {
    let nl = BumpNonlinearity::geometric_origin(2.0, 12, 4.0, 0.5, 4.0, 8.4375).unwrap();
    for &t in &[0.3, 0.1, 0.02, 0.37 / 16.0] {
        // F(t/4) = F(t)/16 while both lie above the truncation
        assert_relative_eq!(nl.evaluate_big_f(t / 4.0), nl.evaluate_big_f(t) / 16.0, max_relative = 1e-6);
    }
    let d = oscillation_diagnostics(&nl, 2.0, Oscillation::Origin).unwrap();
    assert!((d.b_l_estimate - 4.0).abs() < 1e-6);
    assert!(d.a_l_estimate < d.b_l_estimate);
    let lim = nl.analytic.clone().unwrap();
    assert_relative_eq!(lim.a_l, 0.5625, max_relative = 1e-14);
    assert_relative_eq!(lim.b_l.finite().unwrap(), 4.0, max_relative = 1e-14);
    // the measured liminf approaches the analytic one from below
    assert!(d.a_l_estimate <= lim.a_l);
    let other = BumpNonlinearity::geometric_origin(2.0, 12, 4.0, 0.5, 5.0, 1.0).unwrap();
    assert!(other.analytic.is_none());
}

#[test]
fn literal_profile_masses() {
    let opts = fracosc::nonlinearity::FactorialOptions { literal_profile: true, log_domain: false };
    let nl = BumpNonlinearity::factorial_with(2.0, 6, opts).unwrap();
    for b in nl.bumps() {
        let q = adaptive_simpson(&|t| nl.evaluate_f(t), b.lo(), b.hi(), 1e-11 * b.mass);
        assert_relative_eq!(q, b.mass, max_relative = 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn primitive_is_monotone(x in -5.0f64..60.0, y in -5.0f64..60.0) {
        let nl = preset();
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        prop_assert!(nl.evaluate_big_f(lo) <= nl.evaluate_big_f(hi));
        prop_assert!(nl.evaluate_f(x) >= 0.0);
    }

    #[test]
    fn f_is_continuous(k in 1usize..=6, frac in -1.2f64..1.2) {
        let nl = preset();
        let b = nl.bump(k).unwrap();
        let t = b.center + frac * b.half_width;
        let dt = 1e-9 * b.half_width;
        let jump = (nl.evaluate_f(t + dt) - nl.evaluate_f(t)).abs();
        // semicircle modulus of continuity: |Δf| ≤ peak · √(2 Δt/R)
        prop_assert!(jump <= b.peak() * (2.0 * dt / b.half_width).sqrt() * 1.01 + 1e-12 * b.peak());
    }

    #[test]
    fn positive_part_is_idempotent(t in -10.0f64..10.0) {
        let once = positive_part(f64::cos);
        let twice = positive_part(|x| once.eval(x));
        prop_assert_eq!(twice.eval(t), once.eval(t));
        prop_assert!(t > 0.0 || once.eval(t) == 0.0);
    }

    #[test]
    fn primitive_diff_agrees(x in 1.3f64..16.0, dx in -0.05f64..0.05) {
        use fracosc::nonlinearity::Reaction;
        let nl = preset();
        let y = x + dx;
        let direct = nl.evaluate_big_f(y) - nl.evaluate_big_f(x);
        prop_assert!((nl.primitive_diff(x, y) - direct).abs() <= 1e-12 * nl.evaluate_big_f(x.max(y)).max(1.0));
    }
}

mod internals {
    use approx::assert_relative_eq;
    use fracosc::nonlinearity::*;
    use fracosc::Error;
    use std::f64::consts::PI;

    #[test]
    fn first_bump_endpoints_and_mass() {
        let nl = BumpNonlinearity::factorial(2.0, 8).unwrap();
        let b1 = nl.bump(1).unwrap();
        assert_eq!(b1.lo(), 1.375);
        assert_eq!(b1.hi(), 1.625);
        assert_eq!(b1.mass, 3.0);
        for k in 1..=8usize {
            let b = nl.bump(k).unwrap();
            let kf: f64 = (1..=k).map(|j| j as f64).product();
            assert_relative_eq!(b.center, kf * (k as f64 + 2.0) / 2.0, max_relative = 1e-15);
            assert_relative_eq!(b.half_width, 1.0 / (4.0 * kf * (k as f64 + 1.0)), max_relative = 1e-14);
        }
    }

    #[test]
    fn intervals_disjoint_and_increasing() {
        let nl = BumpNonlinearity::factorial(2.0, 9).unwrap();
        let b = nl.bumps();
        for w in b.windows(2) {
            assert!(w[1].lo() > w[0].hi());
        }
    }

    #[test]
    fn f_values() {
        let nl = BumpNonlinearity::factorial(2.0, 8).unwrap();
        assert_eq!(nl.evaluate_f(0.0), 0.0);
        for k in 1..=8 {
            let b = nl.bump(k).unwrap();
            assert_eq!(nl.evaluate_f(b.lo()), 0.0);
            assert!(nl.evaluate_f(b.hi()) < 1e-6 * b.peak());
        }
        // semicircle peak 4m/(π·width)
        assert_relative_eq!(nl.evaluate_f(1.5), 15.278874536821952234, max_relative = 1e-14);
        assert_relative_eq!(nl.evaluate_f(1.5), 4.0 * 3.0 / (PI * 0.25), max_relative = 1e-14);
    }

    #[test]
    fn big_f_values() {
        let nl = BumpNonlinearity::factorial(2.0, 8).unwrap();
        assert_eq!(nl.evaluate_big_f(0.0), 0.0);
        assert_eq!(nl.evaluate_big_f(-3.0), 0.0);
        // mpmath quadrature of the bump-1 arc up to 1.5 + R/2
        assert_relative_eq!(nl.evaluate_big_f(1.5625), 2.4134966715663440371, max_relative = 1e-13);
        let mut fact = 1.0f64;
        for k in 1..=8usize {
            fact *= (k + 1) as f64;
            let b = nl.bump(k).unwrap();
            assert_relative_eq!(nl.evaluate_big_f(b.hi()), fact * fact - 1.0, max_relative = 1e-12);
            if let Some(nb) = nl.bump(k + 1) {
                let mid = 0.5 * (b.hi() + nb.lo());
                assert_eq!(nl.evaluate_big_f(mid), nl.evaluate_big_f(b.hi()));
            }
        }
    }

    #[test]
    fn masses_match_quadrature() {
        let nl = BumpNonlinearity::factorial(2.0, 8).unwrap();
        for b in nl.bumps() {
            let q = adaptive_simpson(&|t| nl.evaluate_f(t), b.lo(), b.hi(), 1e-10 * b.mass);
            assert_relative_eq!(q, b.mass, max_relative = 1e-6);
        }
    }

    #[test]
    fn primitive_diff_consistent() {
        let nl = BumpNonlinearity::factorial(2.0, 5).unwrap();
        for &(a, b) in &[(1.4, 1.45), (1.4, 4.0), (0.5, 1.0), (2.0, 3.0), (15.0, 14.995)] {
            assert_relative_eq!(
                nl.primitive_diff(a, b),
                nl.evaluate_big_f(b) - nl.evaluate_big_f(a),
                max_relative = 1e-12,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn derivative_matches_differences() {
        let nl = BumpNonlinearity::factorial(3.0, 3).unwrap();
        for &t in &[1.4, 1.5, 1.6, 3.99, 4.02] {
            let h = 1e-7;
            let fd = (nl.evaluate_f(t + h) - nl.evaluate_f(t - h)) / (2.0 * h);
            assert_relative_eq!(nl.derivative(t), fd, max_relative = 1e-5, epsilon = 1e-6);
        }
        assert_eq!(nl.derivative(2.0), 0.0);
    }

    #[test]
    fn literal_profile_keeps_masses_but_jumps() {
        let opts = FactorialOptions { literal_profile: true, log_domain: false };
        let nl = BumpNonlinearity::factorial_with(2.0, 4, opts).unwrap();
        for b in nl.bumps() {
            let q = adaptive_simpson(&|t| nl.evaluate_f(t), b.lo(), b.hi(), 1e-10 * b.mass);
            assert_relative_eq!(q, b.mass, max_relative = 1e-6);
            assert!(nl.evaluate_f(b.lo() + 1e-12 * b.center.max(1.0)) > 0.5 * b.peak());
        }
    }

    #[test]
    fn overflow_requires_log_domain() {
        let err = BumpNonlinearity::factorial(2.0, 40).unwrap_err();
        assert!(matches!(err, Error::Overflow(_)), "{err}");
        assert!(err.to_string().contains("log-domain"));
        let err = BumpNonlinearity::factorial(2.0, 200).unwrap_err();
        assert!(matches!(err, Error::Overflow(_)));
        let nl =
            BumpNonlinearity::factorial_with(2.0, 150, FactorialOptions { literal_profile: false, log_domain: true })
                .unwrap();
        let d = oscillation_diagnostics(&nl, 2.0, Oscillation::Infinity).unwrap();
        // F(b_k)/b_k² → 4 and F(a_{k+1})/a_{k+1}² → 0
        assert_relative_eq!(d.b_l_estimate, (2.0 * 151.0 / 152.0f64).powi(2), max_relative = 1e-9);
        assert!(d.a_l_estimate < 1e-3);
    }

    #[test]
    fn k_max_zero_rejected() {
        assert!(BumpNonlinearity::factorial(2.0, 0).is_err());
    }

    #[test]
    fn positive_part_definition() {
        let id = positive_part(|t| t);
        assert_eq!(id.eval(-1.0), 0.0);
        assert_eq!(id.eval(2.0), 2.0);
        assert!(id.continuity_warning().is_none());
        // truncation acts on the argument
        let sin = positive_part(f64::sin);
        assert_eq!(sin.eval(-0.5 * PI), 0.0);
        assert_eq!(sin.eval(1.5 * PI), (1.5 * PI).sin());
        let shifted = positive_part(|t| t + 1.0);
        assert!(shifted.continuity_warning().is_some());
        let nl = BumpNonlinearity::factorial(2.0, 3).unwrap();
        let fp = positive_part(|t| nl.evaluate_f(t));
        for i in 0..2000 {
            let t = -2.0 + i as f64 * 0.01;
            assert_eq!(fp.eval(t), nl.evaluate_f(t));
            let twice = positive_part(|t| fp.eval(t));
            assert_eq!(twice.eval(t), fp.eval(t));
        }
    }

    #[test]
    fn diagnostics_trends() {
        let nl = BumpNonlinearity::factorial(2.0, 8).unwrap();
        let d = oscillation_diagnostics(&nl, 2.0, Oscillation::Infinity).unwrap();
        let sup = d.trend(ProbeKind::Limsup);
        let (k8, r8) = sup[7];
        assert_eq!(k8, 8);
        assert_relative_eq!(r8, 3.2399999999532509763, max_relative = 1e-12);
        assert!((r8 - 3.24).abs() / 3.24 < 0.05);
        let inf = d.trend(ProbeKind::Liminf);
        // probes at a_3 ... a_8 decrease
        let tail: Vec<f64> = inf.iter().filter(|x| x.0 >= 3).map(|x| x.1).collect();
        assert_eq!(tail.len(), 6);
        assert!(tail.windows(2).all(|w| w[1] < w[0]));
        assert_relative_eq!(tail[5], 0.039999999975668636796, max_relative = 1e-10);
        assert!(d.a_l_estimate <= d.b_l_estimate);
    }

    #[test]
    fn diagnostics_need_three_bumps() {
        let nl = BumpNonlinearity::factorial(2.0, 2).unwrap();
        assert!(oscillation_diagnostics(&nl, 2.0, Oscillation::Infinity).is_err());
        let z = oscillation_diagnostics(&BumpNonlinearity::zero(), 2.0, Oscillation::Infinity).unwrap();
        assert_eq!((z.a_l_estimate, z.b_l_estimate), (0.0, 0.0));
    }

    #[test]
    fn origin_family() {
        let nl = BumpNonlinearity::geometric_origin(2.0, 8, 4.0, 0.5, 8.0, 1.0).unwrap();
        assert_eq!(nl.toward, Oscillation::Origin);
        for b in nl.bumps() {
            assert_eq!(nl.evaluate_f(b.lo()), 0.0);
            let q = adaptive_simpson(&|t| nl.evaluate_f(t), b.lo(), b.hi(), 1e-10 * b.mass);
            assert_relative_eq!(q, b.mass, max_relative = 1e-6);
        }
        let d = oscillation_diagnostics(&nl, 2.0, Oscillation::Origin).unwrap();
        assert!(d.a_l_estimate.is_finite() && d.b_l_estimate.is_finite());
        assert!(d.a_l_estimate <= d.b_l_estimate);
        assert!(oscillation_diagnostics(&nl, 2.0, Oscillation::Infinity).is_err());
        assert!(BumpNonlinearity::build_origin_oscillator(&[], &[]).is_err());
        let overlap = BumpNonlinearity::build_origin_oscillator(&[(0.5, 1.0), (0.4, 0.6)], &[1.0, 1.0]);
        assert!(overlap.is_err());
    }
}
