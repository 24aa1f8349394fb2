use fracosc_web::{nonlinearity_profile_native, solve_native, threshold_curve_native};

const LAMBDA1: f64 = 2.516470253126758744;

#[test]
fn profile_covers_every_bump() {
    let pr = nonlinearity_profile_native(2.0, 4, 17).unwrap();
    let (t, f, big_f) = (pr.t(), pr.f(), pr.big_f());
    assert_eq!(t.len(), f.len());
    assert_eq!(t.len(), big_f.len());
    assert!(t.windows(2).all(|w| w[1] > w[0]));
    assert!(f.iter().all(|v| *v >= 0.0));
    assert!(big_f.windows(2).all(|w| w[1] >= w[0]));
    // the last point is b_4, where F is the total mass 3 + 32 + 540 + 13824
    assert!((big_f.last().unwrap() / 14399.0 - 1.0).abs() < 1e-12);
}

#[test]
fn profile_rejects_bad_sizes() {
    assert!(nonlinearity_profile_native(2.0, 0, 17).is_err());
    assert!(nonlinearity_profile_native(2.0, 13, 17).is_err());
    assert!(nonlinearity_profile_native(2.0, 3, 1).is_err());
}

#[test]
fn threshold_curve_matches_the_closed_form() {
    let c = threshold_curve_native(2.0, &[0.6, 0.75, 0.9], 31).unwrap();
    assert_eq!(c.s(), vec![0.6, 0.75, 0.9]);
    assert!((c.lambda1()[1] / LAMBDA1 - 1.0).abs() < 1e-14);
    assert!((c.kappa()[1] - 5.0329405062535174879).abs() < 1e-14);
    assert!(c.k().iter().all(|k| *k > 0.0));
    assert!(threshold_curve_native(2.0, &[0.4], 31).is_err());
    assert!(threshold_curve_native(2.0, &[], 31).is_err());
}

#[test]
fn small_solve_returns_an_energy_envelope() {
    let sol = solve_native(0.75, 2.0, 2.0, 4, 31, 1).unwrap();
    assert!((sol.lambda() - 2.0 * LAMBDA1).abs() < 1e-12);
    assert!(sol.count() >= 2);
    assert!(sol.energies().windows(2).all(|w| w[1] < w[0]));
    assert!(sol.norms().windows(2).all(|w| w[1] > w[0]));
    assert_eq!(sol.x().len(), 31);
    assert_eq!(sol.field(0).len(), 31);
    assert!(sol.field(sol.count()).is_empty());
}

#[test]
fn solve_at_zero_lambda_is_trivial() {
    let sol = solve_native(0.75, 2.0, 0.0, 3, 15, 0).unwrap();
    assert_eq!(sol.count(), 1);
    assert_eq!(sol.norms(), vec![0.0]);
    assert!(solve_native(0.75, 2.0, -1.0, 3, 15, 0).is_err());
    assert!(solve_native(0.75, 2.0, 1.0, 3, 1000, 0).is_err());
}
