use twf_wasm::{error_trajectory, screening_report, threshold_values};

#[test]
fn threshold_curve_shapes() {
    let soft = threshold_values("soft", 1.0, 2.0, 5).unwrap();
    assert_eq!(soft, vec![-1.0, 0.0, 0.0, 0.0, 1.0]);
    let hard = threshold_values("hard", 1.0, 2.0, 5).unwrap();
    assert_eq!(hard, vec![-2.0, 0.0, 0.0, 0.0, 2.0]);
    assert!(threshold_values("median", 1.0, 2.0, 5).is_err());
    assert!(threshold_values("soft", -1.0, 2.0, 5).is_err());
}

#[test]
fn noiseless_trajectory_converges() {
    let errs = error_trajectory(100, 800, 5, 0.0, 1.0, 0.1, 300, "soft", 3).unwrap();
    assert_eq!(errs.len(), 301);
    assert!(errs[300] < errs[0]);
    assert!(errs[300] < 1e-3, "{}", errs[300]);
}

#[test]
fn screening_finds_strong_coordinates() {
    let r = screening_report(200, 2000, 5, 0.0, 0.1, 9).unwrap();
    assert_eq!(r.marginals.len(), 200);
    assert!(r.selected.iter().all(|&l| r.marginals[l] > r.cutoff));
    assert_eq!(r.support.len(), 5);
    assert!(r.selected.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn oversized_problems_are_refused() {
    assert!(error_trajectory(5000, 5000, 5, 0.0, 1.0, 0.01, 1, "soft", 1).is_err());
}
