use geosbm_demo::{branching, distance_curve, sample_and_embed, MAX_DEMO_N};

#[test]
fn scatter_separates_a_detectable_graph() {
    let s = sample_and_embed(800, 2, 20.0, 2.0, 4).unwrap();
    assert_eq!(s.x.len(), s.giant);
    assert_eq!(s.truth.len(), s.giant);
    assert!(s.misclassification < 0.1, "{}", s.misclassification);
    assert!(sample_and_embed(MAX_DEMO_N + 1, 2, 20.0, 2.0, 4).is_err());
}

#[test]
fn distance_curve_grows_with_n() {
    let c = distance_curve(14.0, 2.0, 2, 100.0, 1e6, 20).unwrap();
    assert_eq!((c.lambda1, c.lambda2), (8.0, 6.0));
    let within: Vec<f64> = c.tau_within.iter().map(|t| t.unwrap()).collect();
    assert!(within.windows(2).all(|w| w[1] > w[0]));
    assert!(c.tau_within.iter().zip(&c.tau_cross).all(|(w, x)| w.unwrap() < x.unwrap()));
}

#[test]
fn trajectories_start_from_one_particle() {
    let t = branching(3.0, 1.0, 2, 6, 5, 1).unwrap();
    assert_eq!(t.runs.len(), 5);
    assert!(t.runs.iter().all(|r| r[0] == vec![1, 0]));
    assert_eq!(t.expected[1], vec![1.5, 0.5]);
}
