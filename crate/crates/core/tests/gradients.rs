use abstain::methods::{gradient_suite, GRADIENT_CASES};

#[test]
fn every_loss_matches_finite_differences() {
    let cases = gradient_suite(20, 7).unwrap();
    assert_eq!(cases.len(), GRADIENT_CASES.len());
    for case in cases {
        println!("{:<10} worst relative error {:.3e}", case.loss, case.worst);
        assert!(case.worst < 1e-4, "{} gradient off by {:e}", case.loss, case.worst);
    }
}
