use teggcn::verify::{model_gradient_error, primitive_gradient_errors, GRAD_TOLERANCE};

#[test]
fn every_primitive_matches_finite_differences() {
    for seed in 0..20 {
        let errs = primitive_gradient_errors(seed).unwrap();
        assert!(errs.len() >= 20);
        for (name, err) in errs {
            assert!(err < GRAD_TOLERANCE, "{name} seed {seed}: {err:e}");
        }
    }
}

#[test]
fn full_model_matches_finite_differences() {
    for seed in 0..20 {
        let err = model_gradient_error(seed).unwrap();
        assert!(err < GRAD_TOLERANCE, "seed {seed}: {err:e}");
    }
}
