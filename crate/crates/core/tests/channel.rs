use num_complex::Complex64;
use qcc_core::channel::{fidelity, Decoder};
use qcc_core::{
    additive_basis, run_trials, weyl_basis, BuiltinCode, ChannelConfig, CodeSpec, Error,
    ErrorPattern, PatternFamily, PhaseScalar, RegisterState, SingleRegisterError,
};

fn amp(x: f64) -> PhaseScalar {
    PhaseScalar::Float(Complex64::new(x, 0.0))
}

fn logical(levels: u32, width: usize, terms: &[(u128, f64)]) -> RegisterState {
    let terms = terms.iter().map(|&(k, a)| (k, amp(a))).collect();
    RegisterState::from_indexed(levels, width, terms)
        .unwrap()
        .normalized()
        .unwrap()
}

#[test]
fn shor_recovers_every_single_error() {
    let code = CodeSpec::builtin(BuiltinCode::Shor9, 2, 1).unwrap();
    let family = PatternFamily::single_register(9, weyl_basis(2)).unwrap();
    let decoder = Decoder::new(&code, &family).unwrap();
    let input = logical(2, 1, &[(0, 0.6), (1, 0.8)]);
    let encoded = code.encode(&input).unwrap();
    let mut degenerate_choices = 0;
    for e in family.iter() {
        let d = decoder.decode(&e.apply(&encoded).unwrap()).unwrap();
        assert!(
            (fidelity(&input, &d.logical).unwrap() - 1.0).abs() < 1e-9,
            "{e}"
        );
        degenerate_choices += (d.chosen != e) as usize;
    }
    // Z on any register of a triple acts identically on the code space
    assert!(degenerate_choices > 0);
}

#[test]
fn rate14_interior_single_errors() {
    let code = CodeSpec::builtin(BuiltinCode::Rate14Conv, 2, 3).unwrap();
    let family = PatternFamily::new(code.width(), 8, 1, weyl_basis(2))
        .unwrap()
        .restricted_to(5, 20)
        .unwrap();
    let decoder = Decoder::new(&code, &family).unwrap();
    let input = logical(2, 3, &[(0b011, 1.0), (0b100, 1.0)]);
    let encoded = code.encode(&input).unwrap();
    for pos in 5..=20 {
        for op in weyl_basis(2) {
            let e = ErrorPattern::identity().with(pos, op);
            let d = decoder.decode(&e.apply(&encoded).unwrap()).unwrap();
            assert!(
                (fidelity(&input, &d.logical).unwrap() - 1.0).abs() < 1e-9,
                "{e}"
            );
        }
    }
}

#[test]
fn rate14_boundary_logical_confuses_single_errors() {
    // Z@4 Z@12 acts as a logical flip of the first symbol
    let code = CodeSpec::builtin(BuiltinCode::Rate14Conv, 2, 3).unwrap();
    let family = PatternFamily::single_register(code.width(), weyl_basis(2)).unwrap();
    let decoder = Decoder::new(&code, &family).unwrap();
    let input = logical(2, 3, &[(0b000, 1.0), (0b001, 1.0)]);
    let encoded = code.encode(&input).unwrap();
    let e = ErrorPattern::identity().with(12, SingleRegisterError::weyl(0, 1));
    let d = decoder.decode(&e.apply(&encoded).unwrap()).unwrap();
    assert_eq!(
        d.chosen,
        ErrorPattern::identity().with(4, SingleRegisterError::weyl(0, 1))
    );
    assert!(fidelity(&input, &d.logical).unwrap() < 1e-9);
}

#[test]
fn pattern_outside_family_is_uncorrectable() {
    let code = CodeSpec::builtin(BuiltinCode::Majority3, 2, 1).unwrap();
    let family = PatternFamily::single_register(3, additive_basis(2))
        .unwrap()
        .restricted_to(1, 1)
        .unwrap();
    let encoded = code.encode(&logical(2, 1, &[(0, 1.0)])).unwrap();
    let e = ErrorPattern::identity().with(2, SingleRegisterError::weyl(1, 0));
    let err = Decoder::new(&code, &family)
        .unwrap()
        .decode(&e.apply(&encoded).unwrap())
        .unwrap_err();
    assert_eq!(err, Error::Uncorrectable);
}

#[test]
fn in_family_menu_always_recovers() {
    let code = CodeSpec::builtin(BuiltinCode::Perfect5Block, 2, 1).unwrap();
    let family = PatternFamily::single_register(5, weyl_basis(2)).unwrap();
    let input = logical(2, 1, &[(0, 1.0), (1, -1.0)]);
    // p small enough that most trials carry at most one error; the rest fall outside the family
    let cfg = ChannelConfig::uniform_weyl(2, 0.05, 11, 400);
    let s = run_trials(&code, &cfg, &family, &input).unwrap();
    assert!(s.in_family > 300);
    assert_eq!(s.in_family_success, s.in_family);
    assert_eq!(s.conditional_success, 1.0);
}

#[test]
fn summary_independent_of_thread_count() {
    let code = CodeSpec::builtin(BuiltinCode::Shor9, 2, 1).unwrap();
    let family = PatternFamily::single_register(9, weyl_basis(2)).unwrap();
    let input = logical(2, 1, &[(0, 1.0), (1, 1.0)]);
    let cfg = ChannelConfig::uniform_weyl(2, 0.1, 99, 300);
    let run = |jobs| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .unwrap()
            .install(|| run_trials(&code, &cfg, &family, &input).unwrap())
    };
    let a = run(1);
    assert_eq!(a, run(3));
    assert_eq!(serde_json::to_value(&a).unwrap()["N"], 2);
    assert!(a.in_family < a.trials);
}
