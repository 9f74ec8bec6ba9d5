use levelcross::cavity::{self, CavityParams, CavityState, Convention};
use levelcross::chain::{BiasSign, ChainSystem};
use levelcross::permutation::{compile, compile_with, primitive_table, realized_table, Permutation, PulseSequence, DEFAULT_TOL};
use levelcross::program::verify_sequence;
use levelcross::propagator::StepOptions;

#[test]
fn compiled_swap_of_one_and_five() {
    let target = Permutation::parse("(1 5)", 5).unwrap();
    let seq = compile(&target).unwrap();
    assert_eq!(seq.names(), "a,f,a");
    assert_eq!(primitive_table().product(&seq.primitives).unwrap(), target);
}

#[test]
fn lowering_bias_runs_its_own_table() {
    let sys = ChainSystem::five_site().with_sign(BiasSign::Lowering);
    let target = Permutation::parse("(1 2 3)", 5).unwrap();
    let seq = compile_with(&target, &realized_table(BiasSign::Lowering)).unwrap();
    let r = verify_sequence(&seq, &sys, &StepOptions::with_step(2e-3), DEFAULT_TOL).unwrap();
    assert!(r.matches(&target), "{} {r:?}", seq.names());
}

#[test]
fn pulse_sequence_json_round_trip() {
    let seq: PulseSequence = serde_json::from_str(r#"{"primitives":["a","b","a"],"tau":20.0}"#).unwrap();
    assert_eq!(seq.total_duration(), 60.0);
    let back: PulseSequence = serde_json::from_str(&serde_json::to_string(&seq).unwrap()).unwrap();
    assert_eq!(back, seq);
}

#[test]
fn weak_strong_scale_makes_leakage_worse() {
    let opts = StepOptions::with_step(1e-4).record_stride(100);
    let initials = [CavityState::Ten0, CavityState::Eleven0];
    let strong = cavity::run_cnot(&CavityParams::cnot_default(), Convention::Schrodinger, &initials, 100.0, &opts).unwrap();
    let weak_params = CavityParams::cnot_default().with_strong(20.0, 20.0);
    let weak = cavity::run_cnot(&weak_params, Convention::Schrodinger, &initials, 100.0, &opts).unwrap();
    for (s, w) in strong.reports.iter().zip(&weak.reports) {
        assert!(w.dfs_leakage >= 10.0 * s.dfs_leakage, "{} vs {}", w.dfs_leakage, s.dfs_leakage);
        assert!(w.final_norm < s.final_norm);
    }
}

#[test]
fn drive_off_means_no_transfer() {
    let mut p = CavityParams::cnot_default();
    p.omega = 1e-9;
    let run = cavity::run_cnot(&p, Convention::Schrodinger, &[CavityState::Ten0], 100.0, &StepOptions::with_step(1e-4)).unwrap();
    assert!(run.reports[0].final_dfs[0] > 1.0 - 1e-9);
    assert!(run.reports[0].swap_fidelity < 1e-9);
}

#[test]
fn effective_model_tracks_the_full_one() {
    let p = CavityParams::cnot_default();
    let initials = [CavityState::Ten0, CavityState::Eleven0];
    let full = cavity::run_cnot(&p, Convention::Schrodinger, &initials, 100.0, &StepOptions::with_step(1e-4)).unwrap();
    let eff = cavity::run_effective_cnot(&p, &initials, 100.0, &StepOptions::with_step(1e-3)).unwrap();
    for (a, b) in full.reports.iter().zip(&eff.reports) {
        assert!((a.swap_fidelity - b.swap_fidelity).abs() <= 0.02, "{} vs {}", a.swap_fidelity, b.swap_fidelity);
        assert_eq!(a.dominant, a.target);
    }
}
