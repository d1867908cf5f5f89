//! Frozen reference values computed independently at 40-digit precision.

#![allow(clippy::excessive_precision)]

use slowthink_core::bounds::{self, CostCase};
use slowthink_core::info::{self, FiniteJoint};
use slowthink_core::sim::{monte_carlo, wilson_interval};
use slowthink_core::{
    DecayModel, ProcessConfig, SelectionRule, SelectorModel, StrategySpec, WrongModel,
};

const E: f64 = std::f64::consts::E;

fn close(actual: f64, expected: f64, rel: f64) {
    let err = (actual - expected).abs() / expected.abs().max(1e-300);
    assert!(err <= rel, "{actual} vs {expected} (relative error {err})");
}

fn exp_decay(lambda: f64) -> DecayModel {
    DecayModel::exponential(lambda).unwrap()
}

#[test]
fn closed_form_bounds() {
    let ideal = SelectorModel::Ideal;
    let one = exp_decay(1.0);

    let single = bounds::single_path_bound(&one, 2).unwrap();
    close(single.value(), 0.049787068367863942979, 1e-14);
    close(single.log_value, -3.0, 1e-15);

    let w = bounds::width_expansion_bound_exact(&one, &ideal, 1, 2, 2).unwrap();
    close(w.value(), 0.60042359910627195130, 1e-14);

    let half = SelectorModel::constant(0.5).unwrap();
    let s = bounds::width_expansion_bound_simplified(&exp_decay(0.5), &half, 2, 4, 2).unwrap();
    close(s.value(), 0.049787068367863942979, 1e-14);

    let bon = bounds::bon_bound(&one, &ideal, 2, 3).unwrap();
    close(bon.value(), 0.44808361531077548681, 1e-14);

    let best = bounds::mcts_best_bound(&one, &ideal, 2, 2).unwrap();
    close(best.value(), 0.19914827347145577192, 1e-14);

    let worst = bounds::mcts_worst_bound(&one, &ideal, 2, 2).unwrap();
    close(worst.value(), 0.39829654694291154383, 1e-14);
}

#[test]
fn distinguishability_and_rollout() {
    let wrong = WrongModel::new(1.0).unwrap();
    let v = bounds::lookahead_distinguishability_bound(1.0, &wrong, 2.0).unwrap();
    close(v, 0.11701964434787851160, 1e-14);

    for (ld, l, want) in [
        (E.powi(3) / 2.0, 1.0, 2.0),
        (E.powi(4) / 2.0, 1.0, 3.0),
        (E.powi(4) / 2.0, 2.0, 2.0),
        (E.powi(4) / 2.0, 5.0, 0.0),
    ] {
        let got = bounds::optimal_rollout(&WrongModel::new(ld).unwrap(), l);
        assert!((got - want).abs() < 1e-12, "{ld} {l}: {got}");
    }
}

#[test]
fn n_min_matches_closed_forms() {
    for b in 2..=4u64 {
        for len in 1..=5usize {
            let best = bounds::n_min(b, len, CostCase::Best).unwrap();
            close(best, b as f64, 1e-9);
            let worst = bounds::n_min(b, len, CostCase::Worst).unwrap();
            close(worst, (b as f64).powf((len as f64 + 1.0) / 2.0), 1e-9);
        }
    }
}

#[test]
fn noisy_selector_pairwise_success() {
    let sel = SelectorModel::noisy_score(1.0, 1.0).unwrap();
    let p = sel.success_prob(2);
    assert!((p - 0.76024993890652326884).abs() < 0.005, "{p}");
    assert_eq!(sel.success_prob(1), 1.0);
}

fn frozen_joint() -> FiniteJoint {
    FiniteJoint::from_rows(&[
        vec![0.03, 0.09, 0.05, 0.02],
        vec![0.08, 0.04, 0.06, 0.07],
        vec![0.05, 0.10, 0.03, 0.09],
        vec![0.06, 0.02, 0.11, 0.10],
    ])
    .unwrap()
}

#[test]
fn frozen_joint_quantities() {
    let j = frozen_joint();
    close(info::conditional_entropy(&j), 1.2750802321885221137, 1e-12);
    close(info::mutual_information(&j), 0.099535847023649061693, 1e-11);
    close(info::map_decoder_error(&j), 0.61, 1e-12);
}

#[test]
fn three_by_three_and_rectangular_joints() {
    let j3 = FiniteJoint::from_rows(&[
        vec![0.10, 0.05, 0.15],
        vec![0.20, 0.05, 0.05],
        vec![0.02, 0.08, 0.30],
    ])
    .unwrap();
    close(j3.conditional_entropy(), 0.90770824554641344272, 1e-12);
    close(j3.mutual_information(), 0.18119172979881017892, 1e-12);
    close(j3.map_decoder_error(), 0.42, 1e-12);

    let j43 = FiniteJoint::from_rows(&[
        vec![0.05, 0.10, 0.02],
        vec![0.12, 0.03, 0.08],
        vec![0.07, 0.15, 0.05],
        vec![0.10, 0.13, 0.10],
    ])
    .unwrap();
    close(j43.conditional_entropy(), 1.2872966721442951913, 1e-12);
    close(j43.mutual_information(), 0.071340126585427686432, 1e-11);
    close(j43.map_decoder_error(), 0.63, 1e-12);
}

/// Minimum error over every deterministic decoder `r -> t`.
fn brute_force_error(j: &FiniteJoint) -> f64 {
    let (nt, nr) = (j.t_size(), j.r_size());
    let total = nt.pow(nr as u32);
    let mut best = f64::INFINITY;
    for code in 0..total {
        let mut c = code;
        let mut hit = 0.0;
        for r in 0..nr {
            hit += j.p(c % nt, r);
            c /= nt;
        }
        best = best.min(1.0 - hit);
    }
    best
}

#[test]
fn map_decoder_is_optimal_over_all_decoders() {
    let mut rng = slowthink_core::rng::stream(17, 0);
    for _ in 0..200 {
        let j = FiniteJoint::random(4, 4, &mut rng);
        let exact = brute_force_error(&j);
        assert!((j.map_decoder_error() - exact).abs() < 1e-12);
    }
    assert!((brute_force_error(&frozen_joint()) - 0.61).abs() < 1e-12);
}

#[test]
fn orm_max_without_score_noise() {
    let mut cfg = ProcessConfig::new(exp_decay(1.0), SelectorModel::Ideal, 2);
    cfg.score_noise_std = 0.0;
    let s = StrategySpec::Bon { n: 8, rule: SelectionRule::OrmMax };
    let r = monte_carlo(&cfg, &s, 100_000, 4).unwrap();
    let want = 0.33538905027918683526;
    assert!(r.ci_low <= want && want <= r.ci_high, "{r:?}");
}

#[test]
fn wilson_reference_points() {
    let (lo, hi) = wilson_interval(50, 100);
    close(lo, 0.40383153036599564, 1e-10);
    close(hi, 0.59616846963400436, 1e-10);
    let (lo, hi) = wilson_interval(0, 10);
    assert_eq!(lo, 0.0);
    close(hi, 0.27753279986288920, 1e-10);
}
