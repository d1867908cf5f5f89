use proptest::prelude::*;
use slowthink_core::bounds::{self, lookahead_distinguishability_bound, optimal_rollout};
use slowthink_core::calibration::{self, ExpansionTrace, TraceStats};
use slowthink_core::hsic::{self, HsicConfig, SampleSet};
use slowthink_core::info::{self, fano_check, random_sequence, FanoSuiteConfig, FiniteJoint};
use slowthink_core::rng;
use slowthink_core::{DecayModel, SelectorModel, WrongModel};

fn joint(t: usize, r: usize, seed: u64) -> FiniteJoint {
    FiniteJoint::random(t, r, &mut rng::stream(seed, 0))
}

fn selector() -> impl Strategy<Value = SelectorModel> {
    prop_oneof![
        Just(SelectorModel::Ideal),
        (0.05f64..1.0).prop_map(|e| SelectorModel::constant(e).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn exact_width_bound_never_exceeds_relaxed(
        lambda in 0.05f64..=1.0,
        len in 1usize..8,
        k in 1u64..16,
        b in 1u64..8,
        sel in selector(),
    ) {
        let decay = DecayModel::exponential(lambda).unwrap();
        let exact = bounds::width_expansion_bound_exact(&decay, &sel, len, k, b).unwrap();
        let relaxed = bounds::width_expansion_bound_simplified(&decay, &sel, len, k, b).unwrap();
        prop_assert!(exact.log_value <= relaxed.log_value + 1e-12);
        prop_assert!(exact.log_value <= 1e-12);
    }

    #[test]
    fn unit_width_reduces_to_single_path(lambda in 0.05f64..=1.0, len in 1usize..10) {
        let decay = DecayModel::exponential(lambda).unwrap();
        let single = bounds::single_path_bound(&decay, len).unwrap();
        let width = bounds::width_expansion_bound_exact(&decay, &SelectorModel::Ideal, len, 1, 1).unwrap();
        prop_assert!((single.log_value - width.log_value).abs() < 1e-12);
    }

    #[test]
    fn worst_case_exact_never_exceeds_relaxed(
        lambda in 0.05f64..=1.0,
        len in 1usize..6,
        b in 1u64..4,
    ) {
        let decay = DecayModel::exponential(lambda).unwrap();
        let sel = SelectorModel::Ideal;
        let exact = bounds::mcts_worst_bound_exact(&decay, &sel, len, b).unwrap();
        let relaxed = bounds::mcts_worst_bound(&decay, &sel, len, b).unwrap();
        prop_assert!(exact.log_value <= relaxed.log_value + 1e-12);
    }

    #[test]
    fn wider_search_never_lowers_exact_bound(
        lambda in 0.05f64..=1.0,
        len in 1usize..6,
        k in 1u64..10,
    ) {
        let decay = DecayModel::exponential(lambda).unwrap();
        let sel = SelectorModel::Ideal;
        let narrow = bounds::width_expansion_bound_exact(&decay, &sel, len, k, 1).unwrap();
        let wide = bounds::width_expansion_bound_exact(&decay, &sel, len, k + 1, 1).unwrap();
        prop_assert!(wide.log_value >= narrow.log_value - 1e-12);
    }

    #[test]
    fn optimal_rollout_maximizes_distinguishability(
        ld in 1.0f64..200.0,
        layer in 0.0f64..6.0,
    ) {
        let wrong = WrongModel::new(ld).unwrap();
        let g = optimal_rollout(&wrong, layer);
        let best = lookahead_distinguishability_bound(1.0, &wrong, layer + g).unwrap();
        for i in 0..=400 {
            let other = i as f64 * 0.025;
            let v = lookahead_distinguishability_bound(1.0, &wrong, layer + other).unwrap();
            prop_assert!(v <= best + 1e-12, "gamma {other}: {v} > {best} at {g}");
        }
    }

    #[test]
    fn data_processing_never_adds_information(
        t in 2usize..6,
        r in 2usize..6,
        s in 2usize..5,
        seed in any::<u64>(),
        map_seed in any::<u64>(),
    ) {
        let s = s.min(r);
        let j = joint(t, r, seed);
        let mut map_rng = rng::stream(map_seed, 1);
        let mut map: Vec<usize> = (0..r).map(|_| rand::Rng::random_range(&mut map_rng, 0..s)).collect();
        for (i, m) in map.iter_mut().take(s).enumerate() {
            *m = i;
        }
        let mut probs = vec![0.0; t * s];
        for ti in 0..t {
            for ri in 0..r {
                probs[ti * s + map[ri]] += j.p(ti, ri);
            }
        }
        let processed = FiniteJoint::new(t, s, probs).unwrap();
        prop_assert!(processed.mutual_information() <= j.mutual_information() + 1e-12);
        prop_assert!(processed.map_decoder_error() >= j.map_decoder_error() - 1e-12);
    }

    #[test]
    fn entropy_identities(t in 2usize..7, r in 2usize..7, seed in any::<u64>()) {
        let j = joint(t, r, seed);
        let h_t = info::entropy(&j.t_marginal()).unwrap();
        prop_assert!((h_t - j.conditional_entropy() - j.mutual_information()).abs() < 1e-12);
        prop_assert!(h_t <= (t as f64).ln() + 1e-12);
        prop_assert!(j.mutual_information() >= -1e-15);
        prop_assert!(j.conditional_entropy() <= h_t + 1e-12);
    }

    #[test]
    fn admissible_sequences_respect_fano(index in 0u64..100_000) {
        let seq = random_sequence(&FanoSuiteConfig::default(), index);
        let report = fano_check(&seq, seq.len()).unwrap();
        prop_assert!(!report.is_violation(), "{report:?}");
    }

    #[test]
    fn hsic_symmetry_and_invariances(
        n in 4usize..30,
        seed in any::<u64>(),
        scale in 0.1f64..10.0,
        sigma in 0.3f64..5.0,
    ) {
        let mut r = rng::stream(seed, 0);
        let x = hsic::gaussian_samples(n, 2, &mut r).unwrap();
        let y = hsic::gaussian_samples(n, 3, &mut r).unwrap();
        let cfg = HsicConfig::new(sigma).unwrap();
        let xy = hsic::hsic(&x, &y, &cfg).unwrap();
        prop_assert!(xy >= 0.0);
        prop_assert!((xy - hsic::hsic(&y, &x, &cfg).unwrap()).abs() < 1e-12);

        let perm: Vec<usize> = (0..n).rev().collect();
        let joint_perm = hsic::hsic(&x.permuted(&perm), &y.permuted(&perm), &cfg).unwrap();
        prop_assert!((xy - joint_perm).abs() < 1e-12);

        let xs = SampleSet::new(x.vectors() * scale).unwrap();
        let ys = SampleSet::new(y.vectors() * scale).unwrap();
        let scaled = hsic::hsic(&xs, &ys, &HsicConfig::new(sigma * scale).unwrap()).unwrap();
        prop_assert!((xy - scaled).abs() < 1e-10);
    }

    #[test]
    fn calibration_is_linear_in_b(
        b in 1.0f64..10.0,
        p in 1.0f64..20.0,
        l in 1.0f64..10.0,
        c in 0.1f64..10.0,
    ) {
        let base = TraceStats::new(b, p, l).unwrap();
        let scaled = TraceStats::new(b * c, p, l).unwrap();
        let rel = |a: f64, e: f64| (a - e).abs() / e;
        prop_assert!(rel(calibration::n_call(&scaled), c * calibration::n_call(&base)) < 1e-12);
        prop_assert!(rel(calibration::n_res(&scaled), c * calibration::n_res(&base)) < 1e-12);
        prop_assert!(calibration::n_res(&base) <= calibration::n_call(&base) + 1e-12);
    }

    #[test]
    fn summary_ignores_trace_order(
        raw in prop::collection::vec(
            (prop::collection::vec((0u32..8, 1u64..9), 1..6), 1u32..8),
            1..10,
        ),
    ) {
        let traces: Vec<ExpansionTrace> = raw
            .into_iter()
            .enumerate()
            .map(|(i, (events, l))| ExpansionTrace {
                question_id: format!("q{i}"),
                events,
                ideal_path_length: l,
            })
            .collect();
        let forward = calibration::summarize(&traces).unwrap();
        let mut reversed = traces.clone();
        reversed.reverse();
        let backward = calibration::summarize(&reversed).unwrap();
        prop_assert!((forward.avg_b - backward.avg_b).abs() < 1e-12);
        prop_assert!((forward.avg_p - backward.avg_p).abs() < 1e-12);
        prop_assert!((forward.avg_l - backward.avg_l).abs() < 1e-12);
    }
}
