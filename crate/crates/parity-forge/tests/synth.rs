use approx::assert_abs_diff_eq;
use num_complex::Complex64;
use parity_forge::synth::*;
use parity_forge::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};

fn haar_targets(n: usize, seed: u64) -> Vec<Unitary2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Unitary2::haar(&mut rng)).collect()
}

/// Direct matrix evaluation of `sqrt(1 - |Tr(V U^dag)|^2 / 4)`.
fn eps_oracle(u: &Unitary2, v: &Unitary2) -> f64 {
    let mut t = Complex64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            t += v.m[i * 2 + j] * u.m[i * 2 + j].conj();
        }
    }
    (1.0 - t.norm_sqr() / 4.0).max(0.0).sqrt()
}

#[test]
fn trace_distance_examples() {
    let id = Unitary2::identity();
    let z = Unitary2::from_word(&[Gate::Z]);
    let t = Unitary2::from_word(&[Gate::Phase(2)]);
    assert_abs_diff_eq!(trace_distance(&id, &id), 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(trace_distance(&id, &z), 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(trace_distance(&id, &t), (PI / 8.0).sin(), epsilon = 1e-12);
}

#[test]
fn clifford_block_and_achievable_costs() {
    let c2 = enumerate_blocks(&GateSet::c2(), 3.0, DEFAULT_MAX_ELEMENTS).unwrap();
    assert_eq!(c2.block_size(0), 24);
    assert_eq!(c2.achievable_costs(), vec![0.0, 1.0, 2.0, 3.0]);
    let c3 = enumerate_blocks(&GateSet::c3(), 4.0, DEFAULT_MAX_ELEMENTS).unwrap();
    assert_eq!(c3.achievable_costs(), vec![0.0, 1.0, 2.0, 2.5, 3.0, 3.5, 4.0]);
    let blocks = c3.cost_blocks();
    assert_eq!(blocks[0].matrices.len(), 24);
}

/// Oracle: cost-1 block of C2 equals the distinct `C T C'` products, built from
/// matrices rather than quaternions.
#[test]
fn t_block_matches_clifford_sandwiches() {
    let b = enumerate_blocks(&GateSet::c2(), 1.0, DEFAULT_MAX_ELEMENTS).unwrap();
    let cliffords: Vec<Unitary2> = b.cost_blocks()[0].matrices.clone();
    let t = Unitary2::from_word(&[Gate::Phase(2)]);
    let mut distinct: Vec<Unitary2> = Vec::new();
    for a in &cliffords {
        for c in &cliffords {
            let m = a.mul(&t).mul(c);
            let known = cliffords.iter().chain(distinct.iter()).any(|x| eps_oracle(x, &m) < 1e-7);
            if !known {
                distinct.push(m);
            }
        }
    }
    assert_eq!(b.block_size(2), distinct.len());
}

#[test]
fn witness_words_reproduce_block_matrices() {
    let b = enumerate_blocks(&GateSet::c3(), 4.0, DEFAULT_MAX_ELEMENTS).unwrap();
    for i in (0..b.len()).step_by(7) {
        let w = b.word(i);
        // sqrt(1 - x) near x = 1 leaves ~1e-8 of rounding
        assert!(eps_oracle(&b.matrix(i), &Unitary2::from_word(&w)) < 1e-7);
    }
}

#[test]
fn resource_limit_reports_progress() {
    match enumerate_blocks(&GateSet::c2(), 8.0, 1000) {
        Err(Error::ResourceLimit(msg)) => assert!(msg.contains("complete up to cost")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn exact_targets_are_found() {
    let c2 = enumerate_blocks(&GateSet::c2(), 4.0, DEFAULT_MAX_ELEMENTS).unwrap();
    let c3 = enumerate_blocks(&GateSet::c3(), 4.0, DEFAULT_MAX_ELEMENTS).unwrap();
    let t = Unitary2::from_word(&[Gate::Phase(2)]);
    let sqrt_t = Unitary2::from_word(&[Gate::Phase(3)]);
    let r = synthesize(&t, &c2, 1.0, Backend::Exhaustive, 1, 0).unwrap();
    assert_abs_diff_eq!(r.epsilon, 0.0, epsilon = 1e-7);
    assert_eq!(r.count(2), 1);
    assert_eq!(format_word(&r.word), "T");
    let r = synthesize(&sqrt_t, &c3, 2.5, Backend::Exhaustive, 1, 0).unwrap();
    assert_abs_diff_eq!(r.epsilon, 0.0, epsilon = 1e-7);
    assert_eq!(r.count(3), 1);
    let r = synthesize(&sqrt_t, &c2, 2.0, Backend::Exhaustive, 1, 0).unwrap();
    assert!(r.epsilon > 0.09, "{}", r.epsilon);
}

#[test]
fn budget_errors() {
    let b = enumerate_blocks(&GateSet::c2(), 2.0, DEFAULT_MAX_ELEMENTS).unwrap();
    let u = Unitary2::identity();
    assert!(matches!(
        synthesize(&u, &b, -1.0, Backend::Exhaustive, 1, 0),
        Err(Error::EmptyBudget(_))
    ));
    assert!(matches!(
        synthesize(&u, &b, 3.0, Backend::Exhaustive, 1, 0),
        Err(Error::InvalidParameter(_))
    ));
    assert!(synthesize(&u, &b, 3.0, Backend::ChainSampler, 0, 0).is_err());
}

#[test]
fn partitioning_examples() {
    let c3 = GateSet::c3();
    let p = partitionings(5.0, 4.0, &c3).unwrap();
    assert!(p.contains(&vec![4.0, 1.0]), "{p:?}");
    assert!(p.contains(&vec![2.5, 2.5]), "{p:?}");
    assert_eq!(partitionings(3.0, 4.0, &c3).unwrap(), vec![vec![3.0]]);
    assert_eq!(partitionings(10.0, 8.0, &GateSet::c2()).unwrap(), vec![vec![8.0, 2.0]]);
    for t in partitionings(13.5, 8.0, &c3).unwrap() {
        assert!(t.iter().all(|&r| r <= 8.0));
        assert_abs_diff_eq!(t.iter().sum::<f64>(), 13.5);
    }
}

/// Brute-force optimum over a second, independent enumeration at a larger
/// truncation.
#[test]
fn chain_sampler_reaches_optimum_beyond_truncation() {
    let small = enumerate_blocks(&GateSet::c2(), 3.0, DEFAULT_MAX_ELEMENTS).unwrap();
    let full = enumerate_blocks(&GateSet::c2(), 5.0, DEFAULT_MAX_ELEMENTS).unwrap();
    for u in haar_targets(6, 21) {
        let exact = synthesize(&u, &full, 5.0, Backend::Exhaustive, 1, 0).unwrap();
        let chain = synthesize(&u, &small, 5.0, Backend::ChainSampler, 5000, 4).unwrap();
        assert!(
            (chain.epsilon - exact.epsilon).abs() < 1e-9,
            "{} vs {}",
            chain.epsilon,
            exact.epsilon
        );
    }
}

/// With mixed gate costs a word fits a partitioning only in some slot orders:
/// both orders of `sqrt(T)` and `T` must be reachable from slots `{3, 1}`.
#[test]
fn mixed_cost_words_fit_either_order() {
    let narrow = enumerate_blocks(&GateSet::c3(), 3.0, DEFAULT_MAX_ELEMENTS).unwrap();
    for word in ["S sqrtT H Y T", "H T H S sqrtT X H"] {
        let u = Unitary2::from_word(&parse_word(word).unwrap());
        let r = synthesize(&u, &narrow, 4.0, Backend::ChainSampler, 500, 0).unwrap();
        assert!(r.epsilon < 1e-7, "{word}: {}", r.epsilon);
    }
}

#[test]
fn more_samples_never_hurt() {
    let b = enumerate_blocks(&GateSet::c2(), 4.0, DEFAULT_MAX_ELEMENTS).unwrap();
    for u in haar_targets(4, 5) {
        let few = synthesize(&u, &b, 10.0, Backend::ChainSampler, 50, 8).unwrap();
        let many = synthesize(&u, &b, 10.0, Backend::ChainSampler, 500, 8).unwrap();
        assert!(many.epsilon <= few.epsilon + 1e-12);
    }
}

#[test]
fn synthesis_is_reproducible_and_phase_invariant() {
    let b = enumerate_blocks(&GateSet::c3(), 4.0, DEFAULT_MAX_ELEMENTS).unwrap();
    for u in haar_targets(5, 6) {
        let a = synthesize(&u, &b, 9.0, Backend::ChainSampler, 200, 1).unwrap();
        let again = synthesize(&u, &b, 9.0, Backend::ChainSampler, 200, 1).unwrap();
        assert_eq!(a, again);
        let phased = u.scale(Complex64::from_polar(1.0, 0.731));
        let p = synthesize(&phased, &b, 9.0, Backend::ChainSampler, 200, 1).unwrap();
        assert_eq!(p.word, a.word);
        assert_abs_diff_eq!(p.epsilon, a.epsilon, epsilon = 1e-12);
    }
}

#[test]
fn reported_cost_and_error_match_the_word() {
    let gs = GateSet::c3();
    let b = enumerate_blocks(&gs, 4.0, DEFAULT_MAX_ELEMENTS).unwrap();
    for (i, u) in haar_targets(8, 2).iter().enumerate() {
        let budget = 3.0 + i as f64;
        let r = synthesize(u, &b, budget, Backend::ChainSampler, 100, 3).unwrap();
        let recount = r.count(2) as f64 + 2.5 * r.count(3) as f64;
        assert_eq!(r.cost, recount);
        assert!(r.cost <= budget);
        assert_abs_diff_eq!(r.epsilon, eps_oracle(u, &Unitary2::from_word(&r.word)), epsilon = 1e-12);
        let parsed = parse_word(&format_word(&r.word)).unwrap();
        assert_eq!(parsed, r.word);
    }
}

#[test]
fn fit_and_ratio_helpers() {
    let pts: Vec<(f64, f64)> = [1e-1, 1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&e: &f64| (e, 3.05 * (1.0 / e).log2() - 5.97))
        .collect();
    let (a, b) = fit_scaling(&pts).unwrap();
    assert_abs_diff_eq!(a, 3.05, epsilon = 1e-9);
    assert_abs_diff_eq!(b, -5.97, epsilon = 1e-9);
    assert!(fit_scaling(&[(0.1, 1.0)]).is_err());

    let t_only = SequenceResult::from_word(vec![Gate::Phase(2), Gate::H, Gate::Phase(2)], &Unitary2::identity(), &GateSet::c3()).unwrap();
    let k = gate_ratio(&[t_only.clone(), t_only]);
    assert_eq!(k.median, 0.0);
    assert_eq!(k.with_sqrt_t, 0.0);

    assert_abs_diff_eq!(lower_bound_gates(2, 1e-3).unwrap(), 29.897, epsilon = 1e-3);
    assert_abs_diff_eq!(lower_bound_gates(3, 1e-3).unwrap(), 14.949, epsilon = 1e-3);
    assert_eq!(lower_bound_gates(2, 1.0).unwrap(), 0.0);
}

proptest! {
    #[test]
    fn trace_distance_is_a_metric(seed in any::<u64>(), phase in 0.0f64..TAU) {
        let v = haar_targets(3, seed);
        let (a, b, c) = (&v[0], &v[1], &v[2]);
        let ab = trace_distance(a, b);
        prop_assert!((ab - trace_distance(b, a)).abs() < 1e-12);
        prop_assert!(ab <= trace_distance(a, c) + trace_distance(c, b) + 1e-12);
        prop_assert!(trace_distance(a, &a.scale(Complex64::from_polar(1.0, phase))) < 1e-7);
        prop_assert!((ab - eps_oracle(a, b)).abs() < 1e-12);
    }
}
