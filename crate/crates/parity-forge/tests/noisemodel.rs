use approx::assert_relative_eq;
use parity_forge::noisemodel::*;
use proptest::prelude::*;

fn params(p: f64, eta: f64, regime: Regime) -> NoiseParams {
    NoiseParams::new(p, eta, 10, regime).unwrap()
}

#[test]
fn depolarizing_strength() {
    assert_relative_eq!(q_of_k(2, &params(1e-3, 1e5, Regime::Scaled)).unwrap(), 1e-3 / 3.0);
    assert_relative_eq!(q_of_k(5, &params(1e-3, 1e5, Regime::Scaled)).unwrap(), 1e-3 / 24.0);
    assert_eq!(q_of_k(9, &params(0.0, 1e5, Regime::Constant)).unwrap(), 0.0);
}

#[test]
fn effective_rate_examples() {
    let pe = p_eff(2, &params(1e-3, 1e5, Regime::Scaled)).unwrap();
    assert_relative_eq!(pe, 1e-3 * (1.0 / 3.0 + 1e-4) + 2.0 * 1e-3 / 3.0, max_relative = 1e-12);
    assert_relative_eq!(pe, 1.0001e-3, max_relative = 1e-12);
    let inf = p_eff(2, &params(1e-3, f64::INFINITY, Regime::Scaled)).unwrap();
    assert_relative_eq!(inf, 1e-3, max_relative = 1e-12);
    let deep = p_eff(30, &params(1e-3, 1e5, Regime::Scaled)).unwrap();
    // the 2q term still contributes ~2.5e-5 relative at k = 30
    assert_relative_eq!(deep, 1e-3 * 10.0 / 1e5, max_relative = 1e-4);
}

#[test]
fn distillation_examples() {
    assert_eq!(harmful_triples(2).unwrap(), 35.0);
    assert_eq!(harmful_triples(3).unwrap(), 155.0);
    assert_relative_eq!(p_dist_from_eff(2, 1e-3).unwrap(), 3.5e-8, max_relative = 1e-12);
    assert_relative_eq!(p_dist_from_eff(3, 1e-3).unwrap(), 1.55e-7, max_relative = 1e-12);
    assert_eq!(p_dist_from_eff(4, 0.0).unwrap(), 0.0);
    assert!(harmful_triples(40).is_err());
}

#[test]
fn gate_error_sums() {
    let np = params(1e-3, 1e5, Regime::Scaled);
    assert_relative_eq!(p_gate(2, &np).unwrap().p_gate, p_dist(2, &np).unwrap());
    let g3 = p_gate(3, &np).unwrap().p_gate;
    assert_relative_eq!(g3, p_dist(3, &np).unwrap() + p_dist(2, &np).unwrap() / 2.0, max_relative = 1e-12);
    assert!(p_gate(1, &np).is_err());
}

#[test]
fn acceptance_examples() {
    let a = acceptance_from_eff(15, 1e-3).unwrap();
    assert_relative_eq!(a.p_success, 0.985, max_relative = 1e-12);
    assert_relative_eq!(a.n_attempts, 1.0 / 0.985, max_relative = 1e-12);
    assert_eq!(acceptance_from_eff(15, 0.0).unwrap().n_attempts, 1.0);
    assert!(acceptance_from_eff(1000, 1e-3).is_err());
}

#[test]
fn regime_shapes() {
    let constant = params(1e-3, 1e5, Regime::Constant);
    let d: Vec<f64> = (2..=12).map(|k| p_dist(k, &constant).unwrap()).collect();
    assert!(d.windows(2).all(|w| w[1] > w[0]));
    let mut ths = Vec::new();
    for eta in [1e4, 1e5, 1e6] {
        let np = params(1e-3, eta, Regime::Scaled);
        let k_th = k_threshold(2..=20, &np).unwrap();
        let d: Vec<f64> = (2..=20).map(|k| p_dist(k, &np).unwrap()).collect();
        let i = (k_th - 2) as usize;
        assert!(d[..=i].windows(2).all(|w| w[1] <= w[0]));
        assert!(d[i..].windows(2).all(|w| w[1] >= w[0]));
        ths.push(k_th);
    }
    assert!(ths.windows(2).all(|w| w[1] > w[0]), "{ths:?}");
}

#[test]
fn infinite_bias_channels() {
    let c = PauliChannel2::infinite_bias(3e-3).unwrap();
    assert_relative_eq!(c.prob(0, 1) + c.prob(1, 0) + c.prob(1, 1), 3e-3, max_relative = 1e-12);
    assert!(PauliChannel1::from_xyz(0.6, 0.3, 0.2).is_err());
    assert!(NoiseParams::new(-1e-3, 1e5, 10, Regime::Scaled).is_err());
}

proptest! {
    #[test]
    fn gate_error_respects_bound(p in 1e-6f64..1e-2, eta in 1e2f64..1e7, k in 2u32..16) {
        let np = params(p, eta, Regime::Scaled);
        let g = p_gate(k, &np).unwrap();
        let max = (2..=k).map(|j| p_dist(j, &np).unwrap()).fold(0.0, f64::max);
        prop_assert!(g.p_gate <= 2.0 * (1.0 - 2f64.powi(1 - k as i32)) * max * (1.0 + 1e-12));
        prop_assert!(g.p_gate < 2.0 * max);
    }
}
