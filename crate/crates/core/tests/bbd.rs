use bbd_core::bbd::{
    audit_decomposition, bias_from_neurons, decompose, lagrangian_boundary, lagrangian_bulk,
    neuron_velocity_pushforward, random_target, AuditConfig, BbdState, CoefficientMode,
};
use bbd_core::net::{forward, ActivationKind, Architecture, LossKind, Matrix, ParamState};
use bbd_core::rng;
use proptest::prelude::*;

fn max_abs(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(u, v)| (u - v).abs())
        .fold(0.0, f64::max)
}

#[test]
fn pushforward_matches_finite_difference() {
    let arch = Architecture::new(vec![3, 5, 4, 2], ActivationKind::Tanh, LossKind::Mse).unwrap();
    let mut r = rng::stream(9, 0);
    let p = ParamState::random_with_velocities(&arch, &mut r);
    let x = rng::normal_vec(&mut r, 3, 1.0);
    let n = forward(&p, &x, &arch).unwrap();
    let zd =
        neuron_velocity_pushforward(&p.w, &p.w_dot, &p.b_dot, &n.z, &x, &[0.0; 3], &arch).unwrap();
    let eps = 1e-5;
    let shifted = |s: f64| {
        let mut q = p.clone();
        let pos: Vec<f64> = p
            .positions()
            .iter()
            .zip(p.velocities())
            .map(|(a, v)| a + s * v)
            .collect();
        q.set_positions(&pos);
        forward(&q, &x, &arch).unwrap().z
    };
    let (plus, minus) = (shifted(eps), shifted(-eps));
    for k in 0..zd.len() {
        for i in 0..zd[k].len() {
            let fd = (plus[k][i] - minus[k][i]) / (2.0 * eps);
            let rel = (fd - zd[k][i]).abs() / zd[k][i].abs().max(1.0);
            assert!(
                rel <= 1e-6,
                "layer {} unit {i}: {fd} vs {}",
                k + 1,
                zd[k][i]
            );
        }
    }
}

#[test]
fn random_neurons_round_trip_seed_three() {
    let arch =
        Architecture::new(vec![2, 4, 3, 4, 2], ActivationKind::Sigmoid, LossKind::Mse).unwrap();
    let s = BbdState::random(&arch, &mut rng::stream(3, 0));
    let b = s.biases(&arch).unwrap();
    let mut p = ParamState::zeros(&arch);
    p.w = s.w.clone();
    p.b = b;
    let z = forward(&p, &s.x, &arch).unwrap().z;
    assert!(max_abs(&z, &s.z) <= 1e-12);
}

#[test]
fn boundary_reduces_to_loss() {
    let arch = Architecture::new(vec![2, 3, 2], ActivationKind::Tanh, LossKind::Mse).unwrap();
    let mut s = BbdState::random(&arch, &mut rng::stream(4, 0));
    s.w_dot[0] = Matrix::zeros(3, 2);
    s.x_dot = vec![0.0; 2];
    for z in &mut s.z_dot {
        z.fill(0.0);
    }
    let l = arch.loss.value(&s.z[1], &s.y).unwrap();
    let b = lagrangian_boundary(&s, &arch, CoefficientMode::ChainRule).unwrap();
    assert_eq!(b.value, -l);
    s.y = s.z[1].clone();
    let b = lagrangian_boundary(&s, &arch, CoefficientMode::AsPrinted).unwrap();
    assert_eq!(b.value, 0.0);
}

#[test]
fn bulk_zero_without_velocities() {
    let arch = Architecture::new(vec![2, 3, 3, 1], ActivationKind::Relu, LossKind::Hinge).unwrap();
    let mut s = BbdState::random(&arch, &mut rng::stream(6, 0));
    for w in &mut s.w_dot {
        w.as_mut_slice().fill(0.0);
    }
    for z in &mut s.z_dot {
        z.fill(0.0);
    }
    assert_eq!(
        lagrangian_bulk(&s, &arch, CoefficientMode::AsPrinted)
            .unwrap()
            .value,
        0.0
    );
}

#[test]
fn hundred_trial_audit() {
    let rep = audit_decomposition(&AuditConfig::default(), CoefficientMode::ChainRule).unwrap();
    assert_eq!(rep.trials.len(), 100);
    assert!(
        rep.max_mismatch_chain_rule <= 1e-10,
        "{}",
        rep.max_mismatch_chain_rule
    );
    assert!(rep.max_mismatch_as_printed > 1e-10);
    assert_eq!(rep.shipped_mode, Some(CoefficientMode::ChainRule));
    let pairs: std::collections::BTreeSet<_> = rep
        .trials
        .iter()
        .map(|t| (t.activation.name(), t.loss.name()))
        .collect();
    assert_eq!(pairs.len(), 20);
    let json = serde_json::to_string(&rep).unwrap();
    assert!(json.contains("\"shipped_mode\":\"chain-rule\""));
}

fn arch_strategy() -> impl Strategy<Value = (Architecture, u64)> {
    (
        prop::collection::vec(1usize..=8, 2..=7),
        0usize..5,
        0usize..4,
        any::<u64>(),
    )
        .prop_map(|(mut widths, a, l, seed)| {
            let loss = LossKind::ALL[l];
            if loss == LossKind::Hinge {
                *widths.last_mut().unwrap() = 1;
            }
            (
                Architecture::new(widths, ActivationKind::ALL[a], loss).unwrap(),
                seed,
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bias_round_trip((arch, seed) in arch_strategy()) {
        let mut r = rng::stream(seed, 0);
        let p = ParamState::random(&arch, &mut r);
        let x = rng::normal_vec(&mut r, arch.input_width(), 1.0);
        let z = forward(&p, &x, &arch).unwrap().z;
        let b = bias_from_neurons(&p.w, &z, &x, &arch).unwrap();
        prop_assert!(max_abs(&b, &p.b) <= 1e-12);
    }

    #[test]
    fn decomposition_identity((arch, seed) in arch_strategy()) {
        let mut r = rng::stream(seed, 1);
        let p = ParamState::random_with_velocities(&arch, &mut r);
        let x = rng::normal_vec(&mut r, arch.input_width(), 1.0);
        let xd = rng::normal_vec(&mut r, arch.input_width(), 1.0);
        let y = random_target(&arch, &mut r);
        let rep = decompose(&p, &x, &xd, &y, &arch, CoefficientMode::ChainRule).unwrap();
        prop_assert!(rep.relative_mismatch() <= 1e-10);
    }
}
