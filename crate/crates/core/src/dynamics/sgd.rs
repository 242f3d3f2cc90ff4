use rand::Rng as _;

use super::{
    damped_integrate, gradient_flow_integrate, lagrangian_original, DynamicsConfig, Regime,
    SampleSchedule, Trace,
};
use crate::net::{forward, loss_and_param_grads, Architecture, ParamState, Sample};
use crate::rng;
use crate::{Error, Result};

/// One stochastic gradient step `W <- W - η ∂ℓ/∂W`, `b <- b - η ∂ℓ/∂b`.
///
/// The returned velocities are the parameter change of this step (one
/// discrete time unit), so discrete traces carry the same Lagrangian
/// bookkeeping as continuous ones.
pub fn sgd_step(
    params: &ParamState,
    sample: &Sample,
    eta: f64,
    arch: &Architecture,
) -> Result<ParamState> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::validation("eta", format!("must be > 0, got {eta}")));
    }
    let (_, g) = loss_and_param_grads(params, sample, arch)?;
    let mut next = params.clone();
    for m in 0..arch.depth() {
        let w = next.w[m].as_mut_slice();
        let wd = next.w_dot[m].as_mut_slice();
        for ((wi, di), gi) in w.iter_mut().zip(wd.iter_mut()).zip(g.w[m].as_slice()) {
            let old = *wi;
            *wi = old - eta * gi;
            *di = *wi - old;
        }
        for ((bi, di), gi) in next.b[m]
            .iter_mut()
            .zip(next.b_dot[m].iter_mut())
            .zip(&g.b[m])
        {
            let old = *bi;
            *bi = old - eta * gi;
            *di = *bi - old;
        }
    }
    Ok(next)
}

/// Mean loss over a dataset.
pub fn dataset_loss(params: &ParamState, dataset: &[Sample], arch: &Architecture) -> Result<f64> {
    let mut s = 0.0;
    for sample in dataset {
        let n = forward(params, &sample.x, arch)?;
        s += arch.loss.value(n.output(), &sample.y)?;
    }
    Ok(s / dataset.len() as f64)
}

/// Discrete SGD for `t_end / dt` steps, drawing one sample per step uniformly
/// from `dataset` with the config seed. Time stamps are `k dt`.
///
/// `active_sample[k]` is the dataset index drawn for the step leaving time
/// `k dt` (the last record repeats the final draw).
pub fn run_sgd(
    params: &ParamState,
    dataset: &[Sample],
    config: &DynamicsConfig,
    arch: &Architecture,
) -> Result<Trace> {
    config.validate()?;
    params.check_shapes(arch)?;
    if dataset.is_empty() {
        return Err(Error::config("dataset is empty"));
    }
    dataset.iter().try_for_each(|s| s.validate(arch))?;
    let steps = (config.t_end / config.dt - 1e-9).ceil().max(1.0) as usize;
    let mut r = rng::stream(config.seed, 0);
    let draws: Vec<usize> = (0..steps).map(|_| r.gen_range(0..dataset.len())).collect();

    let mut trace = Trace::default();
    let mut state = params.clone();
    for k in 0..=steps {
        let idx = draws[k.min(steps - 1)];
        if k % config.record_every == 0 || k == steps {
            let lag = lagrangian_original(&state, &dataset[idx], arch)?;
            trace.times.push(k as f64 * config.dt);
            trace.losses.push(-lag.loss_term);
            trace.lagrangians.push(lag);
            trace.active_sample.push(idx);
            trace.states.push(state.clone());
        }
        if k == steps {
            break;
        }
        state = sgd_step(&state, &dataset[idx], config.eta, arch)?;
        if !state.is_finite() {
            return Err(Error::NonFinite {
                time: (k + 1) as f64 * config.dt,
            });
        }
    }
    Ok(trace)
}

/// Runs the configured regime. Continuous regimes present random draws from
/// `dataset`, each held for its `hold_duration`.
pub fn run(
    params: &ParamState,
    dataset: &[Sample],
    config: &DynamicsConfig,
    arch: &Architecture,
) -> Result<(Trace, SampleSchedule)> {
    config.validate()?;
    match config.regime {
        Regime::SgdDiscrete => {
            let trace = run_sgd(params, dataset, config, arch)?;
            Ok((trace, SampleSchedule::new(dataset.to_vec())?))
        }
        Regime::GradientFlow | Regime::DampedSecondOrder => {
            let mut r = rng::stream(config.seed, 0);
            let schedule = SampleSchedule::random_covering(dataset, config.t_end, &mut r)?;
            let trace = if config.regime == Regime::GradientFlow {
                gradient_flow_integrate(params, &schedule, config, arch)?
            } else {
                damped_integrate(params, &schedule, config, arch)?
            };
            Ok((trace, schedule))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Integrator;
    use crate::net::{ActivationKind, LossKind, Matrix};

    #[test]
    fn linear_net_closed_form_step() {
        let arch = Architecture::new(vec![1, 1], ActivationKind::Identity, LossKind::Mse).unwrap();
        let mut p = ParamState::zeros(&arch);
        p.w[0] = Matrix::from_rows(&[vec![1.0]]);
        let s = Sample::new(vec![1.0], vec![0.0]);
        let next = sgd_step(&p, &s, 0.1, &arch).unwrap();
        assert!((next.w[0].get(0, 0) - 0.8).abs() < 1e-15);
        assert!((next.b[0][0] + 0.2).abs() < 1e-15);
        assert!((next.w_dot[0].get(0, 0) + 0.2).abs() < 1e-15);
    }

    #[test]
    fn fixed_point_at_target() {
        let arch = Architecture::new(vec![2, 2], ActivationKind::Tanh, LossKind::Mse).unwrap();
        let p = ParamState::random(&arch, &mut rng::stream(4, 0));
        let x = vec![0.3, -0.2];
        let y = forward(&p, &x, &arch).unwrap().output().to_vec();
        let next = sgd_step(&p, &Sample::new(x, y), 0.5, &arch).unwrap();
        assert_eq!(next.positions(), p.positions());
    }

    #[test]
    fn sgd_run_is_reproducible() {
        let arch = Architecture::new(vec![2, 3, 1], ActivationKind::Tanh, LossKind::Mse).unwrap();
        let p = ParamState::random(&arch, &mut rng::stream(0, 1));
        let data: Vec<Sample> = (0..4)
            .map(|i| Sample::new(vec![i as f64 * 0.3, 1.0], vec![0.1 * i as f64]))
            .collect();
        let cfg = DynamicsConfig {
            regime: Regime::SgdDiscrete,
            integrator: Integrator::ExplicitEuler,
            dt: 1.0,
            t_end: 50.0,
            ..Default::default()
        };
        let a = run_sgd(&p, &data, &cfg, &arch).unwrap();
        let b = run_sgd(&p, &data, &cfg, &arch).unwrap();
        assert_eq!(a.states, b.states);
        assert_eq!(a.len(), 51);
    }
}
