use super::{
    lagrangian_original, DynamicsConfig, GradientField, Integrator, NetworkPotential, Regime,
    SampleSchedule, Trace,
};
use crate::net::{Architecture, ParamState};
use crate::{Error, Result};

/// Time stamps for a run: multiples of `dt` up to `t_end`, with every switch
/// time inserted so that no step crosses a switch. A grid point within
/// `1e-9 dt` of a switch is moved onto the switch; two switches that close
/// together leave no representable step and are reported as underflow.
pub fn time_grid(dt: f64, t_end: f64, switches: &[f64]) -> Result<Vec<f64>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::validation("dt", format!("must be > 0, got {dt}")));
    }
    if t_end / dt > 1e10 {
        return Err(Error::StepUnderflow { time: 0.0 });
    }
    let snap = 1e-9 * dt;
    let mut grid: Vec<(f64, bool)> = Vec::new();
    let mut k: u64 = 0;
    loop {
        let t = k as f64 * dt;
        if t >= t_end - snap {
            break;
        }
        grid.push((t, false));
        k += 1;
    }
    grid.push((t_end, false));
    for &s in switches {
        if s <= 0.0 || s >= t_end {
            continue;
        }
        let idx = grid.partition_point(|&(t, _)| t < s);
        let near = [idx.checked_sub(1), Some(idx)]
            .into_iter()
            .flatten()
            .filter(|&i| i < grid.len() && (grid[i].0 - s).abs() <= snap)
            .collect::<Vec<_>>();
        match near.as_slice() {
            [] => grid.insert(idx, (s, true)),
            [i, ..] => {
                let i = *i;
                if grid[i].1 {
                    return Err(Error::StepUnderflow { time: grid[i].0 });
                }
                // the endpoints stay where they are
                if i != 0 && i != grid.len() - 1 {
                    grid[i] = (s, true);
                }
            }
        }
    }
    let grid: Vec<f64> = grid.into_iter().map(|(t, _)| t).collect();
    for pair in grid.windows(2) {
        let h = pair[1] - pair[0];
        if h.is_nan() || h <= 0.0 || pair[0] + h == pair[0] {
            return Err(Error::StepUnderflow { time: pair[0] });
        }
    }
    Ok(grid)
}

/// Positions, velocities, losses and active sample per recorded time.
#[derive(Debug, Clone, Default)]
pub struct FlatTrace {
    pub times: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    pub losses: Vec<f64>,
    pub active: Vec<usize>,
}

impl FlatTrace {
    fn push(&mut self, t: f64, q: &[f64], v: &[f64], loss: f64, active: usize) {
        self.times.push(t);
        self.positions.push(q.to_vec());
        self.velocities.push(v.to_vec());
        self.losses.push(loss);
        self.active.push(active);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn check_finite(t: f64, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { time: t })
    }
}

fn at_time(e: Error, t: f64) -> Error {
    match e {
        Error::NumericOverflow { .. } => e.context(format!("integrating at t = {t}")),
        other => other,
    }
}

fn should_record(step: usize, last: usize, stride: usize) -> bool {
    step.is_multiple_of(stride) || step == last
}

/// Integrates `q̇ = -η ∂ℓ/∂q` over `grid` with explicit Euler or classical RK4.
/// `active(t)` selects the sample for the step starting at `t`. The recorded
/// velocity is the flow field at the recorded point.
pub fn integrate_flow_flat<F: GradientField>(
    field: &mut F,
    q0: &[f64],
    eta: f64,
    integrator: Integrator,
    grid: &[f64],
    active: impl Fn(f64) -> usize,
    record_every: usize,
) -> Result<FlatTrace> {
    let n = field.dim();
    let mut q = q0.to_vec();
    let mut g = vec![0.0; n];
    let mut f = vec![0.0; n];
    let mut trace = FlatTrace::default();
    let last = grid.len() - 1;

    let flow = |field: &mut F,
                t: f64,
                q: &[f64],
                a: usize,
                g: &mut [f64],
                out: &mut [f64]|
     -> Result<f64> {
        let l = field.loss_grad(q, a, g).map_err(|e| at_time(e, t))?;
        for (o, gi) in out.iter_mut().zip(g.iter()) {
            *o = -(eta * gi);
        }
        Ok(l)
    };

    let (mut k2, mut k3, mut k4, mut tmp) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for step in 0..=last {
        let t = grid[step];
        let a = active(t);
        let loss = flow(field, t, &q, a, &mut g, &mut f)?;
        check_finite(t, &f)?;
        if should_record(step, last, record_every) {
            trace.push(t, &q, &f, loss, a);
        }
        if step == last {
            break;
        }
        let h = grid[step + 1] - t;
        match integrator {
            Integrator::ExplicitEuler => {
                for (qi, fi) in q.iter_mut().zip(&f) {
                    *qi += h * fi;
                }
            }
            Integrator::Rk4 => {
                for i in 0..n {
                    tmp[i] = q[i] + 0.5 * h * f[i];
                }
                flow(field, t, &tmp, a, &mut g, &mut k2)?;
                for i in 0..n {
                    tmp[i] = q[i] + 0.5 * h * k2[i];
                }
                flow(field, t, &tmp, a, &mut g, &mut k3)?;
                for i in 0..n {
                    tmp[i] = q[i] + h * k3[i];
                }
                flow(field, t, &tmp, a, &mut g, &mut k4)?;
                for i in 0..n {
                    q[i] += h / 6.0 * (f[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
            Integrator::VelocityVerletDamped => {
                return Err(Error::validation(
                    "integrator",
                    "velocity-verlet-damped integrates second-order dynamics only",
                ))
            }
        }
        check_finite(grid[step + 1], &q)?;
    }
    Ok(trace)
}

/// Coefficients of the exponential velocity-Verlet step for `x = γh`:
/// `c = e^{-x}`, `φ1 = (1 - c)/x`, `φ2 = (x - 1 + c)/x²`, `ψ = (1 - c - x c)/x²`.
/// Series expansions are used for small `x` to avoid cancellation.
fn exp_coefficients(x: f64) -> (f64, f64, f64, f64) {
    let c = (-x).exp();
    if x < 1e-2 {
        let series = |coeffs: [f64; 7]| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
        let phi1 = series([
            1.0,
            -1.0 / 2.0,
            1.0 / 6.0,
            -1.0 / 24.0,
            1.0 / 120.0,
            -1.0 / 720.0,
            1.0 / 5040.0,
        ]);
        let phi2 = series([
            0.5,
            -1.0 / 6.0,
            1.0 / 24.0,
            -1.0 / 120.0,
            1.0 / 720.0,
            -1.0 / 5040.0,
            1.0 / 40320.0,
        ]);
        let psi = series([
            0.5,
            -1.0 / 3.0,
            1.0 / 8.0,
            -1.0 / 30.0,
            1.0 / 144.0,
            -1.0 / 840.0,
            1.0 / 5760.0,
        ]);
        (c, phi1, phi2, psi)
    } else {
        let em1 = -(-x).exp_m1();
        (c, em1 / x, (x - em1) / (x * x), (em1 - x * c) / (x * x))
    }
}

/// Integrates `q̈ + γ q̇ + ∂ℓ/∂q = 0` with a velocity-Verlet scheme that
/// treats the damping exactly:
///
/// ```text
/// q1 = q0 + h φ1 v0 - h² φ2 g0
/// v1 = c v0 - h (ψ g0 + (φ1 - ψ) g1)
/// ```
///
/// The step is exact for a constant force, reduces to velocity Verlet as
/// `γ -> 0`, and keeps the overdamped mobility `h/γ` when `γh` is large.
/// Second order for smooth forces.
#[allow(clippy::too_many_arguments)]
pub fn integrate_damped_flat<F: GradientField>(
    field: &mut F,
    q0: &[f64],
    v0: &[f64],
    gamma: f64,
    grid: &[f64],
    active: impl Fn(f64) -> usize,
    record_every: usize,
) -> Result<FlatTrace> {
    let n = field.dim();
    let mut q = q0.to_vec();
    let mut v = v0.to_vec();
    let mut g0 = vec![0.0; n];
    let mut g1 = vec![0.0; n];
    let mut trace = FlatTrace::default();
    let last = grid.len() - 1;

    let mut a = active(grid[0]);
    let mut loss = field
        .loss_grad(&q, a, &mut g0)
        .map_err(|e| at_time(e, grid[0]))?;
    for step in 0..=last {
        let t = grid[step];
        let a_now = active(t);
        if a_now != a {
            a = a_now;
            loss = field.loss_grad(&q, a, &mut g0).map_err(|e| at_time(e, t))?;
        }
        check_finite(t, &g0)?;
        if should_record(step, last, record_every) {
            trace.push(t, &q, &v, loss, a);
        }
        if step == last {
            break;
        }
        let h = grid[step + 1] - t;
        let (c, phi1, phi2, psi) = exp_coefficients(gamma * h);
        for i in 0..n {
            q[i] += h * phi1 * v[i] - h * h * phi2 * g0[i];
        }
        loss = field
            .loss_grad(&q, a, &mut g1)
            .map_err(|e| at_time(e, grid[step + 1]))?;
        for i in 0..n {
            v[i] = c * v[i] - h * (psi * g0[i] + (phi1 - psi) * g1[i]);
        }
        std::mem::swap(&mut g0, &mut g1);
        check_finite(grid[step + 1], &q)?;
        check_finite(grid[step + 1], &v)?;
    }
    Ok(trace)
}

fn schedule_grid(schedule: &SampleSchedule, config: &DynamicsConfig) -> Result<Vec<f64>> {
    config.validate()?;
    schedule.check_covers(config.t_end)?;
    time_grid(config.dt, config.t_end, &schedule.switch_times())
}

/// Gradient flow of a network from `params`, using explicit Euler or RK4.
pub fn gradient_flow_integrate(
    params: &ParamState,
    schedule: &SampleSchedule,
    config: &DynamicsConfig,
    arch: &Architecture,
) -> Result<Trace> {
    params.check_shapes(arch)?;
    schedule.validate(arch)?;
    let grid = schedule_grid(schedule, config)?;
    let mut field = NetworkPotential::new(arch, &schedule.samples);
    let flat = integrate_flow_flat(
        &mut field,
        &params.positions(),
        config.eta,
        config.integrator,
        &grid,
        |t| schedule.active_at(t),
        config.record_every,
    )?;
    Trace::from_flat(flat, params, schedule, arch)
}

/// Damped second-order dynamics of a network from `params` (its velocities
/// are the initial velocities).
pub fn damped_integrate(
    params: &ParamState,
    schedule: &SampleSchedule,
    config: &DynamicsConfig,
    arch: &Architecture,
) -> Result<Trace> {
    params.check_shapes(arch)?;
    schedule.validate(arch)?;
    if config.regime != Regime::DampedSecondOrder {
        return Err(Error::validation(
            "regime",
            "damped_integrate needs damped-second-order",
        ));
    }
    let grid = schedule_grid(schedule, config)?;
    let mut field = NetworkPotential::new(arch, &schedule.samples);
    let flat = integrate_damped_flat(
        &mut field,
        &params.positions(),
        &params.velocities(),
        config.gamma(),
        &grid,
        |t| schedule.active_at(t),
        config.record_every,
    )?;
    Trace::from_flat(flat, params, schedule, arch)
}

impl Trace {
    pub(crate) fn from_flat(
        flat: FlatTrace,
        template: &ParamState,
        schedule: &SampleSchedule,
        arch: &Architecture,
    ) -> Result<Trace> {
        let mut trace = Trace::default();
        for k in 0..flat.len() {
            let mut state = template.clone();
            state.set_positions(&flat.positions[k]);
            state.set_velocities(&flat.velocities[k]);
            let lag = lagrangian_original(&state, &schedule.samples[flat.active[k]], arch)?;
            trace.times.push(flat.times[k]);
            trace.losses.push(-lag.loss_term);
            trace.lagrangians.push(lag);
            trace.active_sample.push(flat.active[k]);
            trace.states.push(state);
        }
        Ok(trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::QuadraticPotential;

    #[test]
    fn grid_lands_on_switches() {
        let g = time_grid(0.1, 1.0, &[0.25, 0.5]).unwrap();
        assert!(g.contains(&0.25));
        assert_eq!(g.iter().filter(|&&t| (t - 0.5).abs() < 1e-12).count(), 1);
        assert!(g.contains(&0.5));
        assert_eq!(*g.last().unwrap(), 1.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn grid_is_uniform_without_switches() {
        let g = time_grid(0.1, 1.0, &[]).unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[3], 3.0 * 0.1);
    }

    #[test]
    fn coincident_switches_underflow() {
        let err = time_grid(1.0, 10.0, &[5.5, 5.5 + 1e-12]).unwrap_err();
        assert!(matches!(err, Error::StepUnderflow { .. }));
        assert!(matches!(
            time_grid(1e-12, 1.0, &[]),
            Err(Error::StepUnderflow { .. })
        ));
    }

    #[test]
    fn exp_coefficients_are_continuous_across_the_series_switch() {
        let below = exp_coefficients(1e-2 * (1.0 - 1e-12));
        let above = exp_coefficients(1e-2);
        assert!((below.1 - above.1).abs() < 1e-13);
        assert!((below.2 - above.2).abs() < 1e-12);
        assert!((below.3 - above.3).abs() < 1e-12);
    }

    #[test]
    fn damped_step_is_exact_for_constant_force() {
        // ℓ = q with γ = 2: q̈ + 2q̇ + 1 = 0, q(0)=0, q̇(0)=0
        struct Linear;
        impl GradientField for Linear {
            fn dim(&self) -> usize {
                1
            }
            fn loss_grad(&mut self, q: &[f64], _: usize, g: &mut [f64]) -> Result<f64> {
                g[0] = 1.0;
                Ok(q[0])
            }
        }
        let grid = time_grid(0.5, 3.0, &[]).unwrap();
        let tr = integrate_damped_flat(&mut Linear, &[0.0], &[0.0], 2.0, &grid, |_| 0, 1).unwrap();
        let t: f64 = 3.0;
        let exact_v = -(1.0 - (-2.0 * t).exp()) / 2.0;
        let exact_q = -(t - (1.0 - (-2.0 * t).exp()) / 2.0) / 2.0;
        assert!((tr.positions.last().unwrap()[0] - exact_q).abs() < 1e-14);
        assert!((tr.velocities.last().unwrap()[0] - exact_v).abs() < 1e-14);
    }

    #[test]
    fn flow_on_quadratic_records_every_nth() {
        let mut f = QuadraticPotential {
            stiffness: vec![1.0],
        };
        let grid = time_grid(0.1, 1.0, &[]).unwrap();
        let tr =
            integrate_flow_flat(&mut f, &[1.0], 1.0, Integrator::Rk4, &grid, |_| 0, 3).unwrap();
        assert_eq!(tr.times.len(), 5); // steps 0,3,6,9 and the last
        assert_eq!(*tr.times.last().unwrap(), 1.0);
    }
}
