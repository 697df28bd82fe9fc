//! Current-driven transient runs: the source fixes I(t), the device follows.

use crate::models::{
    flux_of, hysteron_rate, hysteron_voltage, DeviceModel,
};
use crate::waveforms::{eval_current, SinusoidCurrent};

use super::rk4::rk4_step;
use super::{SimConfig, SimError, SimulationTrace};

/// Minimum steps per drive period before the accuracy guard trips.
const STEPS_PER_PERIOD_GUARD: f64 = 1000.0;
/// Steps per switching time constant required for hysteron runs.
const STEPS_PER_TAU: f64 = 100.0;

pub(super) fn check_drive_guard(cfg: &SimConfig, drive: &SinusoidCurrent) -> Result<(), SimError> {
    let limit = drive.period() / STEPS_PER_PERIOD_GUARD;
    if cfg.dt > limit && !cfg.relax_dt_guard {
        return Err(SimError::StepTooCoarse {
            dt: cfg.dt,
            limit,
            limit_kind: "drive period/1000",
        });
    }
    Ok(())
}

pub(super) fn check_hysteron_guard(cfg: &SimConfig, tau: f64) -> Result<(), SimError> {
    // Threshold crossings are smeared over one step; keeping dt well under
    // tau bounds that error. Not overridable.
    let limit = tau / STEPS_PER_TAU;
    if cfg.dt > limit {
        return Err(SimError::StepTooCoarse {
            dt: cfg.dt,
            limit,
            limit_kind: "hysteron tau/100",
        });
    }
    Ok(())
}

/// Integrate dq/dt = I(t) (plus dm/dt for the hysteron) under a sinusoidal
/// current drive, sampling device voltage, magnetization and flux along the
/// way. `q_init` is the starting net charge.
pub fn simulate_current_driven(
    device: &DeviceModel,
    drive: &SinusoidCurrent,
    cfg: &SimConfig,
    q_init: f64,
) -> Result<SimulationTrace, SimError> {
    cfg.validate()?;
    check_drive_guard(cfg, drive)?;
    if let DeviceModel::Hysteron(p) = device {
        check_hysteron_guard(cfg, p.tau)?;
    }

    let n_steps = cfg.n_steps();
    let n_samples = n_steps / cfg.record_stride + 2;
    let mut trace = SimulationTrace::with_capacity(n_samples);

    match device {
        DeviceModel::PhiTanh(_) | DeviceModel::Ideal(_) => {
            let mut y = [q_init];
            let mut rhs = |t: f64, _y: &[f64; 1]| [eval_current(drive, t)];
            record_resistive(&mut trace, device, drive, 0.0, y[0]);
            for k in 0..n_steps {
                let t = k as f64 * cfg.dt;
                y = rk4_step(&mut rhs, t, cfg.dt, &y);
                if (k + 1) % cfg.record_stride == 0 || k + 1 == n_steps {
                    record_resistive(&mut trace, device, drive, (k + 1) as f64 * cfg.dt, y[0]);
                }
            }
        }
        DeviceModel::Hysteron(p) => {
            let mut y = [q_init, p.m_init];
            let mut rhs = |t: f64, y: &[f64; 2]| {
                let i = eval_current(drive, t);
                [i, hysteron_rate(y[1], p.k_h * i, p)]
            };
            record_hysteron(&mut trace, p, drive, 0.0, y[0], y[1]);
            for k in 0..n_steps {
                let t = k as f64 * cfg.dt;
                y = rk4_step(&mut rhs, t, cfg.dt, &y);
                if (k + 1) % cfg.record_stride == 0 || k + 1 == n_steps {
                    record_hysteron(&mut trace, p, drive, (k + 1) as f64 * cfg.dt, y[0], y[1]);
                }
            }
        }
    }

    trace.meta.steps = n_steps;
    Ok(trace)
}

fn record_resistive(
    trace: &mut SimulationTrace,
    device: &DeviceModel,
    drive: &SinusoidCurrent,
    t: f64,
    q: f64,
) {
    let i = eval_current(drive, t);
    let state = device.state_for_charge(q);
    let v = device.resistance(&state) * i;
    trace.push(t, i, v, state.q, state.m, state.phi, 0.0);
}

fn record_hysteron(
    trace: &mut SimulationTrace,
    p: &crate::models::ThresholdHysteronParams,
    drive: &SinusoidCurrent,
    t: f64,
    q: f64,
    m: f64,
) {
    let i = eval_current(drive, t);
    let rate = hysteron_rate(m, p.k_h * i, p);
    let v = hysteron_voltage(rate, i, p);
    trace.push(t, i, v, q, m, flux_of(m, p.k_phi), 0.0);
}
