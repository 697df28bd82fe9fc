//! Fixed-step transient integration of device models, both current-driven
//! and inside the series capacitor test circuit, plus the state-return
//! ideality test built on top of the circuit runs.

mod circuit;
mod driven;
mod rk4;

pub use circuit::{run_memristor_test, simulate_test_circuit, TestCircuit, TestOutcome, TestTolerances, TestVerdict};
pub use driven::simulate_current_driven;
pub use rk4::rk4_step;

use serde::Serialize;
use thiserror::Error;

/// Resistances this small make the series-circuit ODE effectively singular.
/// The tanh-map device reaches this regime in deep saturation; we refuse to
/// integrate through it rather than clamp.
pub const MIN_CIRCUIT_RESISTANCE: f64 = 1e-15;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("config field `{field}` = {value} violates requirement: {requirement}")]
    InvalidConfig {
        field: &'static str,
        value: f64,
        requirement: &'static str,
    },
    #[error("dt = {dt} too coarse: {limit_kind} requires dt <= {limit} (set sim.relax_dt_guard to override the drive-period guard)")]
    StepTooCoarse {
        dt: f64,
        limit: f64,
        limit_kind: &'static str,
    },
    #[error("device resistance {r} Ω fell below {min} Ω at t = {t}; the series circuit is singular there")]
    ResistanceUnderflow { r: f64, min: f64, t: f64 },
    #[error("algebraic loop fell back to lagged-field stepping on {lagged} of {steps} steps (> 1%)")]
    FixedPointNonConvergence { lagged: usize, steps: usize },
}

/// Fixed-step integration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Integration step (s).
    pub dt: f64,
    /// Total simulated duration (s).
    pub t_end: f64,
    /// Keep one sample every this many steps (the initial and final states
    /// are always kept).
    pub record_stride: usize,
    /// Relative tolerance for the hysteron circuit's algebraic loop.
    pub algebraic_tol: f64,
    /// Iteration cap for that loop.
    pub max_fp_iters: usize,
    /// Skip the drive-period accuracy guard.
    pub relax_dt_guard: bool,
}

impl SimConfig {
    pub fn new(dt: f64, t_end: f64) -> Result<Self, SimError> {
        let cfg = Self {
            dt,
            t_end,
            record_stride: 1,
            algebraic_tol: 1e-10,
            max_fp_iters: 50,
            relax_dt_guard: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let req = |ok: bool, field: &'static str, value: f64, requirement: &'static str| {
            if ok {
                Ok(())
            } else {
                Err(SimError::InvalidConfig { field, value, requirement })
            }
        };
        req(self.dt > 0.0 && self.dt.is_finite(), "dt", self.dt, "dt > 0")?;
        req(self.t_end > self.dt, "t_end", self.t_end, "t_end > dt")?;
        req(self.algebraic_tol > 0.0, "algebraic_tol", self.algebraic_tol, "algebraic_tol > 0")?;
        req(self.max_fp_iters >= 1, "max_fp_iters", self.max_fp_iters as f64, "max_fp_iters >= 1")?;
        req(self.record_stride >= 1, "record_stride", self.record_stride as f64, "record_stride >= 1")?;
        Ok(())
    }

    /// Number of fixed steps covering `t_end`.
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round().max(1.0) as usize
    }
}

/// Diagnostics accumulated over a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct TraceMeta {
    /// Accepted integrator steps.
    pub steps: usize,
    /// Steps on which the algebraic loop was resolved by clamping the
    /// current to the switching threshold (sliding regime).
    pub clamped_steps: usize,
    /// Steps on which the loop fell back to the lagged-field explicit form.
    pub lagged_steps: usize,
}

/// Uniformly sampled run record. Column layout is fixed:
/// t, I, V_device, q, m, phi, V_C. Current-driven runs keep V_C at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub t: Vec<f64>,
    pub i: Vec<f64>,
    pub v_device: Vec<f64>,
    pub q: Vec<f64>,
    pub m: Vec<f64>,
    pub phi: Vec<f64>,
    pub v_c: Vec<f64>,
    pub meta: TraceMeta,
}

impl SimulationTrace {
    pub(crate) fn with_capacity(n: usize) -> Self {
        Self {
            t: Vec::with_capacity(n),
            i: Vec::with_capacity(n),
            v_device: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            m: Vec::with_capacity(n),
            phi: Vec::with_capacity(n),
            v_c: Vec::with_capacity(n),
            meta: TraceMeta::default(),
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn push(&mut self, t: f64, i: f64, v: f64, q: f64, m: f64, phi: f64, v_c: f64) {
        self.t.push(t);
        self.i.push(i);
        self.v_device.push(v);
        self.q.push(q);
        self.m.push(m);
        self.phi.push(phi);
        self.v_c.push(v_c);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Named column access for analysis and serialization.
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        match name {
            "t" => Some(&self.t),
            "I" => Some(&self.i),
            "V_device" => Some(&self.v_device),
            "q" => Some(&self.q),
            "m" => Some(&self.m),
            "phi" => Some(&self.phi),
            "V_C" => Some(&self.v_c),
            _ => None,
        }
    }

    pub const COLUMN_NAMES: [&'static str; 7] = ["t", "I", "V_device", "q", "m", "phi", "V_C"];
}
