//! Post-processing of simulation traces: per-period hysteresis loops, the
//! origin-pinch check, the magnetization floor, voltage peak timing, and
//! trace-against-trace comparison.

use serde::Serialize;
use thiserror::Error;

use crate::simulator::SimulationTrace;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("trace covers less than one full drive period ({crossings} upward zero crossings found)")]
    InsufficientData { crossings: usize },
    #[error("no voltage peaks found (flat trace?)")]
    NoPeaks,
    #[error("traces are on different sampling grids: {reason}")]
    GridMismatch { reason: String },
    #[error("unknown trace column `{0}`")]
    UnknownColumn(String),
}

// ---------------------------------------------------------------------------
// Hysteresis loop extraction
// ---------------------------------------------------------------------------

/// Horizontal axis of an extracted loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoopAxis {
    /// Applied field H = scale·I. The field-per-current scale is the
    /// hysteron's k_h where defined and 1 otherwise (loop shapes do not
    /// depend on it, only the axis units do).
    FieldH { scale: f64 },
    Current,
    Charge,
}

impl LoopAxis {
    fn label(&self) -> &'static str {
        match self {
            LoopAxis::FieldH { .. } => "H",
            LoopAxis::Current => "I",
            LoopAxis::Charge => "q",
        }
    }
}

/// Vertical axis of an extracted loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopValue {
    Magnetization,
    Voltage,
}

impl LoopValue {
    fn label(&self) -> &'static str {
        match self {
            LoopValue::Magnetization => "m",
            LoopValue::Voltage => "V_device",
        }
    }
}

/// One drive period's worth of (x, y) points.
#[derive(Debug, Clone, PartialEq)]
pub struct Loop {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Per-period parametric loops split at upward zero crossings of the drive
/// current.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopExtraction {
    pub loops: Vec<Loop>,
    pub x_label: &'static str,
    pub y_label: &'static str,
    /// Set when the trace carries no drive at all (constant current): the
    /// single degenerate "loop" is just the operating point.
    pub degenerate: bool,
}

/// Indices k where I crosses zero upward between samples k-1 and k.
fn upward_crossings(i: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    for k in 1..i.len() {
        if i[k - 1] <= 0.0 && i[k] > 0.0 {
            out.push(k);
        }
    }
    out
}

/// Split a trace into per-period loops on the chosen axes.
pub fn extract_loops(
    trace: &SimulationTrace,
    x: LoopAxis,
    y: LoopValue,
) -> Result<LoopExtraction, AnalysisError> {
    let x_of = |k: usize| match x {
        LoopAxis::FieldH { scale } => scale * trace.i[k],
        LoopAxis::Current => trace.i[k],
        LoopAxis::Charge => trace.q[k],
    };
    let y_of = |k: usize| match y {
        LoopValue::Magnetization => trace.m[k],
        LoopValue::Voltage => trace.v_device[k],
    };

    let constant = trace.i.windows(2).all(|w| w[0] == w[1]);
    if constant {
        return Ok(LoopExtraction {
            loops: vec![Loop { x: vec![x_of(0)], y: vec![y_of(0)] }],
            x_label: x.label(),
            y_label: y.label(),
            degenerate: true,
        });
    }

    let n = trace.len();
    let mut bounds = upward_crossings(&trace.i);
    // A drive starting exactly at I = 0 going positive begins its first
    // period at sample 0.
    if bounds.first() == Some(&1) && trace.i[0] == 0.0 {
        bounds[0] = 0;
    }
    // Close the trailing period: a trace of exactly N periods ends just
    // before the (N+1)-th upward crossing would land.
    if let Some(&last) = bounds.last() {
        let close = if bounds.len() >= 2 {
            let mean = (bounds[bounds.len() - 1] - bounds[0]) as f64 / (bounds.len() - 1) as f64;
            (n - 1 - last) as f64 >= 0.9 * mean
        } else {
            // Single crossing: accept only if the negative lobe completed
            // and the drive came back to (nearly) zero.
            let i_scale = trace.i.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
            let down_after = (last + 1..n).any(|k| trace.i[k - 1] > 0.0 && trace.i[k] <= 0.0);
            down_after && trace.i[n - 1].abs() <= 0.05 * i_scale
        };
        if close {
            bounds.push(n);
        }
    }
    if bounds.len() < 2 {
        return Err(AnalysisError::InsufficientData { crossings: bounds.len() });
    }

    let mut loops = Vec::with_capacity(bounds.len() - 1);
    for w in bounds.windows(2) {
        let (a, b) = (w[0], w[1]);
        loops.push(Loop {
            x: (a..b).map(x_of).collect(),
            y: (a..b).map(y_of).collect(),
        });
    }
    Ok(LoopExtraction {
        loops,
        x_label: x.label(),
        y_label: y.label(),
        degenerate: false,
    })
}

// ---------------------------------------------------------------------------
// Pinch check
// ---------------------------------------------------------------------------

/// Worst sample found by [`pinch_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PinchOffender {
    pub index: usize,
    pub t: f64,
    pub i: f64,
    pub v: f64,
}

/// True iff every sample with |I| < `tol_i` also has |V| < `tol_v`; the
/// worst offender (largest |V| at small |I|) comes back either way.
pub fn pinch_check(
    trace: &SimulationTrace,
    tol_i: f64,
    tol_v: f64,
) -> (bool, Option<PinchOffender>) {
    let mut worst: Option<PinchOffender> = None;
    for k in 0..trace.len() {
        if trace.i[k].abs() < tol_i {
            let v = trace.v_device[k].abs();
            if worst.is_none_or(|w| v > w.v.abs()) {
                worst = Some(PinchOffender {
                    index: k,
                    t: trace.t[k],
                    i: trace.i[k],
                    v: trace.v_device[k],
                });
            }
        }
    }
    let pinched = worst.is_none_or(|w| w.v.abs() < tol_v);
    (pinched, worst)
}

// ---------------------------------------------------------------------------
// Magnetization floor
// ---------------------------------------------------------------------------

/// Absolute slack below m(0) tolerated before a sample counts as a
/// violation; far below integrator error at mandated step sizes.
pub const FLOOR_TOLERANCE: f64 = 1e-9;

/// Minimum magnetization over the trace and the first sample (if any) that
/// dropped below m(0) by more than [`FLOOR_TOLERANCE`].
pub fn magnetization_floor(trace: &SimulationTrace) -> (f64, Option<usize>) {
    let m0 = trace.m[0];
    let mut m_min = f64::INFINITY;
    let mut violation = None;
    for (k, &m) in trace.m.iter().enumerate() {
        m_min = m_min.min(m);
        if violation.is_none() && m < m0 - FLOOR_TOLERANCE {
            violation = Some(k);
        }
    }
    (m_min, violation)
}

// ---------------------------------------------------------------------------
// Voltage peak timing
// ---------------------------------------------------------------------------

/// A refined voltage extremum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub t: f64,
    pub v: f64,
    /// +1 for a positive peak (local max above zero), -1 for a negative one.
    pub sign: i8,
}

/// Peak locations and the separation between opposite-sign neighbors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakReport {
    pub peaks: Vec<Peak>,
    /// Drive period estimated from upward zero crossings of I (s).
    pub period: f64,
    /// Mean fraction of a period from each positive peak to the next
    /// negative peak. A plain resistor under sinusoidal drive gives 0.5.
    #[serde(rename = "dt_over_T")]
    pub dt_over_t: f64,
}

/// Parabolic refinement through three equidistant samples; returns the
/// sub-sample offset in [-1, 1] and the interpolated extremum value.
fn refine_parabola(y0: f64, y1: f64, y2: f64) -> (f64, f64) {
    let a = 0.5 * (y0 + y2) - y1;
    let b = 0.5 * (y2 - y0);
    if a.abs() < 1e-300 {
        return (0.0, y1);
    }
    let delta = (-b / (2.0 * a)).clamp(-1.0, 1.0);
    (delta, y1 - b * b / (4.0 * a))
}

/// Locate voltage extrema by a 3-point stencil with parabolic refinement and
/// report the positive-to-negative peak separation as a fraction of the
/// drive period. Needs at least two periods of steady drive.
pub fn peak_timing(trace: &SimulationTrace) -> Result<PeakReport, AnalysisError> {
    let v = &trace.v_device;
    let n = v.len();
    if n < 3 {
        return Err(AnalysisError::NoPeaks);
    }

    let v_scale = v.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    if v_scale == 0.0 {
        return Err(AnalysisError::NoPeaks);
    }
    // Ignore ripples far below the trace's own scale.
    let significance = 1e-6 * v_scale;

    let mut peaks = Vec::new();
    for k in 1..n - 1 {
        let is_max = v[k] > v[k - 1] && v[k] >= v[k + 1] && v[k] > significance;
        let is_min = v[k] < v[k - 1] && v[k] <= v[k + 1] && v[k] < -significance;
        if !(is_max || is_min) {
            continue;
        }
        let dt = trace.t[k + 1] - trace.t[k];
        let (delta, v_ref) = refine_parabola(v[k - 1], v[k], v[k + 1]);
        peaks.push(Peak {
            t: trace.t[k] + delta * dt,
            v: v_ref,
            sign: if is_max { 1 } else { -1 },
        });
    }
    if peaks.is_empty() {
        return Err(AnalysisError::NoPeaks);
    }

    let crossings = upward_crossings(&trace.i);
    if crossings.len() < 2 {
        return Err(AnalysisError::InsufficientData { crossings: crossings.len() });
    }
    let period =
        (trace.t[*crossings.last().unwrap()] - trace.t[crossings[0]]) / (crossings.len() - 1) as f64;

    // Pair each positive peak with the next negative one.
    let mut seps = Vec::new();
    for (idx, p) in peaks.iter().enumerate() {
        if p.sign != 1 {
            continue;
        }
        if let Some(q) = peaks[idx + 1..].iter().find(|q| q.sign == -1) {
            seps.push((q.t - p.t) / period);
        }
    }
    if seps.is_empty() {
        return Err(AnalysisError::NoPeaks);
    }
    let dt_over_t = seps.iter().sum::<f64>() / seps.len() as f64;

    Ok(PeakReport { peaks, period, dt_over_t })
}

// ---------------------------------------------------------------------------
// Trace comparison
// ---------------------------------------------------------------------------

/// Per-column deviation between two traces on the same grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnDeviation {
    pub column: String,
    pub max_abs: f64,
    pub l2: f64,
}

/// Compare selected columns of two traces sample-by-sample.
pub fn compare_traces(
    a: &SimulationTrace,
    b: &SimulationTrace,
    columns: &[&str],
    grid_tol: f64,
) -> Result<Vec<ColumnDeviation>, AnalysisError> {
    if a.len() != b.len() {
        return Err(AnalysisError::GridMismatch {
            reason: format!("{} vs {} samples", a.len(), b.len()),
        });
    }
    for k in 0..a.len() {
        if (a.t[k] - b.t[k]).abs() > grid_tol {
            return Err(AnalysisError::GridMismatch {
                reason: format!("t[{k}] differs: {} vs {}", a.t[k], b.t[k]),
            });
        }
    }
    let mut out = Vec::with_capacity(columns.len());
    for &name in columns {
        let ca = a.column(name).ok_or_else(|| AnalysisError::UnknownColumn(name.into()))?;
        let cb = b.column(name).ok_or_else(|| AnalysisError::UnknownColumn(name.into()))?;
        let mut max_abs = 0.0_f64;
        let mut sum_sq = 0.0_f64;
        for (x, y) in ca.iter().zip(cb) {
            let d = (x - y).abs();
            max_abs = max_abs.max(d);
            sum_sq += d * d;
        }
        out.push(ColumnDeviation { column: name.into(), max_abs, l2: sum_sq.sqrt() });
    }
    Ok(out)
}
