//! Drive-signal generators for current-driven and voltage-driven runs.
//!
//! All waveforms are evaluated analytically at arbitrary `t`; there is no
//! sample-table interpolation, so integrator order checks stay clean.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum WaveformError {
    #[error("closed-form charge integral requires phase = 0 (got {0}); integrate numerically instead")]
    UnsupportedPhase(f64),
    #[error("waveform parameter `{field}` = {value} violates requirement: {requirement}")]
    InvalidParam {
        field: &'static str,
        value: f64,
        requirement: &'static str,
    },
}

fn require(ok: bool, field: &'static str, value: f64, requirement: &'static str) -> Result<(), WaveformError> {
    if ok {
        Ok(())
    } else {
        Err(WaveformError::InvalidParam { field, value, requirement })
    }
}

/// Sinusoidal current source I(t) = i0·sin(ωt + phase).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidCurrent {
    /// Amplitude (A), non-negative.
    pub i0: f64,
    /// Angular frequency (rad/s).
    pub omega: f64,
    /// Phase offset (rad).
    pub phase: f64,
}

impl SinusoidCurrent {
    pub fn new(i0: f64, omega: f64, phase: f64) -> Result<Self, WaveformError> {
        require(i0 >= 0.0 && i0.is_finite(), "i0", i0, "i0 >= 0")?;
        require(omega > 0.0 && omega.is_finite(), "omega", omega, "omega > 0")?;
        require(phase.is_finite(), "phase", phase, "phase finite")?;
        Ok(Self { i0, omega, phase })
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega
    }
}

/// Current at time `t`.
pub fn eval_current(w: &SinusoidCurrent, t: f64) -> f64 {
    w.i0 * (w.omega * t + w.phase).sin()
}

/// Closed-form net charge from t = 0 with q(0) = 0:
/// q(t) = (i0/ω)(1 − cos ωt). Non-negative for all t.
///
/// Only the phase-0 case has this form; anything else must go through the
/// integrator.
pub fn charge_integral(w: &SinusoidCurrent, t: f64) -> Result<f64, WaveformError> {
    if w.phase != 0.0 {
        return Err(WaveformError::UnsupportedPhase(w.phase));
    }
    Ok(w.i0 / w.omega * (1.0 - (w.omega * t).cos()))
}

/// Single triangular voltage pulse: linear rise over `t_rise` to `v_peak`,
/// linear fall over `t_fall` back to zero, zero before `t_start` and zero
/// forever after the fall (the zero-hold tail lets a series capacitor fully
/// discharge).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangularVoltagePulse {
    /// Peak voltage (V).
    pub v_peak: f64,
    /// Rise duration (s).
    pub t_rise: f64,
    /// Fall duration (s).
    pub t_fall: f64,
    /// Pulse onset (s).
    pub t_start: f64,
}

impl TriangularVoltagePulse {
    pub fn new(v_peak: f64, t_rise: f64, t_fall: f64, t_start: f64) -> Result<Self, WaveformError> {
        require(v_peak.is_finite(), "v_peak", v_peak, "v_peak finite")?;
        require(t_rise > 0.0 && t_rise.is_finite(), "t_rise", t_rise, "t_rise > 0")?;
        require(t_fall > 0.0 && t_fall.is_finite(), "t_fall", t_fall, "t_fall > 0")?;
        require(t_start >= 0.0 && t_start.is_finite(), "t_start", t_start, "t_start >= 0")?;
        Ok(Self { v_peak, t_rise, t_fall, t_start })
    }

    /// Time at which the pulse has fully returned to zero.
    pub fn t_end(&self) -> f64 {
        self.t_start + self.t_rise + self.t_fall
    }
}

/// Pulse voltage at time `t`; continuous everywhere.
pub fn eval_voltage(w: &TriangularVoltagePulse, t: f64) -> f64 {
    let x = t - w.t_start;
    if x <= 0.0 {
        0.0
    } else if x < w.t_rise {
        w.v_peak * x / w.t_rise
    } else if x < w.t_rise + w.t_fall {
        w.v_peak * (1.0 - (x - w.t_rise) / w.t_fall)
    } else {
        0.0
    }
}

/// One piece of a composite waveform, evaluated on local time in
/// [0, duration).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    /// Sinusoidal section, local phase starting at the segment boundary.
    Sinusoid(SinusoidCurrent),
    /// Triangular pulse placed inside the segment (t_start is local).
    Triangle(TriangularVoltagePulse),
    /// Held at zero.
    Zero,
}

/// Ordered piecewise waveform; evaluation maps global time onto the segment
/// containing it and holds zero past the final segment.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformSegmentList {
    segments: Vec<(Segment, f64)>,
}

impl WaveformSegmentList {
    pub fn new(segments: Vec<(Segment, f64)>) -> Result<Self, WaveformError> {
        let mut total = 0.0;
        for (_, d) in &segments {
            require(*d > 0.0 && d.is_finite(), "duration", *d, "segment duration > 0")?;
            total += d;
        }
        require(total.is_finite(), "total_duration", total, "total duration finite")?;
        Ok(Self { segments })
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|(_, d)| d).sum()
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let mut start = 0.0;
        for (seg, dur) in &self.segments {
            if t < start + dur {
                let local = t - start;
                return match seg {
                    Segment::Sinusoid(w) => eval_current(w, local),
                    Segment::Triangle(w) => eval_voltage(w, local),
                    Segment::Zero => 0.0,
                };
            }
            start += dur;
        }
        0.0
    }
}
