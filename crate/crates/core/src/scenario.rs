//! Line-oriented scenario files: `section.key = value`, one setting per
//! line, `#` comments. Sections: device, drive, sim, circuit, output.
//! Unknown and duplicate keys are hard errors with line numbers; every
//! numeric value must be finite; units are SI throughout.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::models::{
    DeviceModel, IdealMemristorParams, PhiTanhParams, ThresholdHysteronParams,
};
use crate::simulator::SimConfig;
use crate::waveforms::{SinusoidCurrent, TriangularVoltagePulse};

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("syntax error at line {line}, column {column}: {msg}")]
    Syntax { line: usize, column: usize, msg: String },
    #[error("unknown key `{key}` at line {line}")]
    UnknownKey { line: usize, key: String },
    #[error("duplicate key `{key}` at lines {first_line} and {second_line}")]
    DuplicateKey { key: String, first_line: usize, second_line: usize },
    #[error("missing {0} section")]
    MissingSection(&'static str),
    #[error("missing required key `{key}` ({context})")]
    MissingKey { key: String, context: String },
    #[error("invalid value for `{key}` at line {line}: {msg}")]
    InvalidValue { line: usize, key: String, msg: String },
    #[error("key `{0}` is not a numeric scalar")]
    NonNumericKey(String),
}

/// Which device the scenario instantiates, plus its starting charge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceSpec {
    pub model: DeviceModel,
    pub q_init: f64,
}

/// The drive block: either a current source or a voltage pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriveSpec {
    Sinusoid(SinusoidCurrent),
    Triangle(TriangularVoltagePulse),
}

/// Optional series-capacitor block; required by the memtest command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitSpec {
    pub c: f64,
    pub v_c_init: f64,
}

/// Output naming and CSV decimation.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    /// File-name stem; the scenario file stem is used when absent.
    pub prefix: Option<String>,
    /// Keep every N-th recorded sample when writing CSV.
    pub stride: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { prefix: None, stride: 1 }
    }
}

/// A fully validated scenario document.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub device: DeviceSpec,
    pub drive: DriveSpec,
    pub sim: SimConfig,
    pub circuit: Option<CircuitSpec>,
    pub output: OutputSpec,
}

struct RawEntry {
    line: usize,
    value: String,
}

struct Raw {
    entries: BTreeMap<String, RawEntry>,
}

impl Raw {
    fn take(&mut self, key: &str) -> Option<RawEntry> {
        self.entries.remove(key)
    }

    fn take_f64(&mut self, key: &str) -> Result<Option<(usize, f64)>, ScenarioError> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => {
                let v: f64 = e.value.parse().map_err(|_| ScenarioError::InvalidValue {
                    line: e.line,
                    key: key.into(),
                    msg: format!("`{}` is not a number", e.value),
                })?;
                if !v.is_finite() {
                    return Err(ScenarioError::InvalidValue {
                        line: e.line,
                        key: key.into(),
                        msg: "value must be finite".into(),
                    });
                }
                Ok(Some((e.line, v)))
            }
        }
    }

    fn need_f64(&mut self, key: &str, context: &str) -> Result<(usize, f64), ScenarioError> {
        self.take_f64(key)?.ok_or_else(|| ScenarioError::MissingKey {
            key: key.into(),
            context: context.into(),
        })
    }

    fn take_f64_or(&mut self, key: &str, default: f64) -> Result<f64, ScenarioError> {
        Ok(self.take_f64(key)?.map(|(_, v)| v).unwrap_or(default))
    }

    fn take_usize_or(&mut self, key: &str, default: usize) -> Result<usize, ScenarioError> {
        match self.take(key) {
            None => Ok(default),
            Some(e) => e.value.parse().map_err(|_| ScenarioError::InvalidValue {
                line: e.line,
                key: key.into(),
                msg: format!("`{}` is not a non-negative integer", e.value),
            }),
        }
    }

    fn take_bool_or(&mut self, key: &str, default: bool) -> Result<bool, ScenarioError> {
        match self.take(key) {
            None => Ok(default),
            Some(e) => match e.value.as_str() {
                "true" => Ok(true),
                "false" => Ok(false),
                other => Err(ScenarioError::InvalidValue {
                    line: e.line,
                    key: key.into(),
                    msg: format!("`{other}` is not `true`/`false`"),
                }),
            },
        }
    }
}

fn lex(text: &str) -> Result<Raw, ScenarioError> {
    let mut entries: BTreeMap<String, RawEntry> = BTreeMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let eq = line.find('=').ok_or_else(|| ScenarioError::Syntax {
            line: line_no,
            column: raw_line.len(),
            msg: "expected `section.key = value`".into(),
        })?;
        let key = line[..eq].trim();
        let value = line[eq + 1..].trim();
        if key.is_empty() || value.is_empty() {
            return Err(ScenarioError::Syntax {
                line: line_no,
                column: eq + 1,
                msg: "empty key or value".into(),
            });
        }
        let dot = key.find('.').ok_or_else(|| ScenarioError::Syntax {
            line: line_no,
            column: 1,
            msg: format!("key `{key}` has no section prefix"),
        })?;
        let ok_chars = key
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '.');
        if dot == 0 || dot + 1 == key.len() || !ok_chars {
            return Err(ScenarioError::Syntax {
                line: line_no,
                column: 1,
                msg: format!("malformed key `{key}`"),
            });
        }
        if let Some(prev) = entries.get(key) {
            return Err(ScenarioError::DuplicateKey {
                key: key.into(),
                first_line: prev.line,
                second_line: line_no,
            });
        }
        entries.insert(key.into(), RawEntry { line: line_no, value: value.into() });
    }
    Ok(Raw { entries })
}

fn invalid(line: usize, err: impl std::fmt::Display, section: &str) -> ScenarioError {
    ScenarioError::InvalidValue {
        line,
        key: section.into(),
        msg: err.to_string(),
    }
}

/// Parse and validate a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let mut raw = lex(text)?;

    // --- device -----------------------------------------------------------
    let kind = raw.take("device.kind").ok_or(ScenarioError::MissingSection("device"))?;
    let model = match kind.value.as_str() {
        "phi_tanh" => {
            let (l, s_w) = raw.need_f64("device.s_w", "phi_tanh device")?;
            let (_, m0) = raw.need_f64("device.m0", "phi_tanh device")?;
            let (_, k_phi) = raw.need_f64("device.k_phi", "phi_tanh device")?;
            DeviceModel::PhiTanh(
                PhiTanhParams::new(s_w, m0, k_phi).map_err(|e| invalid(l, e, "device"))?,
            )
        }
        "ideal" => {
            let (l, r_mid) = raw.need_f64("device.r_mid", "ideal device")?;
            let (_, d_r) = raw.need_f64("device.d_r", "ideal device")?;
            let (_, q0) = raw.need_f64("device.q0", "ideal device")?;
            DeviceModel::Ideal(
                IdealMemristorParams::new(r_mid, d_r, q0).map_err(|e| invalid(l, e, "device"))?,
            )
        }
        "hysteron" => {
            let (l, h_c) = raw.need_f64("device.h_c", "hysteron device")?;
            let (_, tau) = raw.need_f64("device.tau", "hysteron device")?;
            let (_, k_h) = raw.need_f64("device.k_h", "hysteron device")?;
            let (_, k_phi) = raw.need_f64("device.k_phi", "hysteron device")?;
            let r_w = raw.take_f64_or("device.r_w", 1.0)?;
            let (_, m_init) = raw.need_f64("device.m_init", "hysteron device")?;
            DeviceModel::Hysteron(
                ThresholdHysteronParams::new(h_c, tau, k_h, k_phi, r_w, m_init)
                    .map_err(|e| invalid(l, e, "device"))?,
            )
        }
        other => {
            return Err(ScenarioError::InvalidValue {
                line: kind.line,
                key: "device.kind".into(),
                msg: format!("`{other}` is not one of phi_tanh, ideal, hysteron"),
            })
        }
    };
    let q_init = raw.take_f64_or("device.q_init", 0.0)?;
    let device = DeviceSpec { model, q_init };

    // --- drive ------------------------------------------------------------
    let kind = raw.take("drive.kind").ok_or(ScenarioError::MissingSection("drive"))?;
    let drive = match kind.value.as_str() {
        "sinusoid_current" => {
            let (l, i0) = raw.need_f64("drive.i0", "sinusoid_current drive")?;
            let (_, omega) = raw.need_f64("drive.omega", "sinusoid_current drive")?;
            let phase = raw.take_f64_or("drive.phase", 0.0)?;
            DriveSpec::Sinusoid(
                SinusoidCurrent::new(i0, omega, phase).map_err(|e| invalid(l, e, "drive"))?,
            )
        }
        "triangular_pulse" => {
            let (l, v_peak) = raw.need_f64("drive.v_peak", "triangular_pulse drive")?;
            let (_, t_rise) = raw.need_f64("drive.t_rise", "triangular_pulse drive")?;
            let (_, t_fall) = raw.need_f64("drive.t_fall", "triangular_pulse drive")?;
            let t_start = raw.take_f64_or("drive.t_start", 0.0)?;
            DriveSpec::Triangle(
                TriangularVoltagePulse::new(v_peak, t_rise, t_fall, t_start)
                    .map_err(|e| invalid(l, e, "drive"))?,
            )
        }
        other => {
            return Err(ScenarioError::InvalidValue {
                line: kind.line,
                key: "drive.kind".into(),
                msg: format!("`{other}` is not one of sinusoid_current, triangular_pulse"),
            })
        }
    };

    // --- sim ---------------------------------------------------------------
    let (dt_line, dt) = raw.need_f64("sim.dt", "sim block")?;
    let (_, t_end) = raw.need_f64("sim.t_end", "sim block")?;
    let sim = SimConfig {
        dt,
        t_end,
        record_stride: raw.take_usize_or("sim.record_stride", 1)?,
        algebraic_tol: raw.take_f64_or("sim.algebraic_tol", 1e-10)?,
        max_fp_iters: raw.take_usize_or("sim.max_fp_iters", 50)?,
        relax_dt_guard: raw.take_bool_or("sim.relax_dt_guard", false)?,
    };
    sim.validate().map_err(|e| invalid(dt_line, e, "sim"))?;

    // --- circuit (optional) -------------------------------------------------
    let circuit = match raw.take_f64("circuit.c")? {
        Some((l, c)) => {
            if c <= 0.0 {
                return Err(ScenarioError::InvalidValue {
                    line: l,
                    key: "circuit.c".into(),
                    msg: "C must be > 0".into(),
                });
            }
            Some(CircuitSpec { c, v_c_init: raw.take_f64_or("circuit.v_c_init", 0.0)? })
        }
        None => {
            if let Some(e) = raw.take("circuit.v_c_init") {
                return Err(ScenarioError::MissingKey {
                    key: "circuit.c".into(),
                    context: format!("circuit.v_c_init at line {} needs it", e.line),
                });
            }
            None
        }
    };

    // --- output -------------------------------------------------------------
    let prefix = raw.take("output.prefix").map(|e| e.value);
    let stride = match raw.take("output.stride") {
        None => 1,
        Some(e) => match e.value.parse::<usize>() {
            Ok(v) if v >= 1 => v,
            _ => {
                return Err(ScenarioError::InvalidValue {
                    line: e.line,
                    key: "output.stride".into(),
                    msg: format!("`{}` is not a positive integer", e.value),
                })
            }
        },
    };
    let output = OutputSpec { prefix, stride };

    // Anything left over was not consumed by the chosen kinds.
    if let Some((key, entry)) = raw.entries.iter().next() {
        return Err(ScenarioError::UnknownKey { line: entry.line, key: key.clone() });
    }

    Ok(Scenario { device, drive, sim, circuit, output })
}

impl Scenario {
    /// Canonical text form; `parse_scenario` of the result reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let f = |x: f64| format!("{x:e}");
        match &self.device.model {
            DeviceModel::PhiTanh(p) => {
                s.push_str("device.kind = phi_tanh\n");
                s.push_str(&format!("device.s_w = {}\n", f(p.s_w)));
                s.push_str(&format!("device.m0 = {}\n", f(p.m0)));
                s.push_str(&format!("device.k_phi = {}\n", f(p.k_phi)));
            }
            DeviceModel::Ideal(p) => {
                s.push_str("device.kind = ideal\n");
                s.push_str(&format!("device.r_mid = {}\n", f(p.r_mid)));
                s.push_str(&format!("device.d_r = {}\n", f(p.d_r)));
                s.push_str(&format!("device.q0 = {}\n", f(p.q0)));
            }
            DeviceModel::Hysteron(p) => {
                s.push_str("device.kind = hysteron\n");
                s.push_str(&format!("device.h_c = {}\n", f(p.h_c)));
                s.push_str(&format!("device.tau = {}\n", f(p.tau)));
                s.push_str(&format!("device.k_h = {}\n", f(p.k_h)));
                s.push_str(&format!("device.k_phi = {}\n", f(p.k_phi)));
                s.push_str(&format!("device.r_w = {}\n", f(p.r_w)));
                s.push_str(&format!("device.m_init = {}\n", f(p.m_init)));
            }
        }
        s.push_str(&format!("device.q_init = {}\n\n", f(self.device.q_init)));

        match &self.drive {
            DriveSpec::Sinusoid(w) => {
                s.push_str("drive.kind = sinusoid_current\n");
                s.push_str(&format!("drive.i0 = {}\n", f(w.i0)));
                s.push_str(&format!("drive.omega = {}\n", f(w.omega)));
                s.push_str(&format!("drive.phase = {}\n", f(w.phase)));
            }
            DriveSpec::Triangle(w) => {
                s.push_str("drive.kind = triangular_pulse\n");
                s.push_str(&format!("drive.v_peak = {}\n", f(w.v_peak)));
                s.push_str(&format!("drive.t_rise = {}\n", f(w.t_rise)));
                s.push_str(&format!("drive.t_fall = {}\n", f(w.t_fall)));
                s.push_str(&format!("drive.t_start = {}\n", f(w.t_start)));
            }
        }
        s.push('\n');

        s.push_str(&format!("sim.dt = {}\n", f(self.sim.dt)));
        s.push_str(&format!("sim.t_end = {}\n", f(self.sim.t_end)));
        s.push_str(&format!("sim.record_stride = {}\n", self.sim.record_stride));
        s.push_str(&format!("sim.algebraic_tol = {}\n", f(self.sim.algebraic_tol)));
        s.push_str(&format!("sim.max_fp_iters = {}\n", self.sim.max_fp_iters));
        s.push_str(&format!("sim.relax_dt_guard = {}\n", self.sim.relax_dt_guard));

        if let Some(c) = &self.circuit {
            s.push('\n');
            s.push_str(&format!("circuit.c = {}\n", f(c.c)));
            s.push_str(&format!("circuit.v_c_init = {}\n", f(c.v_c_init)));
        }

        s.push('\n');
        s.push_str(&format!("output.stride = {}\n", self.output.stride));
        if let Some(p) = &self.output.prefix {
            s.push_str(&format!("output.prefix = {p}\n"));
        }
        s
    }

    /// Overwrite one numeric scalar (used by sweeps and the --dt override).
    pub fn set_numeric(&mut self, key: &str, value: f64) -> Result<(), ScenarioError> {
        if !value.is_finite() {
            return Err(ScenarioError::InvalidValue {
                line: 0,
                key: key.into(),
                msg: "value must be finite".into(),
            });
        }
        let reject = || ScenarioError::NonNumericKey(key.into());
        let inv = |e: &dyn std::fmt::Display| ScenarioError::InvalidValue {
            line: 0,
            key: key.into(),
            msg: e.to_string(),
        };
        match key {
            "device.q_init" => self.device.q_init = value,
            "device.s_w" | "device.m0" | "device.k_phi" | "device.r_mid" | "device.d_r"
            | "device.q0" | "device.h_c" | "device.tau" | "device.k_h" | "device.r_w"
            | "device.m_init" => {
                self.device.model = rebuild_model(&self.device.model, key, value)
                    .map_err(|e| inv(&e))?
                    .ok_or_else(reject)?;
            }
            "drive.i0" | "drive.omega" | "drive.phase" | "drive.v_peak" | "drive.t_rise"
            | "drive.t_fall" | "drive.t_start" => {
                self.drive = rebuild_drive(&self.drive, key, value)
                    .map_err(|e| inv(&e))?
                    .ok_or_else(reject)?;
            }
            "sim.dt" => {
                self.sim.dt = value;
                self.sim.validate().map_err(|e| inv(&e))?;
            }
            "sim.t_end" => {
                self.sim.t_end = value;
                self.sim.validate().map_err(|e| inv(&e))?;
            }
            "sim.algebraic_tol" => {
                self.sim.algebraic_tol = value;
                self.sim.validate().map_err(|e| inv(&e))?;
            }
            "circuit.c" | "circuit.v_c_init" => {
                let c = self.circuit.as_mut().ok_or(ScenarioError::MissingSection("circuit"))?;
                if key == "circuit.c" {
                    if value <= 0.0 {
                        return Err(ScenarioError::InvalidValue {
                            line: 0,
                            key: key.into(),
                            msg: "C must be > 0".into(),
                        });
                    }
                    c.c = value;
                } else {
                    c.v_c_init = value;
                }
            }
            _ => return Err(reject()),
        }
        Ok(())
    }
}

type ModelResult = Result<Option<DeviceModel>, crate::models::ModelError>;

fn rebuild_model(model: &DeviceModel, key: &str, value: f64) -> ModelResult {
    Ok(match (model, key) {
        (DeviceModel::PhiTanh(p), "device.s_w") => {
            Some(DeviceModel::PhiTanh(PhiTanhParams::new(value, p.m0, p.k_phi)?))
        }
        (DeviceModel::PhiTanh(p), "device.m0") => {
            Some(DeviceModel::PhiTanh(PhiTanhParams::new(p.s_w, value, p.k_phi)?))
        }
        (DeviceModel::PhiTanh(p), "device.k_phi") => {
            Some(DeviceModel::PhiTanh(PhiTanhParams::new(p.s_w, p.m0, value)?))
        }
        (DeviceModel::Ideal(p), "device.r_mid") => {
            Some(DeviceModel::Ideal(IdealMemristorParams::new(value, p.d_r, p.q0)?))
        }
        (DeviceModel::Ideal(p), "device.d_r") => {
            Some(DeviceModel::Ideal(IdealMemristorParams::new(p.r_mid, value, p.q0)?))
        }
        (DeviceModel::Ideal(p), "device.q0") => {
            Some(DeviceModel::Ideal(IdealMemristorParams::new(p.r_mid, p.d_r, value)?))
        }
        (DeviceModel::Hysteron(p), "device.h_c") => Some(DeviceModel::Hysteron(
            ThresholdHysteronParams::new(value, p.tau, p.k_h, p.k_phi, p.r_w, p.m_init)?,
        )),
        (DeviceModel::Hysteron(p), "device.tau") => Some(DeviceModel::Hysteron(
            ThresholdHysteronParams::new(p.h_c, value, p.k_h, p.k_phi, p.r_w, p.m_init)?,
        )),
        (DeviceModel::Hysteron(p), "device.k_h") => Some(DeviceModel::Hysteron(
            ThresholdHysteronParams::new(p.h_c, p.tau, value, p.k_phi, p.r_w, p.m_init)?,
        )),
        (DeviceModel::Hysteron(p), "device.k_phi") => Some(DeviceModel::Hysteron(
            ThresholdHysteronParams::new(p.h_c, p.tau, p.k_h, value, p.r_w, p.m_init)?,
        )),
        (DeviceModel::Hysteron(p), "device.r_w") => Some(DeviceModel::Hysteron(
            ThresholdHysteronParams::new(p.h_c, p.tau, p.k_h, p.k_phi, value, p.m_init)?,
        )),
        (DeviceModel::Hysteron(p), "device.m_init") => Some(DeviceModel::Hysteron(
            ThresholdHysteronParams::new(p.h_c, p.tau, p.k_h, p.k_phi, p.r_w, value)?,
        )),
        _ => None,
    })
}

fn rebuild_drive(drive: &DriveSpec, key: &str, value: f64) -> Result<Option<DriveSpec>, crate::waveforms::WaveformError> {
    Ok(match (drive, key) {
        (DriveSpec::Sinusoid(w), "drive.i0") => {
            Some(DriveSpec::Sinusoid(SinusoidCurrent::new(value, w.omega, w.phase)?))
        }
        (DriveSpec::Sinusoid(w), "drive.omega") => {
            Some(DriveSpec::Sinusoid(SinusoidCurrent::new(w.i0, value, w.phase)?))
        }
        (DriveSpec::Sinusoid(w), "drive.phase") => {
            Some(DriveSpec::Sinusoid(SinusoidCurrent::new(w.i0, w.omega, value)?))
        }
        (DriveSpec::Triangle(w), "drive.v_peak") => Some(DriveSpec::Triangle(
            TriangularVoltagePulse::new(value, w.t_rise, w.t_fall, w.t_start)?,
        )),
        (DriveSpec::Triangle(w), "drive.t_rise") => Some(DriveSpec::Triangle(
            TriangularVoltagePulse::new(w.v_peak, value, w.t_fall, w.t_start)?,
        )),
        (DriveSpec::Triangle(w), "drive.t_fall") => Some(DriveSpec::Triangle(
            TriangularVoltagePulse::new(w.v_peak, w.t_rise, value, w.t_start)?,
        )),
        (DriveSpec::Triangle(w), "drive.t_start") => Some(DriveSpec::Triangle(
            TriangularVoltagePulse::new(w.v_peak, w.t_rise, w.t_fall, value)?,
        )),
        _ => None,
    })
}
