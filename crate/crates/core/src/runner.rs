//! Command-level plumbing shared by the CLI and the test suites: build the
//! simulation from a scenario, post-process, and emit deterministic CSV and
//! JSON artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{
    extract_loops, magnetization_floor, peak_timing, AnalysisError, LoopAxis, LoopExtraction,
    LoopValue, PeakReport,
};
use crate::models::DeviceModel;
use crate::scenario::{DriveSpec, Scenario, ScenarioError};
use crate::simulator::{
    run_memristor_test, simulate_current_driven, SimError, SimulationTrace, TestCircuit,
    TestOutcome, TestVerdict,
};
use crate::waveforms::{SinusoidCurrent, TriangularVoltagePulse};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Unsupported(String),
}

impl RunError {
    /// Process exit code for this error class: 2 scenario/usage, 3
    /// simulation/analysis, 1 io.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Scenario(_) | RunError::Unsupported(_) => 2,
            RunError::Sim(_) | RunError::Analysis(_) => 3,
            RunError::Io { .. } => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Scenario(_) => "scenario",
            RunError::Sim(_) => "simulation",
            RunError::Analysis(_) => "analysis",
            RunError::Io { .. } => "io",
            RunError::Unsupported(_) => "unsupported",
        }
    }
}

/// Exit code for a finished state-return test.
pub fn verdict_exit_code(outcome: TestOutcome) -> i32 {
    match outcome {
        TestOutcome::Pass => 0,
        TestOutcome::Inconclusive => 4,
        TestOutcome::Fail => 5,
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

// ---------------------------------------------------------------------------
// Batch execution
// ---------------------------------------------------------------------------

/// Map `f` over `items` sequentially, preserving order.
pub fn run_batch_seq<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Map `f` over independent items, in parallel when the `parallel` feature
/// is on. Output order always follows input order.
#[cfg(feature = "parallel")]
pub fn run_batch<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Send + Sync,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn run_batch<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    run_batch_seq(items, f)
}

// ---------------------------------------------------------------------------
// Scenario plumbing
// ---------------------------------------------------------------------------

fn sinusoid_drive(s: &Scenario) -> Result<&SinusoidCurrent, RunError> {
    match &s.drive {
        DriveSpec::Sinusoid(w) => Ok(w),
        DriveSpec::Triangle(_) => Err(RunError::Unsupported(
            "this command needs a sinusoid_current drive".into(),
        )),
    }
}

fn triangle_drive(s: &Scenario) -> Result<&TriangularVoltagePulse, RunError> {
    match &s.drive {
        DriveSpec::Triangle(w) => Ok(w),
        DriveSpec::Sinusoid(_) => Err(RunError::Unsupported(
            "this command needs a triangular_pulse drive".into(),
        )),
    }
}

fn field_scale(model: &DeviceModel) -> f64 {
    match model {
        DeviceModel::Hysteron(p) => p.k_h,
        _ => 1.0,
    }
}

/// Build the series test circuit from a scenario; the circuit block and a
/// voltage pulse drive are required.
pub fn test_circuit_of(s: &Scenario) -> Result<TestCircuit, RunError> {
    let circuit = s.circuit.as_ref().ok_or(ScenarioError::MissingSection("circuit"))?;
    let source = *triangle_drive(s)?;
    Ok(TestCircuit::new(s.device.model, source, circuit.c, circuit.v_c_init, s.device.q_init)?)
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

/// Summary emitted by the loop command.
#[derive(Debug, Clone, Serialize)]
pub struct LoopSummary {
    pub m_min: f64,
    pub m_max: f64,
    pub loop_count: usize,
    pub degenerate: bool,
    /// First sample index where m dropped below m(0), if any.
    pub floor_violation_index: Option<usize>,
}

#[derive(Debug)]
pub struct LoopRun {
    pub summary: LoopSummary,
    pub loops: LoopExtraction,
    pub trace: SimulationTrace,
}

/// Current-driven run, per-period m-H loop extraction, magnetization floor.
pub fn cmd_loop(s: &Scenario) -> Result<LoopRun, RunError> {
    let drive = sinusoid_drive(s)?;
    let trace = simulate_current_driven(&s.device.model, drive, &s.sim, s.device.q_init)?;
    let loops = extract_loops(
        &trace,
        LoopAxis::FieldH { scale: field_scale(&s.device.model) },
        LoopValue::Magnetization,
    )?;
    let (m_min, violation) = magnetization_floor(&trace);
    let m_max = trace.m.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(LoopRun {
        summary: LoopSummary {
            m_min,
            m_max,
            loop_count: loops.loops.len(),
            degenerate: loops.degenerate,
            floor_violation_index: violation,
        },
        loops,
        trace,
    })
}

#[derive(Debug)]
pub struct TimeseriesRun {
    pub peaks: PeakReport,
    pub trace: SimulationTrace,
}

/// Current-driven run with full trace output and voltage peak timing.
pub fn cmd_timeseries(s: &Scenario) -> Result<TimeseriesRun, RunError> {
    let drive = sinusoid_drive(s)?;
    let trace = simulate_current_driven(&s.device.model, drive, &s.sim, s.device.q_init)?;
    let peaks = peak_timing(&trace)?;
    Ok(TimeseriesRun { peaks, trace })
}

#[derive(Debug)]
pub struct MemtestRun {
    pub verdict: TestVerdict,
    pub trace: SimulationTrace,
}

/// Capacitor-circuit run plus the state-return verdict.
pub fn cmd_memtest(s: &Scenario) -> Result<MemtestRun, RunError> {
    let tc = test_circuit_of(s)?;
    let (verdict, trace) = run_memristor_test(&tc, &s.sim, None)?;
    Ok(MemtestRun { verdict, trace })
}

/// What a sweep runs for each value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    Loop,
    Timeseries,
    Memtest,
}

impl SweepMode {
    /// Memtest when the scenario has a circuit block, loop otherwise.
    pub fn infer(s: &Scenario) -> Self {
        if s.circuit.is_some() {
            SweepMode::Memtest
        } else {
            SweepMode::Loop
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SweepResult {
    Loop(LoopSummary),
    Timeseries(PeakReport),
    Memtest(TestVerdict),
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub key: String,
    pub value: f64,
    pub result: SweepResult,
}

/// Run the scenario once per value of `key`, in input order. Runs are
/// independent and execute through [`run_batch`].
pub fn cmd_sweep(
    s: &Scenario,
    key: &str,
    values: &[f64],
    mode: SweepMode,
) -> Result<Vec<SweepEntry>, RunError> {
    if values.is_empty() {
        return Err(RunError::Unsupported("sweep needs at least one value".into()));
    }
    // Validate the key (and every value) up front so errors carry the line
    // of user intent, not a worker index.
    let mut variants = Vec::with_capacity(values.len());
    for &v in values {
        let mut variant = s.clone();
        variant.set_numeric(key, v)?;
        variants.push(variant);
    }

    let results: Vec<Result<SweepResult, RunError>> = run_batch(&variants, |variant| {
        Ok(match mode {
            SweepMode::Loop => SweepResult::Loop(cmd_loop(variant)?.summary),
            SweepMode::Timeseries => SweepResult::Timeseries(cmd_timeseries(variant)?.peaks),
            SweepMode::Memtest => SweepResult::Memtest(cmd_memtest(variant)?.verdict),
        })
    });

    results
        .into_iter()
        .zip(values)
        .map(|(r, &value)| r.map(|result| SweepEntry { key: key.into(), value, result }))
        .collect()
}

// ---------------------------------------------------------------------------
// Deterministic emission
// ---------------------------------------------------------------------------

/// Fixed 17-significant-digit scientific notation; byte-stable across runs.
pub fn format_field(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write the full trace as CSV, keeping every `stride`-th recorded sample.
pub fn write_trace_csv(
    trace: &SimulationTrace,
    stride: usize,
    path: &Path,
) -> Result<(), RunError> {
    let mut out = String::with_capacity(trace.len() / stride.max(1) * 160 + 64);
    out.push_str(&SimulationTrace::COLUMN_NAMES.join(","));
    out.push('\n');
    for k in (0..trace.len()).step_by(stride.max(1)) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            format_field(trace.t[k]),
            format_field(trace.i[k]),
            format_field(trace.v_device[k]),
            format_field(trace.q[k]),
            format_field(trace.m[k]),
            format_field(trace.phi[k]),
            format_field(trace.v_c[k]),
        );
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Write one CSV per extracted loop: `<stem>_loop<N>.csv`.
pub fn write_loop_csvs(
    loops: &LoopExtraction,
    stride: usize,
    out_dir: &Path,
    stem: &str,
) -> Result<Vec<PathBuf>, RunError> {
    let mut files = Vec::with_capacity(loops.loops.len());
    for (idx, l) in loops.loops.iter().enumerate() {
        let path = out_dir.join(format!("{stem}_loop{}.csv", idx + 1));
        let mut out = String::with_capacity(l.x.len() / stride.max(1) * 48 + 16);
        let _ = writeln!(out, "{},{}", loops.x_label, loops.y_label);
        for k in (0..l.x.len()).step_by(stride.max(1)) {
            let _ = writeln!(out, "{},{}", format_field(l.x[k]), format_field(l.y[k]));
        }
        fs::write(&path, out).map_err(io_err(&path))?;
        files.push(path);
    }
    Ok(files)
}

/// Serialize any report as pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialization cannot fail");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), RunError> {
    fs::write(path, to_json(value)).map_err(io_err(path))
}
