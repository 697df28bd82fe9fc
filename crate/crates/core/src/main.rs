use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use memtest_sim::runner::{
    self, cmd_loop, cmd_memtest, cmd_sweep, cmd_timeseries, verdict_exit_code, RunError,
    SweepMode,
};
use memtest_sim::scenario::{parse_scenario, Scenario};

/// Memelement transient simulator and ideality tester.
#[derive(Parser)]
#[command(name = "memtest-sim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Current-driven run; writes per-period m-H loop CSVs and a JSON summary.
    Loop(CommonArgs),
    /// Current-driven run; writes the full trace CSV and a JSON peak report.
    Timeseries(CommonArgs),
    /// Capacitor-circuit run; writes the trace CSV and a JSON verdict.
    /// Exit code 0 = pass, 5 = fail, 4 = inconclusive.
    Memtest(CommonArgs),
    /// Re-run the scenario over a list of values for one numeric key.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario file path.
    #[arg(long)]
    scenario: PathBuf,
    /// Directory for output files (created if missing).
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Override sim.dt from the scenario.
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Numeric scenario key to sweep, e.g. device.m0.
    #[arg(long)]
    key: String,
    /// Comma-separated value list.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// What to run per value; inferred from the scenario when omitted
    /// (memtest if a circuit block is present, loop otherwise).
    #[arg(long, value_enum)]
    mode: Option<SweepModeArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepModeArg {
    Loop,
    Timeseries,
    Memtest,
}

impl From<SweepModeArg> for SweepMode {
    fn from(m: SweepModeArg) -> Self {
        match m {
            SweepModeArg::Loop => SweepMode::Loop,
            SweepModeArg::Timeseries => SweepMode::Timeseries,
            SweepModeArg::Memtest => SweepMode::Memtest,
        }
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    kind: &'a str,
    message: String,
}

fn fail(err: RunError) -> ExitCode {
    let report = ErrorReport { kind: err.kind(), message: err.to_string() };
    eprintln!("{{\"error\": {}}}", serde_json::to_string(&report).unwrap());
    ExitCode::from(err.exit_code() as u8)
}

fn load(args: &CommonArgs) -> Result<(Scenario, String), RunError> {
    let text = fs::read_to_string(&args.scenario)
        .map_err(|source| RunError::Io { path: args.scenario.clone(), source })?;
    let mut scenario = parse_scenario(&text)?;
    if let Some(dt) = args.dt {
        scenario.set_numeric("sim.dt", dt)?;
    }
    let stem = scenario.output.prefix.clone().unwrap_or_else(|| {
        args.scenario
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into())
    });
    fs::create_dir_all(&args.out_dir)
        .map_err(|source| RunError::Io { path: args.out_dir.clone(), source })?;
    Ok((scenario, stem))
}

fn run(command: Command) -> Result<ExitCode, RunError> {
    match command {
        Command::Loop(args) => {
            let (scenario, stem) = load(&args)?;
            let run = cmd_loop(&scenario)?;
            runner::write_loop_csvs(&run.loops, scenario.output.stride, &args.out_dir, &stem)?;
            let summary_path = args.out_dir.join(format!("{stem}_summary.json"));
            runner::write_json(&run.summary, &summary_path)?;
            print!("{}", runner::to_json(&run.summary));
            Ok(ExitCode::SUCCESS)
        }
        Command::Timeseries(args) => {
            let (scenario, stem) = load(&args)?;
            let run = cmd_timeseries(&scenario)?;
            let trace_path = args.out_dir.join(format!("{stem}_trace.csv"));
            runner::write_trace_csv(&run.trace, scenario.output.stride, &trace_path)?;
            let peaks_path = args.out_dir.join(format!("{stem}_peaks.json"));
            runner::write_json(&run.peaks, &peaks_path)?;
            print!("{}", runner::to_json(&run.peaks));
            Ok(ExitCode::SUCCESS)
        }
        Command::Memtest(args) => {
            let (scenario, stem) = load(&args)?;
            let run = cmd_memtest(&scenario)?;
            let trace_path = args.out_dir.join(format!("{stem}_trace.csv"));
            runner::write_trace_csv(&run.trace, scenario.output.stride, &trace_path)?;
            let verdict_path = args.out_dir.join(format!("{stem}_verdict.json"));
            runner::write_json(&run.verdict, &verdict_path)?;
            print!("{}", runner::to_json(&run.verdict));
            Ok(ExitCode::from(verdict_exit_code(run.verdict.outcome) as u8))
        }
        Command::Sweep(args) => {
            let (scenario, stem) = load(&args.common)?;
            let mode = args.mode.map(SweepMode::from).unwrap_or_else(|| SweepMode::infer(&scenario));
            let entries = cmd_sweep(&scenario, &args.key, &args.values, mode)?;
            let sweep_path = args.common.out_dir.join(format!("{stem}_sweep.json"));
            runner::write_json(&entries, &sweep_path)?;
            print!("{}", runner::to_json(&entries));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => fail(err),
    }
}
