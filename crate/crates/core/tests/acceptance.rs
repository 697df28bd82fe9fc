//! Acceptance suite: one test per criterion, each printing a single
//! pass/fail line (visible with `cargo test --test acceptance -- --nocapture`).

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use memtest_sim::models::{
    sech_sq, DeviceModel, IdealMemristorParams, PhiTanhParams,
};
use memtest_sim::runner::{cmd_loop, cmd_memtest, cmd_timeseries, run_batch};
use memtest_sim::scenario::{parse_scenario, Scenario};
use memtest_sim::simulator::{
    rk4_step, run_memristor_test, simulate_current_driven, SimConfig, TestCircuit, TestOutcome,
};
use memtest_sim::waveforms::{charge_integral, eval_current, SinusoidCurrent, TriangularVoltagePulse};

fn check(criterion: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[{tag}] {criterion}: {detail}");
    assert!(pass, "{criterion}: {detail}");
}

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn load_scenario(name: &str) -> Scenario {
    let text = std::fs::read_to_string(scenario_path(name)).expect("bundled scenario readable");
    parse_scenario(&text).expect("bundled scenario valid")
}

// ---------------------------------------------------------------------------
// 1. Biased-loop reproduction: floor at m0 = 0.5, ceiling at
//    tanh(atanh(0.5) + 20/3).
// ---------------------------------------------------------------------------
#[test]
fn criterion_1_biased_loop_extremes() {
    let s = load_scenario("loop_biased.scn");
    let t0 = Instant::now();
    let run = cmd_loop(&s).unwrap();
    let elapsed = t0.elapsed();

    let m_max_expected = (0.5_f64.atanh() + 20.0 / 3.0).tanh();
    assert!((m_max_expected - 0.9999989).abs() < 1e-7);

    let ok_min = (run.summary.m_min - 0.5).abs() < 1e-6;
    let ok_max = (run.summary.m_max - m_max_expected).abs() < 1e-6;
    let ok_time = elapsed.as_secs_f64() < 1.0;
    check(
        "criterion 1 (biased loop extremes)",
        ok_min && ok_max && ok_time,
        &format!(
            "m_min = {:.9} (want 0.5 ± 1e-6), m_max = {:.9} (want {:.9} ± 1e-6), runtime {:?} (< 1 s)",
            run.summary.m_min, run.summary.m_max, m_max_expected, elapsed
        ),
    );
}

// ---------------------------------------------------------------------------
// 2. Unbiased-loop reproduction: floor 0, ceiling tanh(20/3), and m never
//    negative even while the field swings negative.
// ---------------------------------------------------------------------------
#[test]
fn criterion_2_unbiased_loop_extremes() {
    let s = load_scenario("loop_unbiased.scn");
    let t0 = Instant::now();
    let run = cmd_loop(&s).unwrap();
    let elapsed = t0.elapsed();

    let m_max_expected = (20.0_f64 / 3.0).tanh();
    assert!((m_max_expected - 0.9999968).abs() < 1e-7);

    let has_negative_field = run.trace.i.iter().any(|&i| i < 0.0);
    let ok_min = run.summary.m_min.abs() < 1e-6;
    let ok_max = (run.summary.m_max - m_max_expected).abs() < 1e-6;
    let ok_shape = has_negative_field && run.summary.m_min > -1e-6;
    let ok_time = elapsed.as_secs_f64() < 1.0;
    check(
        "criterion 2 (unbiased loop extremes)",
        ok_min && ok_max && ok_shape && ok_time,
        &format!(
            "m_min = {:.2e} (want 0 ± 1e-6), m_max = {:.9} (want {:.9} ± 1e-6), \
             m stays non-negative under negative H = {}, runtime {:?} (< 1 s)",
            run.summary.m_min, run.summary.m_max, m_max_expected, ok_shape, elapsed
        ),
    );
}

// ---------------------------------------------------------------------------
// 3. Peak-timing claim: the tanh-map device's voltage peaks sit ~0.82 of a
//    period apart (dense-sampling oracle), a resistor's exactly 0.5.
// ---------------------------------------------------------------------------

/// Independent oracle: maximize sech²(a(1-cosθ))·sinθ on a dense θ grid with
/// parabolic refinement; by the drive's odd symmetry the negative peak
/// mirrors at 2π - θ*, so Δt/T = (2π - 2θ*)/2π.
fn oracle_peak_separation(a: f64) -> f64 {
    let g = |theta: f64| sech_sq(a * (1.0 - theta.cos())) * theta.sin();
    let n = 2_000_000;
    let h = std::f64::consts::PI / n as f64;
    let (mut best_k, mut best) = (0, f64::NEG_INFINITY);
    for k in 1..n {
        let v = g(k as f64 * h);
        if v > best {
            best = v;
            best_k = k;
        }
    }
    let (y0, y1, y2) = (
        g((best_k - 1) as f64 * h),
        g(best_k as f64 * h),
        g((best_k + 1) as f64 * h),
    );
    let delta = 0.5 * (y0 - y2) / (y0 - 2.0 * y1 + y2);
    let theta_star = (best_k as f64 + delta) * h;
    (2.0 * std::f64::consts::PI - 2.0 * theta_star) / (2.0 * std::f64::consts::PI)
}

#[test]
fn criterion_3_peak_timing() {
    let oracle = oracle_peak_separation(10.0 / 3.0);

    let s = load_scenario("drive_response.scn");
    let run = cmd_timeseries(&s).unwrap();
    let measured = run.peaks.dt_over_t;

    let baseline = cmd_timeseries(&load_scenario("resistor_baseline.scn")).unwrap();
    let baseline_sep = baseline.peaks.dt_over_t;

    let ok_band = (measured - 0.82).abs() < 0.02;
    let ok_oracle = (measured - oracle).abs() < 0.005;
    let ok_baseline = (baseline_sep - 0.5).abs() < 0.01;
    check(
        "criterion 3 (voltage peak timing)",
        ok_band && ok_oracle && ok_baseline,
        &format!(
            "Δt/T = {measured:.4} (want 0.82 ± 0.02, oracle {oracle:.4}), resistor baseline {baseline_sep:.4} (want 0.5 ± 0.01)"
        ),
    );
}

// ---------------------------------------------------------------------------
// 4. Monotone floor over 200 randomized tanh-map scenarios.
// ---------------------------------------------------------------------------
#[test]
fn criterion_4_magnetization_floor_randomized() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4d5f_f100);
    let cases: Vec<(f64, f64, f64, f64)> = (0..200)
        .map(|_| {
            (
                rng.gen_range(0.1..10.0),               // i0
                2.0 * std::f64::consts::PI * rng.gen_range(0.5..50.0), // omega
                rng.gen_range(0.1..10.0),               // s_w
                rng.gen_range(-0.9..0.9),               // m0
            )
        })
        .collect();

    let worst: Vec<(f64, f64)> = run_batch(&cases, |&(i0, omega, s_w, m0)| {
        let device = DeviceModel::PhiTanh(PhiTanhParams::new(s_w, m0, 1.0).unwrap());
        let drive = SinusoidCurrent::new(i0, omega, 0.0).unwrap();
        let period = drive.period();
        let cfg = SimConfig::new(period / 2000.0, 3.0 * period).unwrap();
        let trace = simulate_current_driven(&device, &drive, &cfg, 0.0).unwrap();
        let m_min = trace.m.iter().cloned().fold(f64::INFINITY, f64::min);
        (m_min, m0)
    });

    let violations = worst.iter().filter(|(m_min, m0)| *m_min < m0 - 1e-9).count();
    let slack = worst
        .iter()
        .map(|(m_min, m0)| m_min - m0)
        .fold(f64::INFINITY, f64::min);
    check(
        "criterion 4 (monotone floor, 200 randomized runs)",
        violations == 0,
        &format!("{violations} violations; worst m_min - m0 = {slack:.2e} (must be >= -1e-9)"),
    );
}

// ---------------------------------------------------------------------------
// 5. Pass side of the state-return test: 100 randomized charge-controlled
//    devices in the capacitor circuit, every run conclusive and passing.
// ---------------------------------------------------------------------------
#[test]
fn criterion_5_resistive_devices_pass() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x91e5_0a55);
    let mut circuits: Vec<(TestCircuit, SimConfig)> = Vec::with_capacity(100);
    for k in 0..100 {
        let c = rng.gen_range(0.5e-6..2e-6);
        let v_peak = rng.gen_range(1.0..5.0);
        let (device, r_hi, r_lo) = if k % 2 == 0 {
            let r_mid = rng.gen_range(50.0..500.0);
            let swing = rng.gen_range(-0.6..0.6);
            let q_pulse = c * v_peak;
            let q0 = q_pulse * rng.gen_range(0.5..5.0);
            let p = IdealMemristorParams::new(r_mid, swing * r_mid, q0).unwrap();
            (DeviceModel::Ideal(p), r_mid * 1.6, r_mid * 0.4)
        } else {
            let m0 = rng.gen_range(-0.5..0.5);
            let q_pulse = c * v_peak;
            let s_w = q_pulse * rng.gen_range(2.0..10.0);
            let r0 = rng.gen_range(50.0..500.0);
            let p = PhiTanhParams::new(s_w, m0, r0 * s_w).unwrap();
            // |q/s_w + atanh m0| stays under ~1.05, so R >= r0·sech²(1.05).
            (DeviceModel::PhiTanh(p), r0, r0 * sech_sq(1.05))
        };
        let rc_hi = r_hi * c;
        let source = TriangularVoltagePulse::new(
            v_peak,
            rng.gen_range(1.0..3.0) * rc_hi,
            rng.gen_range(2.0..5.0) * rc_hi,
            0.0,
        )
        .unwrap();
        let t_end = source.t_end() + 30.0 * rc_hi;
        let tc = TestCircuit::new(device, source, c, 0.0, 0.0).unwrap();
        let mut cfg = SimConfig::new(r_lo * c / 50.0, t_end).unwrap();
        cfg.record_stride = 16;
        circuits.push((tc, cfg));
    }

    let verdicts = run_batch(&circuits, |(tc, cfg)| {
        run_memristor_test(tc, cfg, None).unwrap().0
    });

    let inconclusive = verdicts.iter().filter(|v| v.outcome == TestOutcome::Inconclusive).count();
    let failed = verdicts.iter().filter(|v| v.outcome == TestOutcome::Fail).count();
    let worst_r = verdicts.iter().map(|v| v.delta_r_rel).fold(0.0_f64, f64::max);
    check(
        "criterion 5 (state-return pass side, 100 randomized runs)",
        inconclusive == 0 && failed == 0 && worst_r < 1e-6,
        &format!(
            "{inconclusive} inconclusive (want 0), {failed} failed (want 0), worst |ΔR|/R = {worst_r:.2e} (< 1e-6)"
        ),
    );
}

// ---------------------------------------------------------------------------
// 6. Fail side: the bundled pulse scenario flips the hysteron while the
//    capacitor charge returns, cross-checked against a dt/100 reference.
// ---------------------------------------------------------------------------
#[test]
fn criterion_6_hysteron_fails_after_pulse() {
    let s = load_scenario("pulse_test.scn");
    let t0 = Instant::now();
    let run = cmd_memtest(&s).unwrap();
    let v = &run.verdict;

    let circuit = s.circuit.unwrap();
    let (v_peak, threshold) = match (&s.drive, &s.device.model) {
        (memtest_sim::scenario::DriveSpec::Triangle(w), DeviceModel::Hysteron(p)) => {
            (w.v_peak, p.threshold_current())
        }
        _ => unreachable!("pulse scenario shape"),
    };

    // Rise-phase peak current from the recorded samples (1 µs apart).
    let rise_peak = run
        .trace
        .i
        .iter()
        .zip(&run.trace.t)
        .filter(|(_, &t)| t <= 5e-6)
        .map(|(&i, _)| i)
        .fold(f64::NEG_INFINITY, f64::max);

    // dt/100 brute-force reference over the switching window; the main
    // trace must be frozen from there on, so its end state is m_final.
    let window = 1.5e-3;
    let tc = TestCircuit::new(
        s.device.model,
        match s.drive {
            memtest_sim::scenario::DriveSpec::Triangle(w) => w,
            _ => unreachable!(),
        },
        circuit.c,
        circuit.v_c_init,
        s.device.q_init,
    )
    .unwrap();
    let mut ref_cfg = SimConfig::new(s.sim.dt / 100.0, window).unwrap();
    ref_cfg.record_stride = 100_000;
    let ref_trace = memtest_sim::simulator::simulate_test_circuit(&tc, &ref_cfg).unwrap();
    let m_ref = *ref_trace.m.last().unwrap();

    let idx_window = run
        .trace
        .t
        .iter()
        .position(|&t| t >= window)
        .expect("window inside the main trace");
    let m_main_window = run.trace.m[idx_window];
    let m_main_final = *run.trace.m.last().unwrap();
    let elapsed = t0.elapsed();

    let ok_charge = v.charge_returned && v.delta_q_c < 1e-9 * circuit.c * v_peak;
    let ok_dm = (v.delta_m - 2.0).abs() < 0.01;
    let ok_fail = v.outcome == TestOutcome::Fail;
    let ok_rise = rise_peak >= 3.0 * threshold;
    let frozen = (m_main_final - m_main_window).abs() < 1e-9;
    let ok_ref = frozen && (m_main_final - m_ref).abs() < 1e-3;
    let ok_time = elapsed.as_secs_f64() < 10.0;
    check(
        "criterion 6 (state-return fail side, hysteron pulse)",
        ok_charge && ok_dm && ok_fail && ok_rise && ok_ref && ok_time,
        &format!(
            "|ΔQ_C| = {:.2e} C (< {:.2e}), |Δm| = {:.5} (want 2.0 ± 0.01), verdict {:?}, \
             rise-phase peak current {:.3} A (>= {:.3} A), m_final = {:.6} vs reference {:.6} \
             (|diff| < 1e-3, frozen after {window} s: {frozen}), runtime {:?} (< 10 s)",
            v.delta_q_c,
            1e-9 * circuit.c * v_peak,
            v.delta_m,
            v.outcome,
            rise_peak,
            3.0 * threshold,
            m_main_final,
            m_ref,
            elapsed
        ),
    );
}

// ---------------------------------------------------------------------------
// 7. Integrator order: halving dt cuts the charge error 16x (± 20%) at
//    three step levels.
// ---------------------------------------------------------------------------
#[test]
fn criterion_7_integrator_order() {
    let drive = SinusoidCurrent::new(2.0, 2.0 * std::f64::consts::PI, 0.0).unwrap();
    let max_err = |n: usize| {
        let dt = drive.period() / n as f64;
        let mut f = |t: f64, _y: &[f64; 1]| [eval_current(&drive, t)];
        let mut y = [0.0];
        let mut worst = 0.0_f64;
        for k in 0..n {
            y = rk4_step(&mut f, k as f64 * dt, dt, &y);
            let exact = charge_integral(&drive, (k + 1) as f64 * dt).unwrap();
            worst = worst.max((y[0] - exact).abs());
        }
        worst
    };
    let errors = [max_err(200), max_err(400), max_err(800)];
    let r1 = errors[0] / errors[1];
    let r2 = errors[1] / errors[2];
    let ok = (r1 - 16.0).abs() <= 3.2 && (r2 - 16.0).abs() <= 3.2;
    check(
        "criterion 7 (RK4 order)",
        ok,
        &format!(
            "error ratios {r1:.2}, {r2:.2} (want 16 ± 20%); errors {:.3e}, {:.3e}, {:.3e}",
            errors[0], errors[1], errors[2]
        ),
    );
}

// ---------------------------------------------------------------------------
// 8. Determinism: byte-identical outputs across 3 runs of every bundled
//    scenario through the CLI.
// ---------------------------------------------------------------------------
#[test]
fn criterion_8_deterministic_csv() {
    let bundles: [(&str, &str); 5] = [
        ("loop_biased.scn", "loop"),
        ("loop_unbiased.scn", "loop"),
        ("drive_response.scn", "timeseries"),
        ("resistor_baseline.scn", "timeseries"),
        ("pulse_test.scn", "memtest"),
    ];
    let bin = env!("CARGO_BIN_EXE_memtest-sim");
    let base = std::env::temp_dir().join(format!("memtest-sim-acc8-{}", std::process::id()));

    let mut all_ok = true;
    let mut detail = String::new();
    for (scn, cmd) in bundles {
        let mut runs: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
        for rep in 0..3 {
            let out_dir = base.join(format!("{scn}-{rep}"));
            std::fs::create_dir_all(&out_dir).unwrap();
            let status = std::process::Command::new(bin)
                .args([
                    cmd,
                    "--scenario",
                    scenario_path(scn).to_str().unwrap(),
                    "--out-dir",
                    out_dir.to_str().unwrap(),
                ])
                .stdout(std::process::Stdio::null())
                .status()
                .unwrap();
            // memtest on the pulse scenario exits 5 (fail verdict).
            let expected = if scn == "pulse_test.scn" { 5 } else { 0 };
            assert_eq!(status.code(), Some(expected), "{scn} exit code");
            let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&out_dir)
                .unwrap()
                .map(|e| {
                    let e = e.unwrap();
                    (
                        e.file_name().to_string_lossy().into_owned(),
                        std::fs::read(e.path()).unwrap(),
                    )
                })
                .collect();
            files.sort();
            assert!(!files.is_empty(), "{scn}: no outputs written");
            runs.push(files);
        }
        let identical = runs[0] == runs[1] && runs[1] == runs[2];
        all_ok &= identical;
        detail.push_str(&format!(
            "{scn}: {} files, byte-identical x3 = {identical}; ",
            runs[0].len()
        ));
    }
    let _ = std::fs::remove_dir_all(&base);
    check("criterion 8 (deterministic outputs)", all_ok, detail.trim_end());
}
