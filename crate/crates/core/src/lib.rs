//! Transient simulation and ideality testing of memelement device models.
//!
//! The crate bundles three device laws (a charge-controlled tanh
//! magnetization map, an ideal bounded-resistance memristor, and a
//! threshold-switching hysteron magnet), drive waveforms, a fixed-step RK4
//! transient engine for current-driven and series-capacitor runs, trace
//! analysis (hysteresis loops, origin pinch, magnetization floor, voltage
//! peak timing), and the state-return test that separates genuinely
//! charge-controlled devices from devices with hidden state.
//!
//! Single runs are deterministic and single-threaded; batches of independent
//! runs (sweeps, randomized scenario sets) go through `runner::run_batch`,
//! which is rayon-parallel under the default `parallel` feature and falls
//! back to a plain sequential map without it.

pub mod analysis;
pub mod models;
pub mod runner;
pub mod scenario;
pub mod simulator;
pub mod waveforms;
