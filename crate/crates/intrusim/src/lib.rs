//! Deterministic discrete-time simulator of a multi-sensor GSM burglar
//! alarm. Virtual PIR, sound, and door-contact sensors feed a firmware-style
//! controller; when something trips, the controller drives an emulated
//! SIM800-class modem over virtual UART links to place an alert call and —
//! for door intrusions — send an SMS.
//!
//! The clock is whole milliseconds, the event queue is strictly ordered, and
//! the serial links carry baud-derived per-byte latency, so every run is
//! reproducible byte for byte: same config, same scenario, same transcript.
//!
//! # Layout
//!
//! - [`kernel`] — virtual clock, event queue, serial channels
//! - [`sensors`] — PIR sector geometry, sound bursts, magnetic door switch
//! - [`controller`] — boot delay, sampling loop, alert branches, AT writes
//! - [`modem`] — AT command parser, call/SMS state machine, ledgers
//! - [`scenario`] / [`config`] — the `at`/`expect` DSL and `key = value` files
//! - [`harness`] / [`transcript`] — end-to-end runs and the JSONL record log
//!
//! # Quick start
//!
//! ```
//! let config = intrusim::SimConfig::default();
//! let scenario = intrusim::parse_scenario(
//!     "at 20000 door open\n\
//!      at 20600 door close\n\
//!      expect call +2347048850497 by 25000\n",
//! )
//! .unwrap();
//! let horizon = intrusim::default_horizon_ms(&scenario);
//! let output = intrusim::run(&config, &scenario, horizon).unwrap();
//! let verdicts = intrusim::check_expectations(&output, &scenario.expectations);
//! assert!(intrusim::harness::all_pass(&verdicts));
//! ```
//!
//! The `examples/` directory walks each layer: `serial_timing` for the
//! kernel, `pir_coverage` for sensor geometry, `sound_policy` for the
//! controller branches, `modem_session` for the raw AT surface, and
//! `door_intrusion` for the full pipeline. The thin `simulate` binary runs
//! scenario files from the command line.

pub mod config;
pub mod controller;
pub mod harness;
pub mod kernel;
pub mod modem;
pub mod scenario;
pub mod sensors;
pub mod transcript;

pub use config::{parse_config, ConfigError, SimConfig};
pub use harness::{check_expectations, default_horizon_ms, run, RunError, RunOutput, Verdict};
pub use scenario::{parse_scenario, Expectation, Scenario, ScenarioError};
