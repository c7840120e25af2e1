//! Wires sensors, controller, serial channels, and modem onto the event
//! queue, runs a scripted scenario to its horizon, and checks declared
//! expectations against the result.
//!
//! Scenario events are scheduled before anything else, so a stimulus and a
//! controller sample landing on the same millisecond apply the stimulus
//! first — the sample sees fresh state, the way level-triggered hardware
//! would.

use thiserror::Error;

use crate::config::SimConfig;
use crate::controller::{Controller, ControllerAction, ControllerError};
use crate::kernel::{EventQueue, SerialChannel, SimTime};
use crate::modem::{FeedResult, Modem, ModemEvent};
use crate::scenario::{EventKind, Expectation, Scenario};
use crate::sensors::{PirSensor, SensorWorld, SoundSensor};
use crate::transcript::{render_bytes, RecordKind, Source, TranscriptRecord};

/// Slack appended to the last scripted instant when no horizon is given.
pub const HORIZON_SLACK_MS: u64 = 30_000;

/// Default run horizon: last event or expectation time plus
/// [`HORIZON_SLACK_MS`].
pub fn default_horizon_ms(scenario: &Scenario) -> u64 {
    scenario.last_time_ms() + HORIZON_SLACK_MS
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("horizon {horizon_ms} ms ends before the last scripted time {last_ms} ms")]
    HorizonTooSmall { horizon_ms: u64, last_ms: u64 },
    #[error("invalid firmware config: {0}")]
    Controller(#[from] ControllerError),
}

/// Everything observable about a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub transcript: Vec<TranscriptRecord>,
    pub calls: Vec<crate::modem::CallRecord>,
    pub sms: Vec<crate::modem::SmsRecord>,
}

#[derive(Debug, Clone)]
enum SimEvent {
    Stimulus(EventKind),
    Tick,
    Action(ControllerAction),
    DrainToModem,
    DrainToController,
}

struct Sim {
    world: SensorWorld,
    controller: Controller,
    modem: Modem,
    to_modem: SerialChannel,
    to_controller: SerialChannel,
    controller_rx: Vec<u8>,
    queue: EventQueue<SimEvent>,
    transcript: Vec<TranscriptRecord>,
}

impl Sim {
    fn record(&mut self, at: SimTime, source: Source, kind: RecordKind, detail: String) {
        self.transcript
            .push(TranscriptRecord::new(at.as_ms(), source, kind, detail));
    }

    fn schedule(&mut self, at: SimTime, event: SimEvent) {
        self.queue
            .schedule(at, event)
            .expect("simulation never schedules behind the clock");
    }

    fn dispatch(&mut self, at: SimTime, event: SimEvent) {
        match event {
            SimEvent::Stimulus(kind) => self.handle_stimulus(at, kind),
            SimEvent::Tick => self.handle_tick(at),
            SimEvent::Action(action) => self.handle_action(at, action),
            SimEvent::DrainToModem => self.handle_drain_to_modem(at),
            SimEvent::DrainToController => {
                let bytes = self.to_controller.drain(at);
                self.controller_rx.extend_from_slice(&bytes);
            }
        }
    }

    fn handle_stimulus(&mut self, at: SimTime, kind: EventKind) {
        match kind.stimulus() {
            Some(stimulus) => {
                self.record(at, Source::Sensor, RecordKind::Stimulus, kind.describe());
                self.world.apply(&stimulus, at);
            }
            None => {
                let EventKind::Call(directive) = kind else {
                    unreachable!("only call directives have no stimulus");
                };
                self.record(at, Source::Harness, RecordKind::Call, directive.to_string());
                let out = self.modem.call_progress(directive, at);
                self.absorb_modem(out, at, RecordKind::Unsolicited);
            }
        }
    }

    fn handle_tick(&mut self, at: SimTime) {
        let inputs = self.world.sample(at);
        self.record(
            at,
            Source::Controller,
            RecordKind::Sample,
            format!(
                "sound={} pir={} magnetic={}",
                inputs.sound.counts(),
                inputs.pir.bit(),
                inputs.magnetic.bit()
            ),
        );
        let output = self.controller.tick(inputs, at);
        for timed in output.actions {
            self.schedule(timed.at, SimEvent::Action(timed.action));
        }
        self.schedule(output.next_tick, SimEvent::Tick);
    }

    fn handle_action(&mut self, at: SimTime, action: ControllerAction) {
        match action {
            ControllerAction::IndicatorOn => {
                self.record(at, Source::Controller, RecordKind::IndicatorOn, String::new());
            }
            ControllerAction::IndicatorOff => {
                self.record(at, Source::Controller, RecordKind::IndicatorOff, String::new());
            }
            ControllerAction::Log(tag) => {
                self.record(at, Source::Controller, RecordKind::Log, tag);
            }
            ControllerAction::UartWrite(bytes) => {
                self.record(
                    at,
                    Source::Controller,
                    RecordKind::UartWrite,
                    render_bytes(&bytes),
                );
                self.to_modem.send(&bytes, at);
                self.schedule(self.to_modem.busy_until(), SimEvent::DrainToModem);
            }
            ControllerAction::ReadModem => {
                let bytes = std::mem::take(&mut self.controller_rx);
                self.record(
                    at,
                    Source::Controller,
                    RecordKind::UartRead,
                    render_bytes(&bytes),
                );
            }
        }
    }

    fn handle_drain_to_modem(&mut self, at: SimTime) {
        let bytes = self.to_modem.drain(at);
        if bytes.is_empty() {
            return;
        }
        let out = self.modem.feed(&bytes, at);
        self.absorb_modem(out, at, RecordKind::Response);
    }

    /// Transcribes modem events and puts any output bytes on the return
    /// channel. `kind` distinguishes command responses from unsolicited
    /// output.
    fn absorb_modem(&mut self, out: FeedResult, at: SimTime, kind: RecordKind) {
        for event in out.events {
            match event {
                ModemEvent::CallStarted { number, at } => {
                    self.record(at, Source::Modem, RecordKind::CallStarted, number);
                }
                ModemEvent::CallAnswered { number, at } => {
                    self.record(at, Source::Modem, RecordKind::CallAnswered, number);
                }
                ModemEvent::CallEnded {
                    number,
                    outcome,
                    at,
                } => {
                    self.record(
                        at,
                        Source::Modem,
                        RecordKind::CallEnded,
                        format!("{number} {outcome}"),
                    );
                }
                ModemEvent::SmsSubmitted { number, body, at } => {
                    self.record(
                        at,
                        Source::Modem,
                        RecordKind::Sms,
                        format!("{number} {}", render_bytes(&body)),
                    );
                }
                ModemEvent::DirectiveIgnored { directive, at } => {
                    self.record(
                        at,
                        Source::Modem,
                        RecordKind::Warning,
                        format!("call directive `{directive}` ignored: no active call"),
                    );
                }
            }
        }
        if !out.response.is_empty() {
            self.record(at, Source::Modem, kind, render_bytes(&out.response));
            self.to_controller.send(&out.response, at);
            self.schedule(self.to_controller.busy_until(), SimEvent::DrainToController);
        }
    }
}

/// Runs `scenario` against `config` until `horizon_ms`, producing the
/// ordered transcript and the modem's call / SMS ledgers. Deterministic:
/// identical inputs give identical output, byte for byte.
pub fn run(config: &SimConfig, scenario: &Scenario, horizon_ms: u64) -> Result<RunOutput, RunError> {
    let last_ms = scenario.last_time_ms();
    if horizon_ms < last_ms {
        return Err(RunError::HorizonTooSmall {
            horizon_ms,
            last_ms,
        });
    }
    let horizon = SimTime::from_ms(horizon_ms);

    let pir = PirSensor::new(
        config.pir_position,
        config.pir_facing_deg,
        config.pir_half_angle_deg,
        config.pir_range_m,
        config.pir_hold_ms,
    );
    let (controller, boot_log) = Controller::new(config.firmware.clone(), SimTime::ZERO)?;
    let mut sim = Sim {
        world: SensorWorld::new(pir, SoundSensor::new(config.sound_baseline)),
        controller,
        modem: Modem::new(config.modem_echo),
        to_modem: SerialChannel::new(config.baud),
        to_controller: SerialChannel::new(config.baud),
        controller_rx: Vec::new(),
        queue: EventQueue::new(),
        transcript: Vec::new(),
    };

    sim.schedule(boot_log.at, SimEvent::Action(boot_log.action));
    // Scenario stimuli before the first tick so they win same-instant
    // ordering against the sample ticks scheduled from here on.
    for event in &scenario.events {
        sim.schedule(event.at, SimEvent::Stimulus(event.kind.clone()));
    }
    sim.schedule(
        SimTime::from_ms(config.firmware.boot_delay_ms),
        SimEvent::Tick,
    );

    loop {
        let Some(fired) = sim.queue.pop_due(horizon) else {
            break;
        };
        sim.dispatch(fired.at, fired.payload);
    }

    let (calls, sms) = sim.modem.records();
    Ok(RunOutput {
        calls: calls.to_vec(),
        sms: sms.to_vec(),
        transcript: sim.transcript,
    })
}

/// Outcome of checking one expectation.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub expectation: Expectation,
    pub pass: bool,
    pub message: String,
}

pub fn all_pass(verdicts: &[Verdict]) -> bool {
    verdicts.iter().all(|v| v.pass)
}

/// Evaluates each expectation against a finished run. Pure: order of
/// expectations does not matter, and re-checking gives the same verdicts.
pub fn check_expectations(output: &RunOutput, expectations: &[Expectation]) -> Vec<Verdict> {
    expectations
        .iter()
        .map(|expectation| {
            let (pass, message) = check_one(output, expectation);
            Verdict {
                expectation: expectation.clone(),
                pass,
                message,
            }
        })
        .collect()
}

fn check_one(output: &RunOutput, expectation: &Expectation) -> (bool, String) {
    match expectation {
        Expectation::Call { number, by_ms } => {
            let hit = output
                .calls
                .iter()
                .find(|c| &c.number == number && c.start.as_ms() <= *by_ms);
            match hit {
                Some(call) => (true, format!("call placed at {}", call.start)),
                None => (
                    false,
                    format!(
                        "no call to {number} by {by_ms} ms ({} calls in run)",
                        output.calls.len()
                    ),
                ),
            }
        }
        Expectation::Sms {
            number,
            body,
            by_ms,
        } => {
            let candidates: Vec<_> = output
                .sms
                .iter()
                .filter(|s| &s.number == number && s.submitted.as_ms() <= *by_ms)
                .collect();
            if let Some(hit) = candidates.iter().find(|s| &s.body == body) {
                return (true, format!("sms submitted at {}", hit.submitted));
            }
            match candidates.first() {
                Some(near) => {
                    let offset = first_diff(&near.body, body);
                    (
                        false,
                        format!(
                            "sms body mismatch at byte {offset}: expected {}, got {}",
                            describe_byte(body, offset),
                            describe_byte(&near.body, offset)
                        ),
                    )
                }
                None => (
                    false,
                    format!(
                        "no sms to {number} by {by_ms} ms ({} messages in run)",
                        output.sms.len()
                    ),
                ),
            }
        }
        Expectation::QuietUntil { until_ms } => {
            let offender = output.transcript.iter().find(|r| {
                r.t_ms < *until_ms
                    && matches!(
                        r.kind,
                        RecordKind::UartWrite | RecordKind::Response | RecordKind::Unsolicited
                    )
            });
            match offender {
                Some(record) => (
                    false,
                    format!(
                        "uart traffic at {} ms: {:?} {}",
                        record.t_ms,
                        record.kind,
                        record.detail.escape_default()
                    ),
                ),
                None => (true, format!("no uart traffic before {until_ms} ms")),
            }
        }
        Expectation::Indicator { pulses, by_ms } => {
            let count = output
                .transcript
                .iter()
                .filter(|r| r.kind == RecordKind::IndicatorOn && r.t_ms <= *by_ms)
                .count() as u64;
            if count == *pulses {
                (true, format!("{count} pulses by {by_ms} ms"))
            } else {
                (
                    false,
                    format!("expected {pulses} pulses by {by_ms} ms, counted {count}"),
                )
            }
        }
    }
}

/// First index where the byte sequences differ (their common length if one
/// is a prefix of the other).
fn first_diff(a: &[u8], b: &[u8]) -> usize {
    a.iter()
        .zip(b.iter())
        .position(|(x, y)| x != y)
        .unwrap_or_else(|| a.len().min(b.len()))
}

fn describe_byte(bytes: &[u8], offset: usize) -> String {
    match bytes.get(offset) {
        Some(b) => format!("0x{b:02X}"),
        None => "end of body".to_owned(),
    }
}
