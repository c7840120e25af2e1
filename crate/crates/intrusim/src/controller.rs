//! The firmware control loop: boot delay, periodic sampling, threshold
//! checks, indicator pulses, and the dial / SMS byte sequences written to
//! the modem UART.
//!
//! Alert branches emit their whole action chain up front, with timestamps
//! spaced exactly like the blocking delays of the control loop they model;
//! sampling stays suspended until the chain finishes.

use thiserror::Error;

use crate::kernel::SimTime;
use crate::sensors::{AdcReading, PinLevel, SensorInputs};

/// Spacing between the steps of the SMS transaction.
pub const SMS_STEP_MS: u64 = 1000;

/// Ctrl-Z, the byte that terminates an SMS body.
pub const SMS_TERMINATOR: u8 = 0x1A;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ControllerError {
    #[error("dial number {0:?} is empty or contains characters outside [+0-9]")]
    InvalidDialNumber(String),
    #[error("sms text contains the terminator byte 0x1A")]
    SmsTextContainsTerminator,
    #[error("sound_threshold {0} is outside the 10-bit range 0..=1023")]
    SoundThresholdOutOfRange(u16),
    #[error("{0} must be non-zero")]
    ZeroDuration(&'static str),
}

/// What the sound branch does beyond pulsing the indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SoundPolicy {
    /// Pulse the indicator only; no modem traffic.
    #[default]
    IndicatorOnly,
    /// Pulse the indicator, then dial the owner.
    IndicatorDial,
}

/// Controller constants. Defaults: threshold 800 counts, 500 ms sampling,
/// 15 s boot delay, 1 s indicator pulses, 2 s post-dial wait, and sound
/// alerts kept off the modem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FirmwareConfig {
    pub owner_number: String,
    pub sound_threshold: u16,
    pub sample_period_ms: u64,
    pub boot_delay_ms: u64,
    /// Width of one indicator phase; the pulse is `indicator_pulse_ms` on
    /// followed by `indicator_pulse_ms` off.
    pub indicator_pulse_ms: u64,
    pub post_dial_wait_ms: u64,
    pub sound_policy: SoundPolicy,
    pub sms_text: Vec<u8>,
}

impl Default for FirmwareConfig {
    fn default() -> Self {
        FirmwareConfig {
            owner_number: "+2347048850497".to_owned(),
            sound_threshold: 800,
            sample_period_ms: 500,
            boot_delay_ms: 15_000,
            indicator_pulse_ms: 1000,
            post_dial_wait_ms: 2000,
            sound_policy: SoundPolicy::IndicatorOnly,
            sms_text: b"ALERT!!\n Intruder detected!!!".to_vec(),
        }
    }
}

impl FirmwareConfig {
    pub fn validate(&self) -> Result<(), ControllerError> {
        if self.sound_threshold > AdcReading::MAX_COUNTS {
            return Err(ControllerError::SoundThresholdOutOfRange(
                self.sound_threshold,
            ));
        }
        for (name, value) in [
            ("sample_period_ms", self.sample_period_ms),
            ("boot_delay_ms", self.boot_delay_ms),
            ("indicator_pulse_ms", self.indicator_pulse_ms),
            ("post_dial_wait_ms", self.post_dial_wait_ms),
        ] {
            if value == 0 {
                return Err(ControllerError::ZeroDuration(name));
            }
        }
        dial_sequence(&self.owner_number)?;
        if self.sms_text.contains(&SMS_TERMINATOR) {
            return Err(ControllerError::SmsTextContainsTerminator);
        }
        Ok(())
    }
}

/// Which sensor branch raised the running alert.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlertSource {
    Sound,
    Pir,
    Magnetic,
}

/// Controller lifecycle. `Alerting` flips back to `Monitoring` on the first
/// tick at or after `until`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerPhase {
    Booting { until: SimTime },
    Monitoring,
    Alerting { source: AlertSource, until: SimTime },
}

/// One observable controller output, emitted at a known instant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ControllerAction {
    IndicatorOn,
    IndicatorOff,
    UartWrite(Vec<u8>),
    Log(String),
    /// Drain and log whatever the modem has sent back so far.
    ReadModem,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimedAction {
    pub at: SimTime,
    pub action: ControllerAction,
}

/// Result of one sample tick: alert actions with absolute timestamps, plus
/// the instant the next sample is due.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TickOutput {
    pub actions: Vec<TimedAction>,
    pub next_tick: SimTime,
}

/// True iff the sample is strictly above the threshold.
pub fn evaluate_sound(cfg: &FirmwareConfig, val: AdcReading) -> bool {
    val.counts() > cfg.sound_threshold
}

/// PIR output is active-low: triggered at logic 0.
pub fn evaluate_pir(level: PinLevel) -> bool {
    level.is_low()
}

/// The pulled-up door input reads 1 when the door (or the wiring) is open.
pub fn evaluate_magnetic(level: PinLevel) -> bool {
    level.is_high()
}

fn is_dial_number(number: &str) -> bool {
    !number.is_empty()
        && number
            .chars()
            .all(|c| c.is_ascii_digit() || c == '+')
}

/// Bytes of a voice dial command: `ATD<number>;\r\n`.
pub fn dial_sequence(number: &str) -> Result<Vec<u8>, ControllerError> {
    if !is_dial_number(number) {
        return Err(ControllerError::InvalidDialNumber(number.to_owned()));
    }
    Ok(format!("ATD{number};\r\n").into_bytes())
}

/// The four SMS transaction writes as `(offset_ms, bytes)` pairs, spaced
/// [`SMS_STEP_MS`] apart: text mode select, the destination header ending in
/// a bare CR, the body, and the Ctrl-Z terminator.
pub fn sms_sequence(number: &str, text: &[u8]) -> Result<Vec<(u64, Vec<u8>)>, ControllerError> {
    if !is_dial_number(number) {
        return Err(ControllerError::InvalidDialNumber(number.to_owned()));
    }
    if text.contains(&SMS_TERMINATOR) {
        return Err(ControllerError::SmsTextContainsTerminator);
    }
    Ok(vec![
        (0, b"AT+CMGF=1\r\n".to_vec()),
        (SMS_STEP_MS, format!("AT+CMGS=\"{number}\"\r").into_bytes()),
        (2 * SMS_STEP_MS, text.to_vec()),
        (3 * SMS_STEP_MS, vec![SMS_TERMINATOR]),
    ])
}

/// The control loop, stepped once per sample period by the harness.
#[derive(Debug, Clone)]
pub struct Controller {
    cfg: FirmwareConfig,
    phase: ControllerPhase,
    dial_bytes: Vec<u8>,
}

impl Controller {
    /// Powers the controller on at `now`. It boots for `boot_delay_ms`
    /// before the first sample; the returned action is the power-on log.
    pub fn new(cfg: FirmwareConfig, now: SimTime) -> Result<(Self, TimedAction), ControllerError> {
        cfg.validate()?;
        let dial_bytes = dial_sequence(&cfg.owner_number)?;
        let until = now.plus_ms(cfg.boot_delay_ms);
        let boot_log = TimedAction {
            at: now,
            action: ControllerAction::Log("initializing...".to_owned()),
        };
        Ok((
            Controller {
                cfg,
                phase: ControllerPhase::Booting { until },
                dial_bytes,
            },
            boot_log,
        ))
    }

    pub fn phase(&self) -> ControllerPhase {
        self.phase
    }

    pub fn config(&self) -> &FirmwareConfig {
        &self.cfg
    }

    /// Samples the three inputs at `now` and evaluates sound, then PIR, then
    /// magnetic. Every triggering branch appends its full action chain;
    /// simultaneous triggers run back to back in that order. While booting
    /// or mid-alert this is a no-op that reports when to call back.
    pub fn tick(&mut self, inputs: SensorInputs, now: SimTime) -> TickOutput {
        match self.phase {
            ControllerPhase::Booting { until } | ControllerPhase::Alerting { until, .. }
                if now < until =>
            {
                return TickOutput {
                    actions: Vec::new(),
                    next_tick: until,
                };
            }
            _ => {}
        }
        self.phase = ControllerPhase::Monitoring;

        let mut actions = Vec::new();
        let mut cursor = now;
        let mut source = None;

        if evaluate_sound(&self.cfg, inputs.sound) {
            self.log(&mut actions, cursor, "noise detected");
            cursor = self.indicator_pulse(&mut actions, cursor);
            if self.cfg.sound_policy == SoundPolicy::IndicatorDial {
                cursor = self.dial(&mut actions, cursor);
            }
            source = Some(AlertSource::Sound);
        }
        if evaluate_pir(inputs.pir) {
            self.log(&mut actions, cursor, "PIR");
            cursor = self.indicator_pulse(&mut actions, cursor);
            cursor = self.dial(&mut actions, cursor);
            source = Some(AlertSource::Pir);
        }
        if evaluate_magnetic(inputs.magnetic) {
            self.log(&mut actions, cursor, "Magnetic");
            cursor = self.indicator_pulse(&mut actions, cursor);
            cursor = self.dial(&mut actions, cursor);
            cursor = self.sms(&mut actions, cursor);
            source = Some(AlertSource::Magnetic);
        }

        if let Some(source) = source {
            self.phase = ControllerPhase::Alerting {
                source,
                until: cursor,
            };
        }
        TickOutput {
            actions,
            next_tick: cursor.plus_ms(self.cfg.sample_period_ms),
        }
    }

    fn log(&self, actions: &mut Vec<TimedAction>, at: SimTime, tag: &str) {
        actions.push(TimedAction {
            at,
            action: ControllerAction::Log(tag.to_owned()),
        });
    }

    /// Indicator on, then off one pulse width later; the branch resumes
    /// after a second pulse width of silence.
    fn indicator_pulse(&self, actions: &mut Vec<TimedAction>, start: SimTime) -> SimTime {
        let pulse = self.cfg.indicator_pulse_ms;
        actions.push(TimedAction {
            at: start,
            action: ControllerAction::IndicatorOn,
        });
        actions.push(TimedAction {
            at: start.plus_ms(pulse),
            action: ControllerAction::IndicatorOff,
        });
        start.plus_ms(2 * pulse)
    }

    /// Writes the dial string, then reads back the modem response at the end
    /// of the post-dial wait.
    fn dial(&self, actions: &mut Vec<TimedAction>, start: SimTime) -> SimTime {
        actions.push(TimedAction {
            at: start,
            action: ControllerAction::UartWrite(self.dial_bytes.clone()),
        });
        let done = start.plus_ms(self.cfg.post_dial_wait_ms);
        actions.push(TimedAction {
            at: done,
            action: ControllerAction::ReadModem,
        });
        done
    }

    /// The four SMS writes, a response read one step after the terminator,
    /// and one more step before the loop resumes.
    fn sms(&self, actions: &mut Vec<TimedAction>, start: SimTime) -> SimTime {
        let steps = sms_sequence(&self.cfg.owner_number, &self.cfg.sms_text)
            .expect("config validated at construction");
        for (offset, bytes) in steps {
            actions.push(TimedAction {
                at: start.plus_ms(offset),
                action: ControllerAction::UartWrite(bytes),
            });
        }
        actions.push(TimedAction {
            at: start.plus_ms(4 * SMS_STEP_MS),
            action: ControllerAction::ReadModem,
        });
        start.plus_ms(5 * SMS_STEP_MS)
    }
}
