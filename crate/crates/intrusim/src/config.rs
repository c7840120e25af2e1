//! `key = value` run configuration: firmware constants, sensor geometry,
//! and link options. An empty file means all defaults; unknown keys are
//! errors. `#` lines and blank lines are ignored.

use thiserror::Error;

use crate::controller::{dial_sequence, FirmwareConfig, SoundPolicy, SMS_TERMINATOR};
use crate::scenario::{lex_tokens, Token};
use crate::sensors::AdcReading;

/// Everything a run needs beyond the scenario itself.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub firmware: FirmwareConfig,
    /// PIR mounting point in meters.
    pub pir_position: (f64, f64),
    /// Boresight direction in degrees (0 = +x, counterclockwise).
    pub pir_facing_deg: f64,
    /// Half of the total field of view; default 45 for a 90° field.
    pub pir_half_angle_deg: f64,
    pub pir_range_m: f64,
    pub pir_hold_ms: u64,
    pub sound_baseline: u16,
    pub baud: u32,
    pub modem_echo: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            firmware: FirmwareConfig::default(),
            pir_position: (0.0, 0.0),
            pir_facing_deg: 0.0,
            pir_half_angle_deg: 45.0,
            pir_range_m: 6.1,
            pir_hold_ms: 2000,
            sound_baseline: 0,
            baud: 9600,
            modem_echo: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

struct KeyValue<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

impl KeyValue<'_> {
    fn err(&self, message: impl Into<String>) -> ConfigError {
        ConfigError {
            line: self.line,
            message: message.into(),
        }
    }

    fn u64(&self) -> Result<u64, ConfigError> {
        self.value
            .parse()
            .map_err(|_| self.err(format!("{}: invalid integer `{}`", self.key, self.value)))
    }

    fn positive_u64(&self) -> Result<u64, ConfigError> {
        let v = self.u64()?;
        if v == 0 {
            return Err(self.err(format!("{} must be greater than zero", self.key)));
        }
        Ok(v)
    }

    fn adc_counts(&self) -> Result<u16, ConfigError> {
        let v: u16 = self
            .value
            .parse()
            .map_err(|_| self.err(format!("{}: invalid integer `{}`", self.key, self.value)))?;
        if v > AdcReading::MAX_COUNTS {
            return Err(self.err(format!(
                "{} must be within 0..=1023, found {v}",
                self.key
            )));
        }
        Ok(v)
    }

    fn f64(&self) -> Result<f64, ConfigError> {
        let v: f64 = self
            .value
            .parse()
            .map_err(|_| self.err(format!("{}: invalid number `{}`", self.key, self.value)))?;
        if !v.is_finite() {
            return Err(self.err(format!("{} must be finite", self.key)));
        }
        Ok(v)
    }

    fn bool(&self) -> Result<bool, ConfigError> {
        match self.value {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(self.err(format!("{}: expected true or false, found `{other}`", self.key))),
        }
    }

    fn quoted_bytes(&self) -> Result<Vec<u8>, ConfigError> {
        let tokens = lex_tokens(self.value).map_err(|m| self.err(format!("{}: {m}", self.key)))?;
        match tokens.as_slice() {
            [Token::Quoted(bytes)] => Ok(bytes.clone()),
            _ => Err(self.err(format!("{} must be one quoted string", self.key))),
        }
    }
}

/// Parses configuration text; absent keys keep their defaults.
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    let mut config = SimConfig::default();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(ConfigError {
                line,
                message: format!("expected `key = value`, found `{trimmed}`"),
            });
        };
        let kv = KeyValue {
            line,
            key: key.trim(),
            value: value.trim(),
        };
        match kv.key {
            "owner_number" => {
                dial_sequence(kv.value).map_err(|e| kv.err(e.to_string()))?;
                config.firmware.owner_number = kv.value.to_owned();
            }
            "sound_threshold" => config.firmware.sound_threshold = kv.adc_counts()?,
            "sample_period_ms" => config.firmware.sample_period_ms = kv.positive_u64()?,
            "boot_delay_ms" => config.firmware.boot_delay_ms = kv.positive_u64()?,
            "indicator_pulse_ms" => config.firmware.indicator_pulse_ms = kv.positive_u64()?,
            "post_dial_wait_ms" => config.firmware.post_dial_wait_ms = kv.positive_u64()?,
            "sound_policy" => {
                config.firmware.sound_policy = match kv.value {
                    "indicator_only" => SoundPolicy::IndicatorOnly,
                    "indicator_dial" => SoundPolicy::IndicatorDial,
                    other => {
                        return Err(kv.err(format!("unknown sound_policy `{other}`")));
                    }
                }
            }
            "sms_text" => {
                let bytes = kv.quoted_bytes()?;
                if bytes.contains(&SMS_TERMINATOR) {
                    return Err(kv.err("sms_text must not contain the 0x1A terminator byte"));
                }
                config.firmware.sms_text = bytes;
            }
            "pir_x" => config.pir_position.0 = kv.f64()?,
            "pir_y" => config.pir_position.1 = kv.f64()?,
            "pir_facing_deg" => config.pir_facing_deg = kv.f64()?,
            "pir_half_angle_deg" => {
                let v = kv.f64()?;
                if !(v > 0.0 && v < 180.0) {
                    return Err(kv.err(format!(
                        "pir_half_angle_deg must be in (0, 180), found {v}"
                    )));
                }
                config.pir_half_angle_deg = v;
            }
            "pir_range_m" => {
                let v = kv.f64()?;
                if v <= 0.0 {
                    return Err(kv.err(format!("pir_range_m must be positive, found {v}")));
                }
                config.pir_range_m = v;
            }
            "pir_hold_ms" => config.pir_hold_ms = kv.u64()?,
            "sound_baseline" => config.sound_baseline = kv.adc_counts()?,
            "baud" => {
                let v = kv.u64()?;
                if v == 0 || v > u64::from(u32::MAX) {
                    return Err(kv.err(format!("baud out of range: {v}")));
                }
                config.baud = v as u32;
            }
            "modem_echo" => config.modem_echo = kv.bool()?,
            other => {
                return Err(kv.err(format!("unknown key `{other}`")));
            }
        }
    }
    Ok(config)
}
