//! Line-oriented scenario DSL: timed stimuli in, declared expectations out.
//!
//! One entry per line; `#` lines and blank lines are ignored:
//!
//! ```text
//! at <ms> door open|close
//! at <ms> intruder set <x> <y>
//! at <ms> intruder clear
//! at <ms> sound <counts> <duration_ms>
//! at <ms> call answer|reject|remote_hangup
//! expect call <number> by <ms>
//! expect sms <number> "<body>" by <ms>
//! expect quiet until <ms>
//! expect indicator <pulses> by <ms>
//! ```
//!
//! Quoted strings support the escapes `\n \r \t \" \\ \xNN`. Unknown
//! keywords are errors, not warnings, and errors carry the line number and
//! the offending token.

use std::fmt;

use thiserror::Error;

use crate::kernel::SimTime;
use crate::modem::CallDirective;
use crate::sensors::{DoorState, Stimulus};

/// One scripted occurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioEvent {
    pub at: SimTime,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    Door(DoorState),
    IntruderSet { x: f64, y: f64 },
    IntruderClear,
    Sound { amplitude: u16, duration_ms: u64 },
    Call(CallDirective),
}

impl EventKind {
    /// The sensor stimulus this event applies, or `None` for call
    /// directives, which are modem-side.
    pub fn stimulus(&self) -> Option<Stimulus> {
        match self {
            EventKind::Door(state) => Some(Stimulus::Door(*state)),
            EventKind::IntruderSet { x, y } => Some(Stimulus::IntruderSet { x: *x, y: *y }),
            EventKind::IntruderClear => Some(Stimulus::IntruderClear),
            EventKind::Sound {
                amplitude,
                duration_ms,
            } => Some(Stimulus::SoundBurst {
                amplitude: *amplitude,
                duration_ms: *duration_ms,
            }),
            EventKind::Call(_) => None,
        }
    }

    /// Transcript detail text.
    pub fn describe(&self) -> String {
        match self {
            EventKind::Door(DoorState::Open) => "door open".to_owned(),
            EventKind::Door(DoorState::Closed) => "door close".to_owned(),
            EventKind::IntruderSet { x, y } => format!("intruder set {x} {y}"),
            EventKind::IntruderClear => "intruder clear".to_owned(),
            EventKind::Sound {
                amplitude,
                duration_ms,
            } => format!("sound {amplitude} for {duration_ms} ms"),
            EventKind::Call(directive) => format!("call {directive}"),
        }
    }
}

/// One declared check against the finished run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expectation {
    Call { number: String, by_ms: u64 },
    Sms { number: String, body: Vec<u8>, by_ms: u64 },
    QuietUntil { until_ms: u64 },
    Indicator { pulses: u64, by_ms: u64 },
}

impl Expectation {
    pub fn deadline_ms(&self) -> u64 {
        match self {
            Expectation::Call { by_ms, .. } => *by_ms,
            Expectation::Sms { by_ms, .. } => *by_ms,
            Expectation::QuietUntil { until_ms } => *until_ms,
            Expectation::Indicator { by_ms, .. } => *by_ms,
        }
    }
}

impl fmt::Display for Expectation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expectation::Call { number, by_ms } => write!(f, "expect call {number} by {by_ms}"),
            Expectation::Sms {
                number,
                body,
                by_ms,
            } => write!(f, "expect sms {number} \"{}\" by {by_ms}", escape(body)),
            Expectation::QuietUntil { until_ms } => write!(f, "expect quiet until {until_ms}"),
            Expectation::Indicator { pulses, by_ms } => {
                write!(f, "expect indicator {pulses} by {by_ms}")
            }
        }
    }
}

/// Escapes body bytes back into DSL string syntax.
pub fn escape(bytes: &[u8]) -> String {
    let mut out = String::new();
    for &b in bytes {
        match b {
            b'\n' => out.push_str("\\n"),
            b'\r' => out.push_str("\\r"),
            b'\t' => out.push_str("\\t"),
            b'"' => out.push_str("\\\""),
            b'\\' => out.push_str("\\\\"),
            0x20..=0x7E => out.push(b as char),
            _ => out.push_str(&format!("\\x{b:02X}")),
        }
    }
    out
}

/// A parsed scenario: events sorted by time (stable, so same-instant events
/// keep file order) plus expectations in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Scenario {
    pub events: Vec<ScenarioEvent>,
    pub expectations: Vec<Expectation>,
}

impl Scenario {
    /// Latest instant named anywhere in the scenario.
    pub fn last_time_ms(&self) -> u64 {
        let events = self.events.iter().map(|e| e.at.as_ms());
        let deadlines = self.expectations.iter().map(|e| e.deadline_ms());
        events.chain(deadlines).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ScenarioError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Token {
    Word(String),
    Quoted(Vec<u8>),
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Word(w) => format!("`{w}`"),
            Token::Quoted(_) => "quoted string".to_owned(),
        }
    }
}

/// Splits a line into whitespace-separated words and quoted strings,
/// decoding escapes inside quotes.
pub(crate) fn lex_tokens(line: &str) -> Result<Vec<Token>, String> {
    let mut tokens = Vec::new();
    let mut chars = line.chars().peekable();
    loop {
        while chars.next_if(|c| c.is_whitespace()).is_some() {}
        let Some(&c) = chars.peek() else { break };
        if c == '"' {
            chars.next();
            let mut bytes = Vec::new();
            loop {
                match chars.next() {
                    None => return Err("unterminated quoted string".to_owned()),
                    Some('"') => break,
                    Some('\\') => match chars.next() {
                        Some('n') => bytes.push(b'\n'),
                        Some('r') => bytes.push(b'\r'),
                        Some('t') => bytes.push(b'\t'),
                        Some('"') => bytes.push(b'"'),
                        Some('\\') => bytes.push(b'\\'),
                        Some('x') => {
                            let hi = chars.next();
                            let lo = chars.next();
                            let (Some(hi), Some(lo)) = (hi, lo) else {
                                return Err("truncated \\x escape".to_owned());
                            };
                            let hex: String = [hi, lo].iter().collect();
                            let value = u8::from_str_radix(&hex, 16)
                                .map_err(|_| format!("bad \\x escape `\\x{hex}`"))?;
                            bytes.push(value);
                        }
                        Some(other) => return Err(format!("unknown escape `\\{other}`")),
                        None => return Err("unterminated quoted string".to_owned()),
                    },
                    Some(ch) => {
                        let mut buf = [0u8; 4];
                        bytes.extend_from_slice(ch.encode_utf8(&mut buf).as_bytes());
                    }
                }
            }
            tokens.push(Token::Quoted(bytes));
        } else {
            let mut word = String::new();
            while let Some(&ch) = chars.peek() {
                if ch.is_whitespace() {
                    break;
                }
                word.push(ch);
                chars.next();
            }
            tokens.push(Token::Word(word));
        }
    }
    Ok(tokens)
}

struct LineParser<'a> {
    tokens: std::slice::Iter<'a, Token>,
    line: usize,
}

impl<'a> LineParser<'a> {
    fn err(&self, message: impl Into<String>) -> ScenarioError {
        ScenarioError {
            line: self.line,
            message: message.into(),
        }
    }

    fn word(&mut self, what: &str) -> Result<&'a str, ScenarioError> {
        match self.tokens.next() {
            Some(Token::Word(w)) => Ok(w),
            Some(t) => Err(self.err(format!("expected {what}, found {}", t.describe()))),
            None => Err(self.err(format!("expected {what}, found end of line"))),
        }
    }

    fn quoted(&mut self, what: &str) -> Result<Vec<u8>, ScenarioError> {
        match self.tokens.next() {
            Some(Token::Quoted(b)) => Ok(b.clone()),
            Some(t) => Err(self.err(format!("expected {what}, found {}", t.describe()))),
            None => Err(self.err(format!("expected {what}, found end of line"))),
        }
    }

    fn keyword(&mut self, expected: &str) -> Result<(), ScenarioError> {
        let word = self.word(&format!("`{expected}`"))?;
        if word != expected {
            return Err(self.err(format!("expected `{expected}`, found `{word}`")));
        }
        Ok(())
    }

    fn u64(&mut self, what: &str) -> Result<u64, ScenarioError> {
        let word = self.word(what)?;
        word.parse()
            .map_err(|_| self.err(format!("invalid {what} `{word}`")))
    }

    fn u16(&mut self, what: &str) -> Result<u16, ScenarioError> {
        let word = self.word(what)?;
        word.parse()
            .map_err(|_| self.err(format!("invalid {what} `{word}`")))
    }

    fn f64(&mut self, what: &str) -> Result<f64, ScenarioError> {
        let word = self.word(what)?;
        let value: f64 = word
            .parse()
            .map_err(|_| self.err(format!("invalid {what} `{word}`")))?;
        if !value.is_finite() {
            return Err(self.err(format!("{what} must be finite, found `{word}`")));
        }
        Ok(value)
    }

    fn number(&mut self) -> Result<String, ScenarioError> {
        let word = self.word("phone number")?;
        let ok = !word.is_empty()
            && word
                .chars()
                .all(|c| c.is_ascii_digit() || matches!(c, '+' | '*' | '#'));
        if !ok {
            return Err(self.err(format!("invalid phone number `{word}`")));
        }
        Ok(word.to_owned())
    }

    fn end(&mut self) -> Result<(), ScenarioError> {
        match self.tokens.next() {
            None => Ok(()),
            Some(t) => Err(self.err(format!("unexpected trailing {}", t.describe()))),
        }
    }
}

/// Parses a scenario file.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let mut scenario = Scenario::default();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens =
            lex_tokens(trimmed).map_err(|message| ScenarioError { line, message })?;
        let mut p = LineParser {
            tokens: tokens.iter(),
            line,
        };
        match p.word("`at` or `expect`")? {
            "at" => {
                let at = SimTime::from_ms(p.u64("time in ms")?);
                let kind = match p.word("event kind")? {
                    "door" => match p.word("door action")? {
                        "open" => EventKind::Door(DoorState::Open),
                        "close" => EventKind::Door(DoorState::Closed),
                        other => return Err(p.err(format!("unknown door action `{other}`"))),
                    },
                    "intruder" => match p.word("intruder action")? {
                        "set" => EventKind::IntruderSet {
                            x: p.f64("x coordinate")?,
                            y: p.f64("y coordinate")?,
                        },
                        "clear" => EventKind::IntruderClear,
                        other => {
                            return Err(p.err(format!("unknown intruder action `{other}`")))
                        }
                    },
                    "sound" => EventKind::Sound {
                        amplitude: p.u16("amplitude counts")?,
                        duration_ms: p.u64("duration in ms")?,
                    },
                    "call" => match p.word("call directive")? {
                        "answer" => EventKind::Call(CallDirective::Answer),
                        "reject" => EventKind::Call(CallDirective::Reject),
                        "remote_hangup" => EventKind::Call(CallDirective::RemoteHangup),
                        other => return Err(p.err(format!("unknown call directive `{other}`"))),
                    },
                    other => return Err(p.err(format!("unknown event kind `{other}`"))),
                };
                p.end()?;
                scenario.events.push(ScenarioEvent { at, kind });
            }
            "expect" => {
                let expectation = match p.word("expectation kind")? {
                    "call" => {
                        let number = p.number()?;
                        p.keyword("by")?;
                        Expectation::Call {
                            number,
                            by_ms: p.u64("deadline in ms")?,
                        }
                    }
                    "sms" => {
                        let number = p.number()?;
                        let body = p.quoted("quoted sms body")?;
                        p.keyword("by")?;
                        Expectation::Sms {
                            number,
                            body,
                            by_ms: p.u64("deadline in ms")?,
                        }
                    }
                    "quiet" => {
                        p.keyword("until")?;
                        Expectation::QuietUntil {
                            until_ms: p.u64("deadline in ms")?,
                        }
                    }
                    "indicator" => {
                        let pulses = p.u64("pulse count")?;
                        p.keyword("by")?;
                        Expectation::Indicator {
                            pulses,
                            by_ms: p.u64("deadline in ms")?,
                        }
                    }
                    other => return Err(p.err(format!("unknown expectation kind `{other}`"))),
                };
                p.end()?;
                scenario.expectations.push(expectation);
            }
            other => return Err(p.err(format!("unknown keyword `{other}`"))),
        }
    }
    scenario.events.sort_by_key(|e| e.at);
    Ok(scenario)
}
