//! Emulated SIM800-class modem: parses the AT command byte stream, runs the
//! call / SMS state machine, emits protocol responses, and keeps append-only
//! ledgers of the calls placed and messages sent.
//!
//! Framing rules: in command mode lines end at CR or CRLF (a lone LF is not
//! a terminator); while an SMS body is being collected the only terminator
//! is Ctrl-Z (0x1A). Every complete non-empty command line gets exactly one
//! final response — `OK\r\n`, `ERROR\r\n`, the `> ` prompt, or
//! `+CMGS: <n>\r\nOK\r\n` — and empty lines are ignored. Responses other
//! than the prompt are always CRLF-terminated.

use crate::kernel::SimTime;

/// Longest accepted command line. Anything longer is discarded with ERROR,
/// so a terminator-free byte stream cannot grow the buffer without bound.
const MAX_LINE_BYTES: usize = 512;

/// One parsed command line. Parsing is total: every input maps to some
/// variant, with `Unknown` as the fallback. The `AT` prefix and the verbs
/// are case-insensitive; dial strings keep their exact characters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AtCommand {
    /// Bare `AT`.
    Ping,
    /// `ATD<number>[;]` — voice call iff the dial string ends in `;`.
    Dial { number: String, voice: bool },
    /// `AT+CMGF=<0|1>`.
    SetMessageFormat { mode: u8 },
    /// `AT+CMGS="<number>"`.
    SendMessageStart { number: String },
    /// `ATH` / `ATH0`.
    Hangup,
    Unknown { raw: String },
}

fn is_dial_string(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '+' | '*' | '#'))
}

/// Parses one complete command line (terminator already stripped).
pub fn parse_command_line(line: &[u8]) -> AtCommand {
    let raw = String::from_utf8_lossy(line).into_owned();
    let upper = raw.to_ascii_uppercase();
    if !upper.starts_with("AT") {
        return AtCommand::Unknown { raw };
    }
    let body = &raw[2..];
    let ubody = &upper[2..];
    if body.is_empty() {
        return AtCommand::Ping;
    }
    if ubody.starts_with('D') {
        let rest = &body[1..];
        let (number, voice) = match rest.strip_suffix(';') {
            Some(n) => (n, true),
            None => (rest, false),
        };
        if is_dial_string(number) {
            return AtCommand::Dial {
                number: number.to_owned(),
                voice,
            };
        }
        return AtCommand::Unknown { raw };
    }
    if let Some(arg) = ubody.strip_prefix("+CMGF=") {
        return match arg {
            "0" => AtCommand::SetMessageFormat { mode: 0 },
            "1" => AtCommand::SetMessageFormat { mode: 1 },
            _ => AtCommand::Unknown { raw },
        };
    }
    if ubody.starts_with("+CMGS=") {
        let arg = &body["+CMGS=".len()..];
        if let Some(number) = arg
            .strip_prefix('"')
            .and_then(|s| s.strip_suffix('"'))
        {
            if is_dial_string(number) {
                return AtCommand::SendMessageStart {
                    number: number.to_owned(),
                };
            }
        }
        return AtCommand::Unknown { raw };
    }
    if ubody == "H" || ubody == "H0" {
        return AtCommand::Hangup;
    }
    AtCommand::Unknown { raw }
}

/// How a closed call ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CallOutcome {
    Answered,
    Unanswered,
    Hangup,
}

impl std::fmt::Display for CallOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CallOutcome::Answered => "answered",
            CallOutcome::Unanswered => "unanswered",
            CallOutcome::Hangup => "hangup",
        })
    }
}

/// One placed call; `end` and `outcome` stay `None` while it is open.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallRecord {
    pub number: String,
    pub start: SimTime,
    pub end: Option<SimTime>,
    pub outcome: Option<CallOutcome>,
}

/// One submitted SMS. The body is exactly the bytes received between the
/// `> ` prompt and the Ctrl-Z terminator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmsRecord {
    pub number: String,
    pub body: Vec<u8>,
    pub submitted: SimTime,
}

/// Scenario-driven progress on the active call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CallDirective {
    Answer,
    Reject,
    RemoteHangup,
}

impl std::fmt::Display for CallDirective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CallDirective::Answer => "answer",
            CallDirective::Reject => "reject",
            CallDirective::RemoteHangup => "remote_hangup",
        })
    }
}

/// Externally observable state, for inspection and tests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModemState {
    Idle,
    InCall { number: String, since: SimTime },
    AwaitingSmsBody { number: String, buffer: Vec<u8> },
}

/// Something the modem did that the transcript should show.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModemEvent {
    CallStarted { number: String, at: SimTime },
    CallAnswered { number: String, at: SimTime },
    CallEnded { number: String, outcome: CallOutcome, at: SimTime },
    SmsSubmitted { number: String, body: Vec<u8>, at: SimTime },
    DirectiveIgnored { directive: CallDirective, at: SimTime },
}

/// Bytes to put on the wire plus the events produced while absorbing input.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeedResult {
    pub response: Vec<u8>,
    pub events: Vec<ModemEvent>,
}

#[derive(Debug, Clone)]
enum Session {
    Command,
    SmsBody { number: String, body: Vec<u8> },
}

#[derive(Debug, Clone)]
struct ActiveCall {
    index: usize,
    answered: bool,
}

/// The virtual modem. One per simulation; feed it bytes, read back
/// responses, inspect the ledgers.
#[derive(Debug, Clone)]
pub struct Modem {
    echo: bool,
    text_mode: bool,
    session: Session,
    call: Option<ActiveCall>,
    line: Vec<u8>,
    swallow_lf: bool,
    next_sms_ref: u32,
    calls: Vec<CallRecord>,
    sms: Vec<SmsRecord>,
}

impl Modem {
    /// `echo` mirrors received bytes back before processing them; it is off
    /// by default, as if the host had sent `ATE0`.
    pub fn new(echo: bool) -> Self {
        Modem {
            echo,
            text_mode: false,
            session: Session::Command,
            call: None,
            line: Vec::new(),
            swallow_lf: false,
            next_sms_ref: 1,
            calls: Vec::new(),
            sms: Vec::new(),
        }
    }

    pub fn text_mode(&self) -> bool {
        self.text_mode
    }

    pub fn state(&self) -> ModemState {
        match &self.session {
            Session::SmsBody { number, body } => ModemState::AwaitingSmsBody {
                number: number.clone(),
                buffer: body.clone(),
            },
            Session::Command => match &self.call {
                Some(active) => {
                    let record = &self.calls[active.index];
                    ModemState::InCall {
                        number: record.number.clone(),
                        since: record.start,
                    }
                }
                None => ModemState::Idle,
            },
        }
    }

    /// The append-only ledgers, in chronological order.
    pub fn records(&self) -> (&[CallRecord], &[SmsRecord]) {
        (&self.calls, &self.sms)
    }

    /// Absorbs an arbitrary byte stream. Never fails; unrecognized lines
    /// come back as `ERROR\r\n`.
    pub fn feed(&mut self, bytes: &[u8], now: SimTime) -> FeedResult {
        let mut result = FeedResult::default();
        for &byte in bytes {
            if self.echo {
                result.response.push(byte);
            }
            match &mut self.session {
                Session::SmsBody { .. } => {
                    if byte == crate::controller::SMS_TERMINATOR {
                        self.finish_sms(now, &mut result);
                    } else if let Session::SmsBody { body, .. } = &mut self.session {
                        body.push(byte);
                    }
                }
                Session::Command => {
                    if self.swallow_lf {
                        self.swallow_lf = false;
                        if byte == b'\n' {
                            continue;
                        }
                    }
                    if byte == b'\r' {
                        self.swallow_lf = true;
                        let line = std::mem::take(&mut self.line);
                        if !line.is_empty() {
                            let command = parse_command_line(&line);
                            self.execute(command, now, &mut result);
                        }
                    } else {
                        self.line.push(byte);
                        if self.line.len() > MAX_LINE_BYTES {
                            self.line.clear();
                            result.response.extend_from_slice(b"ERROR\r\n");
                        }
                    }
                }
            }
        }
        result
    }

    fn execute(&mut self, command: AtCommand, now: SimTime, result: &mut FeedResult) {
        match command {
            AtCommand::Ping => result.response.extend_from_slice(b"OK\r\n"),
            AtCommand::Dial { number, voice } => {
                if self.call.is_some() {
                    result.response.extend_from_slice(b"ERROR\r\n");
                } else if !voice {
                    // Data calls are not supported; the line just drops.
                    result.response.extend_from_slice(b"NO CARRIER\r\n");
                } else {
                    self.calls.push(CallRecord {
                        number: number.clone(),
                        start: now,
                        end: None,
                        outcome: None,
                    });
                    self.call = Some(ActiveCall {
                        index: self.calls.len() - 1,
                        answered: false,
                    });
                    result.events.push(ModemEvent::CallStarted { number, at: now });
                    result.response.extend_from_slice(b"OK\r\n");
                }
            }
            AtCommand::SetMessageFormat { mode } => {
                self.text_mode = mode == 1;
                result.response.extend_from_slice(b"OK\r\n");
            }
            AtCommand::SendMessageStart { number } => {
                if !self.text_mode {
                    result.response.extend_from_slice(b"ERROR\r\n");
                } else {
                    self.session = Session::SmsBody {
                        number,
                        body: Vec::new(),
                    };
                    result.response.extend_from_slice(b"> ");
                }
            }
            AtCommand::Hangup => {
                if let Some(active) = self.call.take() {
                    let record = &mut self.calls[active.index];
                    record.end = Some(now);
                    record.outcome = Some(CallOutcome::Hangup);
                    result.events.push(ModemEvent::CallEnded {
                        number: record.number.clone(),
                        outcome: CallOutcome::Hangup,
                        at: now,
                    });
                }
                result.response.extend_from_slice(b"OK\r\n");
            }
            AtCommand::Unknown { .. } => result.response.extend_from_slice(b"ERROR\r\n"),
        }
    }

    fn finish_sms(&mut self, now: SimTime, result: &mut FeedResult) {
        let Session::SmsBody { number, body } =
            std::mem::replace(&mut self.session, Session::Command)
        else {
            unreachable!("finish_sms is only called in body mode");
        };
        let reference = self.next_sms_ref;
        self.next_sms_ref += 1;
        self.sms.push(SmsRecord {
            number: number.clone(),
            body: body.clone(),
            submitted: now,
        });
        result.events.push(ModemEvent::SmsSubmitted {
            number,
            body,
            at: now,
        });
        result
            .response
            .extend_from_slice(format!("+CMGS: {reference}\r\nOK\r\n").as_bytes());
    }

    /// Applies a scenario call directive. Remote termination emits the
    /// unsolicited `NO CARRIER\r\n`; a directive with no active call is
    /// ignored with a warning event.
    pub fn call_progress(&mut self, directive: CallDirective, now: SimTime) -> FeedResult {
        let mut result = FeedResult::default();
        let Some(active) = self.call.as_mut() else {
            result
                .events
                .push(ModemEvent::DirectiveIgnored { directive, at: now });
            return result;
        };
        match directive {
            CallDirective::Answer => {
                active.answered = true;
                let number = self.calls[active.index].number.clone();
                result
                    .events
                    .push(ModemEvent::CallAnswered { number, at: now });
            }
            CallDirective::Reject | CallDirective::RemoteHangup => {
                let answered = active.answered;
                let index = active.index;
                self.call = None;
                let record = &mut self.calls[index];
                record.end = Some(now);
                let outcome = if answered {
                    CallOutcome::Answered
                } else {
                    CallOutcome::Unanswered
                };
                record.outcome = Some(outcome);
                result.response.extend_from_slice(b"NO CARRIER\r\n");
                result.events.push(ModemEvent::CallEnded {
                    number: record.number.clone(),
                    outcome,
                    at: now,
                });
            }
        }
        result
    }
}

impl Default for Modem {
    fn default() -> Self {
        Modem::new(false)
    }
}
