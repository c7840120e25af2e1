//! End-to-end acceptance suite. Each test covers one shipped guarantee and
//! prints a single PASS/FAIL line (visible with `--nocapture`).

use std::path::Path;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use intrusim::config::{parse_config, SimConfig};
use intrusim::controller::{dial_sequence, sms_sequence};
use intrusim::harness::{all_pass, check_expectations, default_horizon_ms, run, RunOutput};
use intrusim::kernel::{SerialChannel, SimTime};
use intrusim::modem::Modem;
use intrusim::scenario::parse_scenario;
use intrusim::transcript::{to_jsonl, RecordKind};

/// Collects failures for one criterion and prints exactly one verdict line.
struct Criterion {
    name: &'static str,
    failures: Vec<String>,
}

impl Criterion {
    fn new(name: &'static str) -> Self {
        Criterion {
            name,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn finish(self) {
        if self.failures.is_empty() {
            println!("ACCEPTANCE PASS: {}", self.name);
        } else {
            println!(
                "ACCEPTANCE FAIL: {} — {}",
                self.name,
                self.failures.join("; ")
            );
            panic!("criterion failed: {}", self.name);
        }
    }
}

fn run_scenario_text(config: &SimConfig, text: &str, horizon_ms: u64) -> RunOutput {
    let scenario = parse_scenario(text).expect("scenario parses");
    run(config, &scenario, horizon_ms).expect("run succeeds")
}

fn records_of(output: &RunOutput, kind: RecordKind) -> Vec<(u64, String)> {
    output
        .transcript
        .iter()
        .filter(|r| r.kind == kind)
        .map(|r| (r.t_ms, r.detail.clone()))
        .collect()
}

fn modem_traffic(output: &RunOutput) -> usize {
    output
        .transcript
        .iter()
        .filter(|r| {
            matches!(
                r.kind,
                RecordKind::UartWrite | RecordKind::Response | RecordKind::Unsolicited
            )
        })
        .count()
}

/// Door opens at 20000 ms: the dial goes out within the sampling-plus-
/// indicator window and a byte-identical SMS completes within the alert
/// chain's delay budget.
#[test]
fn criterion_1_door_intrusion_timeline() {
    let mut c = Criterion::new("door intrusion dial + sms timeline");
    let started = Instant::now();
    let output = run_scenario_text(&SimConfig::default(), "at 20000 door open\n", 30_000);

    let dial = records_of(&output, RecordKind::UartWrite)
        .into_iter()
        .find(|(_, detail)| detail == "ATD+2347048850497;\r\n");
    match dial {
        None => c.check(false, "no dial write in transcript"),
        Some((t, _)) => {
            // Window: stimulus + one sample period + the 2 s indicator pulse.
            c.check(
                (20_000..=22_500).contains(&t),
                format!("dial at {t} ms, outside [20000, 22500]"),
            );
            let sms = output.sms.first();
            match sms {
                None => c.check(false, "no sms record"),
                Some(sms) => {
                    c.check(
                        sms.body == b"ALERT!!\n Intruder detected!!!".to_vec(),
                        format!("sms body differs: {:?}", sms.body),
                    );
                    c.check(
                        sms.submitted.as_ms() > t,
                        "sms did not follow the dial",
                    );
                    // 500 sample + 2000 indicator + 2000 post-dial + 4x1000 sms steps.
                    c.check(
                        sms.submitted.as_ms() <= 28_500,
                        format!("sms completed at {}, after 28500 ms", sms.submitted),
                    );
                }
            }
        }
    }
    c.check(!output.calls.is_empty(), "no call record");
    let elapsed = started.elapsed();
    c.check(
        elapsed.as_secs_f64() < 1.0,
        format!("run took {elapsed:?}, budget is 1 s"),
    );
    c.finish();
}

/// An intruder on the boresight at 3 m triggers a dial; one at 50 degrees —
/// outside the 90-degree field — never causes any modem traffic.
#[test]
fn criterion_2_pir_coverage() {
    let mut c = Criterion::new("pir 90-degree coverage");
    let config = SimConfig::default();

    let inside = run_scenario_text(&config, "at 16000 intruder set 3 0\n", 30_000);
    let dials = records_of(&inside, RecordKind::UartWrite);
    c.check(!dials.is_empty(), "boresight intruder produced no uart write");
    if let Some((t, detail)) = dials.first() {
        c.check(
            detail == "ATD+2347048850497;\r\n",
            format!("first write is not the dial: {detail:?}"),
        );
        c.check(*t == 18_000, format!("first dial at {t} ms, expected 18000"));
    }
    c.check(!inside.calls.is_empty(), "boresight intruder placed no call");
    c.check(
        inside.sms.is_empty(),
        "pir branch must not send sms, but one was recorded",
    );

    // 3 m at 50 degrees: (3 cos 50, 3 sin 50).
    let outside = run_scenario_text(&config, "at 16000 intruder set 1.9284 2.2981\n", 30_000);
    c.check(
        modem_traffic(&outside) == 0,
        format!(
            "off-axis intruder produced {} modem traffic records",
            modem_traffic(&outside)
        ),
    );
    c.check(outside.calls.is_empty(), "off-axis intruder placed a call");
    c.finish();
}

/// Threshold is strict: a sample of 801 pulses the indicator with zero UART
/// bytes; a sample of 800 does nothing at all.
#[test]
fn criterion_3_sound_boundary() {
    let mut c = Criterion::new("sound threshold boundary 801/800");
    let config = SimConfig::default();

    let above = run_scenario_text(&config, "at 16000 sound 801 600\n", 30_000);
    let pulses = records_of(&above, RecordKind::IndicatorOn).len();
    c.check(pulses == 1, format!("801 counts: {pulses} pulses, expected 1"));
    c.check(
        modem_traffic(&above) == 0,
        "801 counts produced uart traffic under the default policy",
    );

    let at_threshold = run_scenario_text(&config, "at 16000 sound 800 600\n", 30_000);
    c.check(
        records_of(&at_threshold, RecordKind::IndicatorOn).is_empty()
            && records_of(&at_threshold, RecordKind::IndicatorOff).is_empty(),
        "800 counts pulsed the indicator",
    );
    c.check(
        modem_traffic(&at_threshold) == 0,
        "800 counts produced uart traffic",
    );
    c.check(
        !at_threshold
            .transcript
            .iter()
            .any(|r| r.kind == RecordKind::Log && r.detail == "noise detected"),
        "800 counts entered the sound branch",
    );
    c.finish();
}

/// Stimuli that come and go while the controller is booting produce no
/// controller actions: nothing before 15000 ms but the power-on log, and no
/// alert activity ever.
#[test]
fn criterion_4_boot_suppression() {
    let mut c = Criterion::new("boot window suppresses everything");
    let text = "\
at 1000 sound 2000 500
at 2000 intruder set 2 0
at 5000 door open
at 6000 door close
at 9000 intruder clear
";
    let output = run_scenario_text(&SimConfig::default(), text, 40_000);

    for record in &output.transcript {
        let controller_kinds = matches!(
            record.kind,
            RecordKind::Log
                | RecordKind::Sample
                | RecordKind::IndicatorOn
                | RecordKind::IndicatorOff
                | RecordKind::UartWrite
                | RecordKind::UartRead
        );
        if controller_kinds && record.t_ms < 15_000 {
            c.check(
                record.kind == RecordKind::Log && record.detail == "initializing...",
                format!(
                    "controller record before boot end: {:?} at {} ms",
                    record.kind, record.t_ms
                ),
            );
        }
    }
    c.check(modem_traffic(&output) == 0, "modem traffic after quiet boot");
    c.check(
        records_of(&output, RecordKind::IndicatorOn).is_empty(),
        "indicator fired though every stimulus cleared before boot end",
    );
    c.check(output.calls.is_empty() && output.sms.is_empty(), "records exist");
    c.finish();
}

/// A well-framed response stream decomposes into complete protocol units.
fn well_framed(mut bytes: &[u8]) -> bool {
    loop {
        if bytes.is_empty() {
            return true;
        }
        if let Some(rest) = bytes.strip_prefix(b"> ".as_slice()) {
            bytes = rest;
            continue;
        }
        if bytes.starts_with(b"+CMGS: ") {
            match bytes.windows(2).position(|w| w == b"\r\n") {
                Some(pos) => {
                    bytes = &bytes[pos + 2..];
                    continue;
                }
                None => return false,
            }
        }
        let mut matched = false;
        for unit in [b"OK\r\n".as_slice(), b"ERROR\r\n", b"NO CARRIER\r\n"] {
            if let Some(rest) = bytes.strip_prefix(unit) {
                bytes = rest;
                matched = true;
                break;
            }
        }
        if !matched {
            return false;
        }
    }
}

/// The literal alert byte sequences yield exactly one call and one SMS, and
/// 10^5 random byte strings neither crash the modem nor break its framing.
#[test]
fn criterion_5_protocol_conformance_and_fuzz() {
    let mut c = Criterion::new("modem protocol conformance + fuzz");
    let started = Instant::now();

    let mut modem = Modem::default();
    let mut now = SimTime::ZERO;
    modem.feed(&dial_sequence("+2347048850497").unwrap(), now);
    for (offset, bytes) in
        sms_sequence("+2347048850497", b"ALERT!!\n Intruder detected!!!").unwrap()
    {
        now = SimTime::from_ms(2000 + offset);
        modem.feed(&bytes, now);
    }
    let (calls, sms) = modem.records();
    c.check(calls.len() == 1, format!("{} call records", calls.len()));
    c.check(sms.len() == 1, format!("{} sms records", sms.len()));
    if let Some(sms) = sms.first() {
        c.check(
            sms.body == b"ALERT!!\n Intruder detected!!!".to_vec(),
            "sms body mismatch",
        );
    }

    let mut rng = StdRng::seed_from_u64(0x5EED);
    let mut fuzz_target = Modem::default();
    for i in 0..100_000u32 {
        let len = rng.gen_range(0..64);
        let bytes: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
        let out = fuzz_target.feed(&bytes, SimTime::from_ms(u64::from(i)));
        if !well_framed(&out.response) {
            c.check(
                false,
                format!("unframed response at iteration {i}: {:?}", out.response),
            );
            break;
        }
    }
    let elapsed = started.elapsed();
    c.check(
        elapsed.as_secs_f64() < 10.0,
        format!("fuzz took {elapsed:?}, budget is 10 s"),
    );
    c.finish();
}

/// Every shipped scenario runs to a byte-identical transcript twice in a
/// row, and its declared expectations hold.
#[test]
fn criterion_6_shipped_scenarios_are_deterministic() {
    let mut c = Criterion::new("shipped scenarios deterministic + green");
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let pairs = [
        ("door_intrusion.scn", "default.conf"),
        ("pir_inside.scn", "default.conf"),
        ("pir_outside.scn", "default.conf"),
        ("sound_indicator.scn", "default.conf"),
        ("sound_below.scn", "default.conf"),
        ("boot_quiet.scn", "default.conf"),
        ("answered_call.scn", "default.conf"),
        ("sound_dial.scn", "sound_dial.conf"),
    ];
    for (scenario_file, config_file) in pairs {
        let scenario_text =
            std::fs::read_to_string(root.join("scenarios").join(scenario_file)).unwrap();
        let config_text = std::fs::read_to_string(root.join("configs").join(config_file)).unwrap();
        let scenario = parse_scenario(&scenario_text).expect(scenario_file);
        let config = parse_config(&config_text).expect(config_file);
        let horizon = default_horizon_ms(&scenario);

        let first = run(&config, &scenario, horizon).unwrap();
        let second = run(&config, &scenario, horizon).unwrap();
        c.check(
            to_jsonl(&first.transcript) == to_jsonl(&second.transcript),
            format!("{scenario_file}: transcripts differ between runs"),
        );

        let verdicts = check_expectations(&first, &scenario.expectations);
        c.check(
            all_pass(&verdicts),
            format!(
                "{scenario_file}: {:?}",
                verdicts
                    .iter()
                    .filter(|v| !v.pass)
                    .map(|v| v.message.clone())
                    .collect::<Vec<_>>()
            ),
        );
    }
    c.finish();
}

/// An n-byte burst at 9600 baud is fully delivered exactly n ms after send
/// start, for n in {1, 14, 100}.
#[test]
fn criterion_7_serial_burst_timing() {
    let mut c = Criterion::new("serial burst timing at 9600 baud");
    for n in [1usize, 14, 100] {
        let mut ch = SerialChannel::new(9600);
        let start = SimTime::from_ms(7);
        let burst: Vec<u8> = (0..n).map(|i| i as u8).collect();
        ch.send(&burst, start);
        c.check(
            ch.busy_until() == start.plus_ms(n as u64),
            format!("{n}-byte burst ends at {}, expected {}", ch.busy_until(), n),
        );
        let early = ch.drain(start.plus_ms(n as u64 - 1));
        c.check(
            early.len() == n - 1,
            format!("{n}-byte burst: {} bytes before the last ms", early.len()),
        );
        let last = ch.drain(start.plus_ms(n as u64));
        c.check(last.len() == 1, format!("{n}-byte burst: tail {:?}", last));
        let mut full = early;
        full.extend(last);
        c.check(full == burst, format!("{n}-byte burst reordered"));
    }
    c.finish();
}
