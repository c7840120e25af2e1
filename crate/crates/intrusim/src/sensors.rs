//! Virtual sensors: a PIR motion detector with a planar sector field of
//! view, a sound level sensor, and a magnetic door switch. Scripted stimuli
//! go in; pin levels and ADC counts come out.
//!
//! All reads are pure functions of (sensor state, now). State changes only
//! through [`SensorWorld::apply`].

use crate::kernel::SimTime;

/// Logic level on a digital pin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PinLevel {
    Low,
    High,
}

impl PinLevel {
    pub fn bit(self) -> u8 {
        match self {
            PinLevel::Low => 0,
            PinLevel::High => 1,
        }
    }

    pub fn is_low(self) -> bool {
        self == PinLevel::Low
    }

    pub fn is_high(self) -> bool {
        self == PinLevel::High
    }
}

/// A 10-bit ADC sample, clamped to `0..=1023` counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct AdcReading(u16);

impl AdcReading {
    pub const MAX_COUNTS: u16 = 1023;

    /// Builds a reading, saturating anything above the 10-bit ceiling.
    pub fn clamped(counts: u32) -> Self {
        AdcReading(counts.min(u32::from(Self::MAX_COUNTS)) as u16)
    }

    pub fn counts(self) -> u16 {
        self.0
    }
}

/// Passive-infrared motion sensor covering a sector of the plane.
///
/// Output is active-low: `Low` while some intruder is inside the sector, or
/// was inside within the trailing `hold_ms` window; `High` otherwise. The
/// sector is `bearing within ±half_angle of facing AND distance <= range_m`,
/// inclusive on both boundaries.
#[derive(Debug, Clone)]
pub struct PirSensor {
    position: (f64, f64),
    facing_deg: f64,
    half_angle_deg: f64,
    range_m: f64,
    hold_ms: u64,
    inside: bool,
    last_exit: Option<SimTime>,
}

impl PirSensor {
    pub fn new(
        position: (f64, f64),
        facing_deg: f64,
        half_angle_deg: f64,
        range_m: f64,
        hold_ms: u64,
    ) -> Self {
        assert!(position.0.is_finite() && position.1.is_finite());
        assert!(facing_deg.is_finite());
        assert!(
            half_angle_deg > 0.0 && half_angle_deg < 180.0,
            "half angle must be in (0, 180) degrees"
        );
        assert!(range_m.is_finite() && range_m > 0.0);
        PirSensor {
            position,
            facing_deg,
            half_angle_deg,
            range_m,
            hold_ms,
            inside: false,
            last_exit: None,
        }
    }

    pub fn hold_ms(&self) -> u64 {
        self.hold_ms
    }

    /// True when `point` lies inside the detection sector.
    pub fn covers(&self, point: (f64, f64)) -> bool {
        let vx = point.0 - self.position.0;
        let vy = point.1 - self.position.1;
        let dist2 = vx * vx + vy * vy;
        if dist2 > self.range_m * self.range_m {
            return false;
        }
        // angle(v, facing) <= half_angle  <=>  v . dir >= |v| * cos(half_angle)
        let facing = self.facing_deg.to_radians();
        let dot = vx * facing.cos() + vy * facing.sin();
        dot >= dist2.sqrt() * self.half_angle_deg.to_radians().cos()
    }

    /// Records intruder movement so the hold window tracks the last instant
    /// the sector was occupied. Call whenever positions change.
    pub fn update_targets(&mut self, intruders: &[(f64, f64)], now: SimTime) {
        let inside = intruders.iter().any(|&p| self.covers(p));
        if self.inside && !inside {
            self.last_exit = Some(now);
        }
        self.inside = inside;
    }

    /// Active-low read. The hold window is half-open: the output releases at
    /// exactly `last_exit + hold_ms`.
    pub fn read(&self, intruders: &[(f64, f64)], now: SimTime) -> PinLevel {
        let occupied = intruders.iter().any(|&p| self.covers(p));
        let holding = self
            .last_exit
            .is_some_and(|exit| now < exit.plus_ms(self.hold_ms));
        if occupied || holding {
            PinLevel::Low
        } else {
            PinLevel::High
        }
    }
}

impl Default for PirSensor {
    /// Origin-mounted sensor facing +x with a 90° total field, 6.1 m range,
    /// and a 2 s hold.
    fn default() -> Self {
        PirSensor::new((0.0, 0.0), 0.0, 45.0, 6.1, 2000)
    }
}

#[derive(Debug, Clone, Copy)]
struct SoundBurst {
    amplitude: u16,
    start: SimTime,
    duration_ms: u64,
}

/// Sound level sensor producing 10-bit counts. A scripted burst adds a
/// rectangular amplitude on top of the baseline over `[start, start + duration)`.
#[derive(Debug, Clone)]
pub struct SoundSensor {
    baseline: u16,
    burst: Option<SoundBurst>,
}

impl SoundSensor {
    pub fn new(baseline: u16) -> Self {
        assert!(baseline <= AdcReading::MAX_COUNTS);
        SoundSensor {
            baseline,
            burst: None,
        }
    }

    /// Starts a burst at `start`, replacing any earlier one.
    pub fn set_burst(&mut self, amplitude: u16, start: SimTime, duration_ms: u64) {
        self.burst = Some(SoundBurst {
            amplitude,
            start,
            duration_ms,
        });
    }

    pub fn read(&self, now: SimTime) -> AdcReading {
        let active = self
            .burst
            .is_some_and(|b| b.start <= now && now < b.start.plus_ms(b.duration_ms));
        if active {
            let amplitude = self.burst.expect("burst checked above").amplitude;
            AdcReading::clamped(u32::from(self.baseline) + u32::from(amplitude))
        } else {
            AdcReading::clamped(u32::from(self.baseline))
        }
    }
}

impl Default for SoundSensor {
    fn default() -> Self {
        SoundSensor::new(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoorState {
    Open,
    Closed,
}

/// Reed switch under a pull-up input: a closed door grounds the pin (0); an
/// open door — or a cut wire — leaves the pull-up driving it high (1).
#[derive(Debug, Clone, Copy)]
pub struct MagneticSwitch {
    door: DoorState,
}

impl MagneticSwitch {
    pub fn new(door: DoorState) -> Self {
        MagneticSwitch { door }
    }

    pub fn door(&self) -> DoorState {
        self.door
    }

    pub fn set_door(&mut self, door: DoorState) {
        self.door = door;
    }

    pub fn read(&self) -> PinLevel {
        match self.door {
            DoorState::Open => PinLevel::High,
            DoorState::Closed => PinLevel::Low,
        }
    }
}

impl Default for MagneticSwitch {
    fn default() -> Self {
        MagneticSwitch::new(DoorState::Closed)
    }
}

/// One scripted physical stimulus.
#[derive(Debug, Clone, PartialEq)]
pub enum Stimulus {
    Door(DoorState),
    /// Places the tracked intruder at `(x, y)` meters, replacing any earlier
    /// position.
    IntruderSet { x: f64, y: f64 },
    IntruderClear,
    SoundBurst { amplitude: u16, duration_ms: u64 },
}

/// One controller sample of all three sensor outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SensorInputs {
    pub sound: AdcReading,
    pub pir: PinLevel,
    pub magnetic: PinLevel,
}

/// All sensors plus the tracked intruder position.
#[derive(Debug, Clone)]
pub struct SensorWorld {
    pir: PirSensor,
    sound: SoundSensor,
    door: MagneticSwitch,
    intruders: Vec<(f64, f64)>,
}

impl SensorWorld {
    pub fn new(pir: PirSensor, sound: SoundSensor) -> Self {
        SensorWorld {
            pir,
            sound,
            door: MagneticSwitch::default(),
            intruders: Vec::new(),
        }
    }

    pub fn pir(&self) -> &PirSensor {
        &self.pir
    }

    pub fn door_switch(&self) -> &MagneticSwitch {
        &self.door
    }

    pub fn intruders(&self) -> &[(f64, f64)] {
        &self.intruders
    }

    /// Applies a stimulus at `at`. Only the targeted sensor changes.
    pub fn apply(&mut self, stimulus: &Stimulus, at: SimTime) {
        match stimulus {
            Stimulus::Door(state) => self.door.set_door(*state),
            Stimulus::IntruderSet { x, y } => {
                self.intruders = vec![(*x, *y)];
                self.pir.update_targets(&self.intruders, at);
            }
            Stimulus::IntruderClear => {
                self.intruders.clear();
                self.pir.update_targets(&self.intruders, at);
            }
            Stimulus::SoundBurst {
                amplitude,
                duration_ms,
            } => self.sound.set_burst(*amplitude, at, *duration_ms),
        }
    }

    pub fn sample(&self, now: SimTime) -> SensorInputs {
        SensorInputs {
            sound: self.sound.read(now),
            pir: self.pir.read(&self.intruders, now),
            magnetic: self.door.read(),
        }
    }
}

impl Default for SensorWorld {
    fn default() -> Self {
        SensorWorld::new(PirSensor::default(), SoundSensor::default())
    }
}
