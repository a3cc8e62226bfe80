use std::f64::consts::PI;
use std::fmt;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

/// 1-based source position. Diagnostic only: all spans compare equal, so
/// ASTs built by hand and ASTs built by the parser can be compared directly.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl Span {
    pub fn new(line: usize, col: usize) -> Self {
        Self { line, col }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "+x")]
    PlusX,
    #[serde(rename = "-x")]
    MinusX,
    #[serde(rename = "+y")]
    PlusY,
    #[serde(rename = "-y")]
    MinusY,
}

impl Axis {
    pub const ALL: [Axis; 4] = [Axis::PlusX, Axis::MinusX, Axis::PlusY, Axis::MinusY];

    pub fn vector(self) -> Vector3<f64> {
        match self {
            Axis::PlusX => Vector3::x(),
            Axis::MinusX => -Vector3::x(),
            Axis::PlusY => Vector3::y(),
            Axis::MinusY => -Vector3::y(),
        }
    }

    pub fn negated(self) -> Axis {
        match self {
            Axis::PlusX => Axis::MinusX,
            Axis::MinusX => Axis::PlusX,
            Axis::PlusY => Axis::MinusY,
            Axis::MinusY => Axis::PlusY,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::PlusX => "x",
            Axis::MinusX => "-x",
            Axis::PlusY => "y",
            Axis::MinusY => "-y",
        })
    }
}

/// Rotation angle as written in the source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Angle {
    Pi,
    HalfPi,
    Degrees(f64),
}

impl Angle {
    pub fn radians(self) -> f64 {
        match self {
            Angle::Pi => PI,
            Angle::HalfPi => PI / 2.0,
            Angle::Degrees(d) => d.to_radians(),
        }
    }

    pub fn is_valid(self) -> bool {
        match self {
            Angle::Degrees(d) => d > 0.0 && d <= 360.0,
            _ => true,
        }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Angle::Pi => f.write_str("pi"),
            Angle::HalfPi => f.write_str("pi/2"),
            Angle::Degrees(d) => write!(f, "{d}deg"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub angle: Angle,
    pub axis: Axis,
    /// `None` addresses the probe (central) spin.
    pub target: Option<String>,
    pub span: Span,
}

impl Pulse {
    pub fn new(angle: Angle, axis: Axis) -> Self {
        Self { angle, axis, target: None, span: Span::default() }
    }

    pub fn on(mut self, target: &str) -> Self {
        self.target = Some(target.to_string());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeUnit {
    S,
    Us,
    Ns,
}

impl TimeUnit {
    pub fn seconds(self) -> f64 {
        match self {
            TimeUnit::S => 1.0,
            TimeUnit::Us => 1e-6,
            TimeUnit::Ns => 1e-9,
        }
    }
}

impl fmt::Display for TimeUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TimeUnit::S => "s",
            TimeUnit::Us => "us",
            TimeUnit::Ns => "ns",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DelayKind {
    /// Multiple of the scanned delay τ.
    Tau(f64),
    /// Multiple of the sensing period `t_s` from the program metadata.
    Ts(f64),
    Literal { value: f64, unit: TimeUnit },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delay {
    pub kind: DelayKind,
    pub span: Span,
}

impl Delay {
    pub fn tau(coefficient: f64) -> Self {
        Self { kind: DelayKind::Tau(coefficient), span: Span::default() }
    }

    pub fn literal(value: f64, unit: TimeUnit) -> Self {
        Self { kind: DelayKind::Literal { value, unit }, span: Span::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Repeat {
    pub block: Vec<Item>,
    pub count: u32,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Item {
    Pulse(Pulse),
    Delay(Delay),
    Repeat(Repeat),
}

impl Item {
    pub fn pulse(angle: Angle, axis: Axis) -> Self {
        Item::Pulse(Pulse::new(angle, axis))
    }

    pub fn tau() -> Self {
        Item::Delay(Delay::tau(1.0))
    }

    pub fn tau_times(c: f64) -> Self {
        Item::Delay(Delay::tau(c))
    }

    pub fn repeat(block: Vec<Item>, count: u32) -> Self {
        Item::Repeat(Repeat { block, count, span: Span::default() })
    }

    /// Number of pulses after flattening repeats.
    pub fn pulse_count(&self) -> usize {
        match self {
            Item::Pulse(_) => 1,
            Item::Delay(_) => 0,
            Item::Repeat(r) => r.count as usize * r.block.iter().map(Item::pulse_count).sum::<usize>(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub name: Option<String>,
    /// Sensing period in seconds.
    pub t_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseProgram {
    pub items: Vec<Item>,
    pub metadata: Metadata,
}

impl PulseProgram {
    pub fn new(items: Vec<Item>) -> Self {
        Self { items, metadata: Metadata::default() }
    }

    pub fn named(mut self, name: &str) -> Self {
        self.metadata.name = Some(name.to_string());
        self
    }

    pub fn pulse_count(&self) -> usize {
        self.items.iter().map(Item::pulse_count).sum()
    }
}
