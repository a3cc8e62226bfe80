//! Pulse-sequence language: parser, canonical printer, presets and the
//! compiler to a timed schedule of ideal rotations.
//!
//! ```text
//! sequence := item ('-' item)*
//! item     := pulse | delay | repeat
//! pulse    := ('pi' | 'pi/2' | FLOAT 'deg') '(' axis ')' ['@' label]
//! axis     := x | y | -x | -y
//! delay    := [FLOAT] ('tau' | 'ts') | FLOAT ('us' | 'ns' | 's')
//! repeat   := '[' sequence ']' '^' INT
//! ```
//!
//! Keywords are case-insensitive, whitespace is free and `#` starts a
//! comment that runs to the end of the line.

mod ast;
mod parser;
mod presets;
mod printer;
mod schedule;

use thiserror::Error;

pub use ast::{Angle, Axis, Delay, DelayKind, Item, Metadata, Pulse, PulseProgram, Repeat, Span, TimeUnit};
pub use parser::parse_sequence;
pub use presets::{expand_preset, preset_from_name, DEER_TARGET, PRESETS};
pub use schedule::{compile_schedule, Event, RotationSpec, Schedule};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PulseError {
    #[error("{msg} at {line}:{col}")]
    Syntax { msg: String, line: usize, col: usize },
    #[error("unknown axis '{axis}' at {line}:{col}")]
    UnknownAxis { axis: String, line: usize, col: usize },
    #[error("repeat count must be at least 1 at {line}:{col}")]
    ZeroRepeat { line: usize, col: usize },
    #[error("angle {degrees} deg outside (0, 360] at {line}:{col}")]
    InvalidAngle { degrees: f64, line: usize, col: usize },
    #[error("unresolved symbol '{symbol}' at {line}:{col}")]
    UnresolvedSymbol { symbol: String, line: usize, col: usize },
    #[error("unknown preset '{0}' (expected hahn, cpmg, xy8 or deer)")]
    UnknownPreset(String),
    #[error("delay must be finite and non-negative, got {0}")]
    NegativeDelay(f64),
    #[error("empty sequence")]
    Empty,
}

/// Read a preset name (`hahn`, `cpmg-2`, ...) or sequence text.
pub fn program_from_str(spec: &str) -> Result<PulseProgram, PulseError> {
    match preset_from_name(spec) {
        Some(p) => p,
        None => parse_sequence(spec),
    }
}
