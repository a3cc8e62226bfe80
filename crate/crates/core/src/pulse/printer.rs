//! Canonical text form. `parse_sequence(&program.to_string())` returns the
//! same items, and the output is byte-stable.

use std::fmt;

use super::ast::{Delay, DelayKind, Item, Pulse, PulseProgram};

fn write_coefficient(f: &mut fmt::Formatter<'_>, c: f64, symbol: &str) -> fmt::Result {
    if c == 1.0 {
        f.write_str(symbol)
    } else {
        write!(f, "{c}{symbol}")
    }
}

impl fmt::Display for Pulse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.angle, self.axis)?;
        if let Some(t) = &self.target {
            write!(f, "@{t}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Delay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            DelayKind::Tau(c) => write_coefficient(f, c, "tau"),
            DelayKind::Ts(c) => write_coefficient(f, c, "ts"),
            DelayKind::Literal { value, unit } => write!(f, "{value}{unit}"),
        }
    }
}

fn write_items(f: &mut fmt::Formatter<'_>, items: &[Item]) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(" - ")?;
        }
        write!(f, "{item}")?;
    }
    Ok(())
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Item::Pulse(p) => write!(f, "{p}"),
            Item::Delay(d) => write!(f, "{d}"),
            Item::Repeat(r) => {
                f.write_str("[")?;
                write_items(f, &r.block)?;
                write!(f, "]^{}", r.count)
            }
        }
    }
}

impl fmt::Display for PulseProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_items(f, &self.items)
    }
}
