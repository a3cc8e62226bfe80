use serde::{Deserialize, Serialize};

use super::ast::{Axis, DelayKind, Item, PulseProgram, Span};
use super::PulseError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationSpec {
    pub axis: Axis,
    /// radians
    pub angle: f64,
    pub target: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Event {
    Rotation(RotationSpec),
    /// Free evolution, seconds.
    Evolve(f64),
}

/// Flattened timeline. Consecutive delays are merged; rotations never are.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub events: Vec<Event>,
    /// seconds
    pub total_time: f64,
    /// `total_time = tau_coefficient · τ + fixed_time`
    pub tau_coefficient: f64,
    pub fixed_time: f64,
}

impl Schedule {
    pub fn rotations(&self) -> impl Iterator<Item = &RotationSpec> {
        self.events.iter().filter_map(|e| match e {
            Event::Rotation(r) => Some(r),
            Event::Evolve(_) => None,
        })
    }

    pub fn rotation_count(&self) -> usize {
        self.rotations().count()
    }
}

struct Builder {
    tau: f64,
    t_s: Option<f64>,
    events: Vec<Event>,
    tau_coefficient: f64,
    fixed_time: f64,
}

impl Builder {
    fn push_delay(&mut self, dt: f64) {
        if let Some(Event::Evolve(t)) = self.events.last_mut() {
            *t += dt;
        } else {
            self.events.push(Event::Evolve(dt));
        }
    }

    fn walk(&mut self, items: &[Item]) -> Result<(), PulseError> {
        for item in items {
            match item {
                Item::Pulse(p) => self.events.push(Event::Rotation(RotationSpec {
                    axis: p.axis,
                    angle: p.angle.radians(),
                    target: p.target.clone(),
                })),
                Item::Delay(d) => {
                    let dt = match d.kind {
                        DelayKind::Tau(c) => {
                            self.tau_coefficient += c;
                            c * self.tau
                        }
                        DelayKind::Ts(c) => {
                            let ts = self.t_s.ok_or_else(|| unresolved("ts", d.span))?;
                            self.fixed_time += c * ts;
                            c * ts
                        }
                        DelayKind::Literal { value, unit } => {
                            self.fixed_time += value * unit.seconds();
                            value * unit.seconds()
                        }
                    };
                    if !(dt >= 0.0 && dt.is_finite()) {
                        return Err(PulseError::NegativeDelay(dt));
                    }
                    self.push_delay(dt);
                }
                Item::Repeat(r) => {
                    for _ in 0..r.count {
                        self.walk(&r.block)?;
                    }
                }
            }
        }
        Ok(())
    }
}

fn unresolved(symbol: &str, span: Span) -> PulseError {
    PulseError::UnresolvedSymbol { symbol: symbol.to_string(), line: span.line, col: span.col }
}

/// Flatten repeats and substitute `τ` (seconds).
pub fn compile_schedule(program: &PulseProgram, tau: f64) -> Result<Schedule, PulseError> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(PulseError::NegativeDelay(tau));
    }
    let mut b = Builder {
        tau,
        t_s: program.metadata.t_s,
        events: Vec::new(),
        tau_coefficient: 0.0,
        fixed_time: 0.0,
    };
    b.walk(&program.items)?;
    let total_time = b
        .events
        .iter()
        .map(|e| match e {
            Event::Evolve(t) => *t,
            Event::Rotation(_) => 0.0,
        })
        .sum();
    Ok(Schedule { events: b.events, total_time, tau_coefficient: b.tau_coefficient, fixed_time: b.fixed_time })
}
