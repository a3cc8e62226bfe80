use super::ast::{Angle, Axis, Item, Pulse, PulseProgram};
use super::PulseError;

/// Label used by the DEER preset for its recoupling pulse.
pub const DEER_TARGET: &str = "target";

pub const PRESETS: [&str; 4] = ["hahn", "cpmg", "xy8", "deer"];

fn half(axis: Axis) -> Item {
    Item::pulse(Angle::HalfPi, axis)
}

fn pi(axis: Axis) -> Item {
    Item::pulse(Angle::Pi, axis)
}

/// Expand a named sequence. `n` counts refocusing pulses for `cpmg` and
/// 8-pulse blocks for `xy8`; it is ignored by `hahn` and `deer`.
pub fn expand_preset(name: &str, n: u32) -> Result<PulseProgram, PulseError> {
    let lname = name.to_ascii_lowercase();
    let uses_n = matches!(lname.as_str(), "cpmg" | "xy8");
    if uses_n && n == 0 {
        return Err(PulseError::ZeroRepeat { line: 0, col: 0 });
    }
    let items = match lname.as_str() {
        "hahn" => vec![half(Axis::PlusX), Item::tau(), pi(Axis::PlusX), Item::tau(), half(Axis::PlusX)],
        "cpmg" => vec![
            half(Axis::PlusX),
            Item::repeat(vec![Item::tau(), pi(Axis::PlusY), Item::tau()], n),
            half(Axis::PlusX),
        ],
        "xy8" => {
            use Axis::{PlusX as X, PlusY as Y};
            let mut block = vec![Item::tau()];
            for (k, axis) in [X, Y, X, Y, Y, X, Y, X].into_iter().enumerate() {
                if k > 0 {
                    block.push(Item::tau_times(2.0));
                }
                block.push(pi(axis));
            }
            block.push(Item::tau());
            vec![half(Axis::PlusX), Item::repeat(block, n), half(Axis::PlusX)]
        }
        "deer" => vec![
            half(Axis::PlusX),
            Item::tau(),
            pi(Axis::PlusX),
            Item::Pulse(Pulse::new(Angle::Pi, Axis::PlusX).on(DEER_TARGET)),
            Item::tau(),
            half(Axis::PlusX),
        ],
        _ => return Err(PulseError::UnknownPreset(name.to_string())),
    };
    let label = if uses_n { format!("{lname}-{n}") } else { lname };
    Ok(PulseProgram::new(items).named(&label))
}

/// Resolve `hahn`, `deer`, `cpmg-N` or `xy8-N`. Returns `None` for anything
/// that is not a preset name.
pub fn preset_from_name(spec: &str) -> Option<Result<PulseProgram, PulseError>> {
    let s = spec.trim().to_ascii_lowercase();
    if s == "hahn" || s == "deer" {
        return Some(expand_preset(&s, 1));
    }
    for base in ["cpmg", "xy8"] {
        if s == base {
            return Some(expand_preset(base, 1));
        }
        if let Some(rest) = s.strip_prefix(base).and_then(|r| r.strip_prefix('-')) {
            return Some(match rest.parse::<u32>() {
                Ok(n) => expand_preset(base, n),
                Err(_) => Err(PulseError::UnknownPreset(spec.to_string())),
            });
        }
    }
    None
}
