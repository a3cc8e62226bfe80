use nalgebra::Vector3;
use proptest::prelude::*;
use spinbath::dynamics::{CentralModel, GroupSystem};
use spinbath::hamiltonians::{CentralSpin, SystemOptions};
use spinbath::pulse::*;
use spinbath::spin::{max_abs, rotation, CMatrix, CompositeSpace};

fn angle() -> impl Strategy<Value = Angle> {
    prop_oneof![
        Just(Angle::Pi),
        Just(Angle::HalfPi),
        (1u32..=3600).prop_map(|d| Angle::Degrees(d as f64 / 10.0)),
    ]
}

fn axis() -> impl Strategy<Value = Axis> {
    prop::sample::select(Axis::ALL.to_vec())
}

fn leaf() -> impl Strategy<Value = Item> {
    prop_oneof![
        (angle(), axis(), prop::option::of(prop::sample::select(vec!["probe", "target"]))).prop_map(
            |(a, x, t)| {
                let p = Pulse::new(a, x);
                Item::Pulse(match t {
                    Some(t) => p.on(t),
                    None => p,
                })
            }
        ),
        (0u32..40).prop_map(|k| Item::tau_times(k as f64 / 4.0)),
        (1u32..5000, prop::sample::select(vec![TimeUnit::S, TimeUnit::Us, TimeUnit::Ns]))
            .prop_map(|(v, u)| Item::Delay(Delay::literal(v as f64 / 100.0, u))),
    ]
}

fn item() -> impl Strategy<Value = Item> {
    leaf().prop_recursive(3, 24, 5, |inner| {
        (prop::collection::vec(inner, 1..5), 1u32..6).prop_map(|(b, n)| Item::repeat(b, n))
    })
}

fn program() -> impl Strategy<Value = PulseProgram> {
    prop::collection::vec(item(), 1..8).prop_map(PulseProgram::new)
}

fn probe_only(items: &[Item]) -> bool {
    items.iter().all(|i| match i {
        Item::Pulse(p) => p.target.is_none(),
        Item::Delay(_) => true,
        Item::Repeat(r) => probe_only(&r.block),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn print_then_parse_is_identity(p in program()) {
        let text = p.to_string();
        let back = parse_sequence(&text).unwrap();
        prop_assert_eq!(&back.items, &p.items);
        // canonical form is a fixed point
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn whitespace_and_case_do_not_matter(p in program()) {
        let text = p.to_string();
        let loud = text.to_uppercase().replace(' ', "").replace('-', " -\t ");
        prop_assert_eq!(parse_sequence(&loud).map(|q| q.items), Ok(p.items.clone()));
    }

    #[test]
    fn total_time_is_linear_in_tau(p in program(), t1 in 0.0f64..1e-4, t2 in 0.0f64..1e-4) {
        let s1 = compile_schedule(&p, t1).unwrap();
        let s2 = compile_schedule(&p, t2).unwrap();
        prop_assert_eq!(s1.tau_coefficient, s2.tau_coefficient);
        prop_assert_eq!(s1.fixed_time, s2.fixed_time);
        for s in [&s1, &s2] {
            let sum: f64 = s.events.iter().map(|e| match e { Event::Evolve(t) => *t, _ => 0.0 }).sum();
            prop_assert!((s.total_time - sum).abs() <= 1e-12 * (1.0 + sum));
        }
        let predicted = s1.tau_coefficient * t2 + s1.fixed_time;
        prop_assert!((s2.total_time - predicted).abs() <= 1e-12 * (1.0 + predicted));
        prop_assert_eq!(s1.rotation_count(), p.pulse_count());
        // no two evolutions in a row
        prop_assert!(s1.events.windows(2).all(|w| !matches!(w, [Event::Evolve(_), Event::Evolve(_)])));
    }

    #[test]
    fn net_rotation_matches_pulse_composition(p in program()) {
        prop_assume!(probe_only(&p.items));
        let sched = compile_schedule(&p, 0.0).unwrap();
        let model = CentralModel::new(&CentralSpin::bare_electron(), &Vector3::new(0.0, 0.0, 72.0), None).unwrap();
        let sys = GroupSystem::new(&model, &[], SystemOptions::default()).unwrap();
        let lib = sys.schedule_unitary(&sched).unwrap();
        prop_assert!(max_abs(&(lib - composed(&p.items))) < 1e-9);
    }
}

/// Product of the program's pulses built directly from spin-core rotations,
/// walking the AST rather than the compiled schedule.
fn composed(items: &[Item]) -> CMatrix {
    let space = CompositeSpace::new(vec![2]);
    let mut u = CMatrix::identity(2, 2);
    for item in items {
        match item {
            Item::Pulse(p) => u = rotation(&p.axis.vector(), p.angle.radians(), 0, None, &space).unwrap() * u,
            Item::Delay(_) => {}
            Item::Repeat(r) => {
                let block = composed(&r.block);
                for _ in 0..r.count {
                    u = &block * u;
                }
            }
        }
    }
    u
}

#[test]
fn preset_pulse_counts() {
    let golden = [("hahn", 1, 3), ("cpmg", 1, 3), ("cpmg", 2, 4), ("cpmg", 8, 10), ("xy8", 1, 10), ("xy8", 3, 26), ("deer", 1, 4)];
    for (name, n, count) in golden {
        let p = expand_preset(name, n).unwrap();
        assert_eq!(p.pulse_count(), count, "{name}-{n}");
        assert_eq!(compile_schedule(&p, 1e-6).unwrap().rotation_count(), count);
    }
    assert!(matches!(expand_preset("cpmg", 0), Err(PulseError::ZeroRepeat { .. })));
    assert!(matches!(expand_preset("carr", 1), Err(PulseError::UnknownPreset(_))));
}

#[test]
fn preset_tau_coefficients() {
    for (name, n, a) in [("hahn", 1, 2.0), ("cpmg", 2, 4.0), ("xy8", 1, 16.0), ("xy8", 2, 32.0)] {
        let s = compile_schedule(&expand_preset(name, n).unwrap(), 3e-6).unwrap();
        assert_eq!(s.tau_coefficient, a, "{name}");
        assert_eq!(s.fixed_time, 0.0);
        assert!((s.total_time - a * 3e-6).abs() < 1e-18);
    }
}

#[test]
fn xy8_axis_order_and_spacing() {
    let s = compile_schedule(&expand_preset("xy8", 1).unwrap(), 1e-6).unwrap();
    let axes: Vec<Axis> = s.rotations().skip(1).take(8).map(|r| r.axis).collect();
    use Axis::{PlusX as X, PlusY as Y};
    assert_eq!(axes, vec![X, Y, X, Y, Y, X, Y, X]);
    let waits: Vec<f64> = s.events.iter().filter_map(|e| if let Event::Evolve(t) = e { Some(*t) } else { None }).collect();
    assert_eq!(waits.len(), 9);
    assert!((waits[0] - 1e-6).abs() < 1e-18 && (waits[8] - 1e-6).abs() < 1e-18);
    assert!(waits[1..8].iter().all(|t| (t - 2e-6).abs() < 1e-18));
}

#[test]
fn preset_net_rotations_equal_pulse_composition() {
    let model = CentralModel::new(&CentralSpin::bare_electron(), &Vector3::new(0.0, 0.0, 10.0), None).unwrap();
    let sys = GroupSystem::new(&model, &[], SystemOptions::default()).unwrap();
    for (name, n) in [("hahn", 1), ("cpmg", 1), ("cpmg", 2), ("cpmg", 5), ("xy8", 1), ("xy8", 2)] {
        let p = expand_preset(name, n).unwrap();
        let lib = sys.schedule_unitary(&compile_schedule(&p, 0.0).unwrap()).unwrap();
        assert!(max_abs(&(lib - composed(&p.items))) < 1e-12, "{name}-{n}");
    }
    // a full 2π about x is −1 on a spin-1/2
    let hahn = composed(&expand_preset("hahn", 1).unwrap().items);
    assert!(max_abs(&(hahn + CMatrix::identity(2, 2))) < 1e-12);
}

#[test]
fn grammar_examples() {
    let p = parse_sequence("pi/2(x) - tau - pi(x) - tau - pi/2(x)").unwrap();
    assert_eq!(p.items, expand_preset("hahn", 1).unwrap().items);
    let r = parse_sequence("[tau - pi(y) - tau]^2").unwrap();
    match &r.items[..] {
        [Item::Repeat(rep)] => {
            assert_eq!(rep.count, 2);
            assert_eq!(rep.block.len(), 3);
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(parse_sequence("pi(z)").unwrap_err().to_string(), "unknown axis 'z' at 1:4");
    assert!(matches!(parse_sequence("[tau]^0"), Err(PulseError::ZeroRepeat { .. })));
    assert!(parse_sequence("").is_err());
}

#[test]
fn flattening_and_final_phase() {
    let s = compile_schedule(&parse_sequence("[tau - pi(y) - tau]^3").unwrap(), 2e-6).unwrap();
    assert_eq!(s.rotation_count(), 3);
    assert!((s.total_time - 12e-6).abs() < 1e-18);
    let plus = compile_schedule(&parse_sequence("pi/2(x) - tau - pi(x) - tau - pi/2(x)").unwrap(), 6.48e-6).unwrap();
    let minus = compile_schedule(&parse_sequence("pi/2(x) - tau - pi(x) - tau - pi/2(-x)").unwrap(), 6.48e-6).unwrap();
    let n = plus.events.len();
    assert_eq!(plus.events[..n - 1], minus.events[..n - 1]);
    match (&plus.events[n - 1], &minus.events[n - 1]) {
        (Event::Rotation(a), Event::Rotation(b)) => assert_eq!(a.axis.negated(), b.axis),
        other => panic!("{other:?}"),
    }
    // the ±x readouts give opposite bath-free signals
    let u = |s: &Schedule| {
        let mut u = CMatrix::identity(2, 2);
        for r in s.rotations() {
            u = spinbath::dynamics::probe_rotation(r).unwrap() * u;
        }
        2.0 * u[(0, 0)].norm_sqr() - 1.0
    };
    assert!((u(&plus) - 1.0).abs() < 1e-12 && (u(&minus) + 1.0).abs() < 1e-12);
}
