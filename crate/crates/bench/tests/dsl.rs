use eraser_bench::dsl::{self, Quantity, Unit};
use eraser_bench::scenes::SCENES;
use proptest::prelude::*;

#[test]
fn shipped_scenes_round_trip() {
    for s in SCENES {
        let spec = dsl::parse(s.text).unwrap_or_else(|e| panic!("{}: {e}", s.name));
        let text = spec.to_string();
        assert_eq!(dsl::parse(&text).unwrap(), spec, "{}", s.name);
        assert_eq!(dsl::parse(&text).unwrap().to_string(), text, "{}", s.name);
    }
}

#[test]
fn errors_carry_line_and_column() {
    let e = dsl::parse("").unwrap_err();
    assert_eq!(e.message, "missing source");
    let e = dsl::parse("source walborn\nelement polarizer arm=idler angle=45\n").unwrap_err();
    assert_eq!((e.line, e.column), (2, 35));
    assert!(e.to_string().starts_with("line 2, column 35:"), "{e}");
}

fn length_unit() -> impl Strategy<Value = Unit> {
    prop_oneof![Just(Unit::Nm), Just(Unit::Um), Just(Unit::Mm), Just(Unit::M)]
}

fn angle_unit() -> impl Strategy<Value = Unit> {
    prop_oneof![Just(Unit::Deg), Just(Unit::Rad)]
}

proptest! {
    #[test]
    fn written_quantities_round_trip(
        waist in 1e-3f64..1e4,
        wu in length_unit(),
        angle in -720.0f64..720.0,
        au in angle_unit(),
    ) {
        let text = format!(
            "source custom mode=1 waist={}\n\
             element double_slit width=80um separation=250um\n\
             element polarizer arm=idler angle={}\n\
             detector signal scan=-1mm..1mm steps=11 at=1m\n\
             run orthodox singles\n",
            Quantity::new(waist, wu),
            Quantity::new(angle, au),
        );
        let spec = dsl::parse(&text).unwrap();
        prop_assert_eq!(spec.source.waist, Some(Quantity::new(waist, wu)));
        prop_assert_eq!(dsl::parse(&spec.to_string()).unwrap(), spec);
    }
}
