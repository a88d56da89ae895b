use eraser_bench::compile_text;
use eraser_bench::dsl::Engine;
use eraser_bench::scenes::find;
use eraser_bench::BenchError;

fn stages(scene: &str) -> Vec<Vec<&'static str>> {
    let plan = compile_text(find(scene).unwrap().text).unwrap();
    plan.runs.iter().map(|r| r.stages.clone()).collect()
}

#[test]
fn fig1_is_a_straight_chain() {
    assert_eq!(stages("walborn_fig1"), vec![vec!["source", "double_slit", "propagate", "coincidence"]]);
}

#[test]
fn near_field_has_no_propagation() {
    let s = stages("menzel_nearfield");
    assert_eq!(s[0].last(), Some(&"near_field_correlation"));
    assert!(!s[0].contains(&"propagate"));
}

#[test]
fn every_scene_compiles() {
    for s in eraser_bench::scenes::SCENES {
        let plan = compile_text(s.text).unwrap_or_else(|e| panic!("{}: {e}", s.name));
        assert!(!plan.runs.is_empty());
        for r in &plan.runs {
            assert_eq!(r.pilot.is_some(), r.engine == Engine::Pilotwave, "{}", s.name);
        }
    }
}

#[test]
fn point_idler_is_orthodox_only() {
    let text = "source walborn\n\
                element double_slit width=80um separation=250um\n\
                detector signal scan=-1mm..1mm steps=11 at=1m\n\
                detector idler point x=0m\n\
                run orthodox coincidence\n";
    compile_text(text).unwrap();
    let e = compile_text(&format!("{text}run pilotwave coincidence n=10\n")).unwrap_err();
    assert!(matches!(e, BenchError::Compile(_)));
    assert!(e.to_string().contains("pilotwave supports bucket/lobe/polarized idler rules"), "{e}");
    assert_eq!(e.exit_code(), 1);
}

#[test]
fn off_axis_apertures_fit_on_the_source_grid() {
    let text = "source custom mode=0 waist=1mm\n\
                element single_slit width=100um center=3mm\n\
                detector signal scan=-1mm..1mm steps=11 at=1m\n\
                run orthodox singles\n";
    let plan = compile_text(text).unwrap();
    assert!(plan.source_grid.x(0) < -3.05e-3 && plan.source_grid.last() > 3.05e-3);
    eraser_bench::runner::execute_all(&plan).unwrap();
}
