use std::path::Path;
use std::process::{Command, Output};

use eraser_core::analysis::{fit_fringe_flattened, Window};
use eraser_core::waveoptics::Pattern;

fn eraser(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eraser")).args(args).output().unwrap()
}

fn files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    v.sort();
    v
}

fn read_pattern(path: &Path) -> Pattern {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# scene: "));
    assert_eq!(lines.next(), Some("x_m,rate"));
    let (xs, rates): (Vec<f64>, Vec<f64>) = lines
        .map(|l| {
            let (x, r) = l.split_once(',').unwrap();
            (x.parse::<f64>().unwrap(), r.parse::<f64>().unwrap())
        })
        .unzip();
    Pattern::new(xs, rates, "csv").unwrap()
}

#[test]
fn scenes_list_names_the_corpus() {
    let out = eraser(&["scenes", "list"]);
    assert!(out.status.success());
    let listed = String::from_utf8(out.stdout).unwrap();
    assert_eq!(listed.lines().count(), eraser_bench::scenes::SCENES.len());
    assert!(listed.lines().any(|l| l == "walborn_fig2"));
}

#[test]
fn validate_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_eraser"))
        .args(["validate", "walborn_fig2"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("source -> double_slit"), "{stdout}");
    assert!(files(dir.path()).is_empty());
}

#[test]
fn seeded_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let out = eraser(&["run", "walborn_fig3_plus45", "--seed", "7", "--out", d.path().to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let names = files(a.path());
    assert!(!names.is_empty());
    assert_eq!(names, files(b.path()));
    for n in &names {
        let (x, y) = (std::fs::read(a.path().join(n)).unwrap(), std::fs::read(b.path().join(n)).unwrap());
        assert!(x == y, "{n} differs");
        assert!(String::from_utf8(x).unwrap().starts_with("# scene: walborn_fig3_plus45, engine: orthodox"));
    }
}

#[test]
fn scene_errors_exit_1() {
    let out = eraser(&["run", "no_such_scene"]);
    assert_eq!(out.status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.bench");
    std::fs::write(&bad, "source walborn\nelement polarizer arm=idler angle=45\n").unwrap();
    let out = eraser(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2, column 35"));
    assert_eq!(eraser(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn runtime_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let dark = dir.path().join("dark.bench");
    std::fs::write(
        &dark,
        "source walborn\n\
         element double_slit width=80um separation=250um\n\
         element polarizer arm=signal angle=0deg\n\
         element polarizer arm=signal angle=90deg\n\
         detector signal scan=-1mm..1mm steps=101 at=1m\n\
         run pilotwave singles n=100\n",
    )
    .unwrap();
    let out = eraser(&["run", dark.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no light"));
}

#[test]
fn menzel_far_field_csvs_disagree_on_fringes() {
    let dir = tempfile::tempdir().unwrap();
    let out = eraser(&["run", "menzel_farfield", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (lambda, l, a, d) = (700e-9, 1.0, 80e-6, 250e-6);
    let half = lambda * l / (2.0 * a);
    let window = Window::new(-half, half).unwrap();
    let fit = |name: &str| {
        let p = read_pattern(&dir.path().join(name));
        fit_fringe_flattened(&p, lambda * l / d, window).unwrap().visibility
    };
    let orthodox = fit("menzel_farfield_0_orthodox_singles.csv");
    let pilot = fit("menzel_farfield_1_pilotwave_singles.csv");
    assert!(pilot - orthodox > 0.85, "orthodox {orthodox}, pilot-wave {pilot}");
}
