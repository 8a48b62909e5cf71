use std::path::Path;
use std::process::{Command, Output};

const SLAB: &str = r#"{
  "domain": {"vertices": [[0,0],[1,0],[1,1],[0,1]],
             "labels": ["neumann","insulated","neumann","dirichlet"]},
  "field": "facet_normal",
  "distribution": {"constant": 0.5},
  "mass": 2.0,
  "data": {"dirichlet": {"3": 1.0}},
  "solver": {"h": 0.125, "epsilon": 0.1, "epsilon_list": [0.2, 0.1]},
  "output": {"dir": "out", "vtk": true}
}"#;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_insulation"))
        .args(args)
        .current_dir(dir)
        .env_remove("INSULATION_THREADS")
        .output()
        .unwrap()
}

fn setup(config: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.json"), config).unwrap();
    dir
}

fn term(out: &Output, name: &str) -> f64 {
    let stdout = String::from_utf8_lossy(&out.stdout);
    let prefix = format!("TERM={name} VALUE=");
    let line = stdout
        .lines()
        .find(|l| l.starts_with(&prefix))
        .unwrap_or_else(|| panic!("no {name} in\n{stdout}"));
    let value = &line[prefix.len()..];
    // 17 significant digits in scientific notation
    let mantissa = value.split('e').next().unwrap().trim_start_matches('-');
    assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{line}");
    value.parse().unwrap()
}

#[test]
fn solve_limit_prints_the_slab_energy() {
    let dir = setup(SLAB);
    let out = run(dir.path(), &["solve-limit", "-c", "run.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!((term(&out, "E_LIMIT") - 0.5 / 1.5).abs() < 1e-10);
    assert!(dir.path().join("out/limit.csv").exists());
    assert!(dir.path().join("out/limit.vtk").exists());
    let out = run(dir.path(), &["solve-limit", "-c", "run.json", "--set", "distribution.constant=2"]);
    assert!((term(&out, "E_LIMIT") - 0.5 / 3.0).abs() < 1e-10);
}

#[test]
fn reconstruct_after_reduced_keeps_the_mass() {
    let dir = setup(SLAB);
    let out = run(dir.path(), &["solve-reduced", "-c", "run.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!((term(&out, "I_REDUCED") - 0.5 / 3.0).abs() < 1e-9);
    let out = run(dir.path(), &["reconstruct", "-c", "run.json", "--field", "out/reduced.csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/reconstruct.csv")).unwrap();
    let last = csv.lines().last().unwrap();
    assert!(last.starts_with("mass,"));
    let mass: f64 = last.rsplit(',').next().unwrap().parse().unwrap();
    assert!((mass - 2.0).abs() < 1e-12);
    for line in csv.lines().skip(1).filter(|l| l.starts_with("node,")) {
        let d: f64 = line.split(',').nth(5).unwrap().parse().unwrap();
        assert!((d - 2.0).abs() < 1e-8, "{line}");
    }
}

#[test]
fn other_commands_run() {
    let dir = setup(SLAB);
    for cmd in ["mesh", "solve-eps", "gamma-sweep", "check-lebesgue"] {
        let out = run(dir.path(), &[cmd, "-c", "run.json"]);
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert!((term(&run(dir.path(), &["solve-eps", "-c", "run.json"]), "E_EPS") - 0.5 / 1.5).abs() < 1e-9);
    for f in ["mesh.vtk", "glued.vtk", "eps.csv", "eps.vtk", "gamma_sweep.csv", "lebesgue.csv"] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }
}

#[test]
fn outputs_are_deterministic() {
    let dir = setup(SLAB);
    let read = |f: &str| std::fs::read(dir.path().join("out").join(f)).unwrap();
    assert!(run(dir.path(), &["gamma-sweep", "-c", "run.json"]).status.success());
    assert!(run(dir.path(), &["solve-reduced", "-c", "run.json"]).status.success());
    let (a, b) = (read("gamma_sweep.csv"), read("reduced.csv"));
    assert!(run(dir.path(), &["gamma-sweep", "-c", "run.json"]).status.success());
    assert!(run(dir.path(), &["solve-reduced", "-c", "run.json"]).status.success());
    assert_eq!(a, read("gamma_sweep.csv"));
    assert_eq!(b, read("reduced.csv"));
}

#[test]
fn exit_codes_follow_error_class() {
    // config errors: exit 1 and nothing written
    let dir = setup(&SLAB.replace("\"mass\": 2.0,", ""));
    let out = run(dir.path(), &["solve-reduced", "-c", "run.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`mass`"));
    assert!(!dir.path().join("out").exists());
    let out = run(dir.path(), &["gamma-sweep", "-c", "run.json", "--set", "solver.epsilon_list=[0.1,0.1]"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epsilon_list"));
    assert_eq!(run(dir.path(), &["mesh", "-c", "missing.json"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["mesh"]).status.code(), Some(1));
    let out = Command::new(env!("CARGO_BIN_EXE_insulation"))
        .args(["mesh", "-c", "run.json"])
        .current_dir(dir.path())
        .env("INSULATION_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // geometry: a bow-tie polygon
    let bowtie = SLAB.replace("[[0,0],[1,0],[1,1],[0,1]]", "[[0,0],[1,1],[1,0],[0,1]]");
    let dir = setup(&bowtie);
    assert_eq!(run(dir.path(), &["mesh", "-c", "run.json"]).status.code(), Some(2));

    // solver: zero thickness has no Robin weight
    let dir = setup(SLAB);
    let out = run(dir.path(), &["solve-limit", "-c", "run.json", "--set", "distribution.constant=0"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!dir.path().join("out").exists());
}
