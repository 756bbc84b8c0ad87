use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cdfem(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdfem"))
        .args(args)
        .env("CDFEM_OUT", out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn mesh_writes_mesh_quality_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = cdfem(&["mesh", "hole", "--nd", "6", "--p", "2"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["hole.mesh", "hole_quality.json", "hole_config.json"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let q: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("hole_quality.json")).unwrap()).unwrap();
    assert!(q.is_object());
}

#[test]
fn solve_reports_energy_error_for_the_beam() {
    let dir = tempfile::tempdir().unwrap();
    let o = cdfem(&["solve", "beam", "--case", "2", "--nd", "8", "--p", "2", "--no-condition"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("beam2_solution.json")).unwrap()).unwrap();
    let err = s["energy_error"].as_f64().unwrap();
    assert!(err < 1e-3, "energy error {err}");
}

#[test]
fn study_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = cdfem(&["study", "hole", "--nd", "6,10", "--p", "1", "--shape", "quad"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("hole_study.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("case,shape,p,n_d,h"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn out_flag_takes_precedence_over_the_environment() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let o = cdfem(&["mesh", "hole", "--nd", "6", "--out", flag_dir.path().to_str().unwrap()], env_dir.path());
    assert_eq!(code(&o), 0);
    assert!(flag_dir.path().join("hole.mesh").is_file());
    assert!(!env_dir.path().join("hole.mesh").exists());
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&cdfem(&["mesh", "hole", "--q", "3"], dir.path())), 2);
    assert_eq!(code(&cdfem(&["mesh", "hole", "--case", "1"], dir.path())), 2);
    assert_eq!(code(&cdfem(&["mesh", "no_such_case"], dir.path())), 2);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"name\": \"x\", \"levelsets\": 3}").unwrap();
    assert_eq!(code(&cdfem(&["mesh", bad.to_str().unwrap()], dir.path())), 2);
}

#[test]
fn repeated_runs_write_identical_files() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        assert_eq!(code(&cdfem(&["solve", "inclusion", "--nd", "8", "--p", "3"], d.path())), 0);
        assert_eq!(code(&cdfem(&["study", "inclusion", "--nd", "6,10", "--p", "1,2"], d.path())), 0);
    }
    for f in ["inclusion.mesh", "inclusion_solution.json", "inclusion_study.csv", "inclusion_quality.json"] {
        let (x, y) = (fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
        assert!(x == y, "{f} differs between runs");
    }
}
