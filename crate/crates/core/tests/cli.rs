use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const L_SHAPE: &str = r#"{"loops":[[[0,0],[4,0],[4,1],[1,1],[1,3],[0,3]]]}"#;

fn pcskel(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcskel")).args(args).current_dir(dir).output().unwrap()
}

fn setup(doc: &str) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("in.json"), doc).unwrap();
    dir
}

#[test]
fn build_writes_every_output() {
    let dir = setup(L_SHAPE);
    let out = pcskel(
        &["build", "in.json", "--skeleton", "sk.json", "--svg", "sk.svg", "--obj", "roof.obj", "--oracle-check"],
        dir.path(),
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("terminated at z=0.5"), "{stdout}");
    assert!(stdout.contains("oracle check passed"), "{stdout}");
    let sk: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("sk.json")).unwrap()).unwrap();
    assert_eq!(sk["faces"].as_array().unwrap().len(), 6);
    let area: f64 = sk["faces"].as_array().unwrap().iter().map(|f| f["area"].as_f64().unwrap()).sum();
    assert!((area - 6.0).abs() < 1e-9);
    assert!(std::fs::read_to_string(dir.path().join("sk.svg")).unwrap().starts_with("<svg"));
    assert!(std::fs::read_to_string(dir.path().join("roof.obj")).unwrap().starts_with("# roof mesh"));
}

#[test]
fn stationary_edge_needs_max_height() {
    let doc = r#"{"loops":[[[0,0],[1,0],[1,1],[0,1]]],"edges":[{"alpha":1.5707963267948966},{},{},{}]}"#;
    let dir = setup(&doc.replace("{}", r#"{"weight":1}"#));
    let out = pcskel(&["build", "in.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = pcskel(&["build", "in.json", "--max-z", "0.3"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("stopped at maximum height"));
}

#[test]
fn bad_input_exits_with_usage_code() {
    let dir = setup(r#"{"loops":[[[0,0],[1,0]]]}"#);
    let out = pcskel(&["build", "in.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("loops[0]"));
    let out = pcskel(&["build", "missing.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

/// A coarse geometric tolerance makes this tiny crossing configuration
/// unresolvable; the run must stop with a fault and leave a dump behind.
#[test]
fn fault_writes_dump() {
    let dir = setup(r#"{"loops":[[[-126,119],[-108,46],[-155,47],[-97,18]]]}"#);
    let out = pcskel(&["build", "in.json", "--eps-geom", "2e-3", "--dump", "fault.json"], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let dump: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("fault.json")).unwrap()).unwrap();
    assert!(dump["fault"].as_str().unwrap().contains("robustness"));
    for key in ["input", "t", "z", "wavefront", "events"] {
        assert!(!dump[key].is_null(), "dump lacks {key}");
    }
}
