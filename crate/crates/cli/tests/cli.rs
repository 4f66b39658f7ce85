use std::fs;
use std::path::Path;
use std::process::Command;

fn plyap(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_plyap")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

const ROBIN: &str = r#"
seed = 5
[problem]
name = "advection_diffusion"
[boundary]
left = { kind = "neumann" }
right = { kind = "neumann" }
[model]
nx = 17
nu = 33
np = 33
l0_nodes = 401
samples = 100
[mesh]
n = 32
[flow]
t_end = 0.05
record_stride = 5
[initial]
kind = "random"
amplitude = 0.2
modes = 3
"#;

#[test]
fn identical_config_and_seed_give_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "robin.toml", ROBIN);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = plyap(&["--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    }
    for file in ["trajectory.csv", "checks.csv", "gtable.csv", "final_profile.csv", "model_report.txt"] {
        let (x, y) = (fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap());
        assert!(!x.is_empty() && x == y, "{file} differs between runs");
    }
    let header = fs::read_to_string(a.join("trajectory.csv")).unwrap();
    assert!(header.starts_with("t,E,decay_rate,decay_rate_alt,dEdt_fd,sup_ut,sup_u\n"));

    // A different seed changes the random start, hence the trajectory.
    let c = tmp.path().join("c");
    plyap(&["--config", &cfg, "--out", c.to_str().unwrap(), "--seed", "6"]);
    assert_ne!(fs::read(a.join("trajectory.csv")).unwrap(), fs::read(c.join("trajectory.csv")).unwrap());
}

#[test]
fn cached_table_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "robin.toml", ROBIN);
    let first = tmp.path().join("first");
    plyap(&["--config", &cfg, "--out", first.to_str().unwrap(), "--check-only"]);
    let cached = ROBIN.replace("samples = 100", "samples = 100\ngtable_cache = \"first/gtable.csv\"");
    let cfg2 = write(tmp.path(), "cached.toml", &cached);
    let second = tmp.path().join("second");
    let o = plyap(&["--config", &cfg2, "--out", second.to_str().unwrap(), "--check-only"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read(first.join("checks.csv")).unwrap(), fs::read(second.join("checks.csv")).unwrap());
    assert!(!second.join("trajectory.csv").exists());
}

#[test]
fn exit_status_follows_the_checks() {
    let tmp = tempfile::tempdir().unwrap();
    let heat = "[problem]\nname = \"heat\"\n[mesh]\nn = 32\n[model]\nsamples = 50\n[flow]\nt_end = 0.05\nrecord_stride = 2\n";
    let ok = write(tmp.path(), "ok.toml", heat);
    let out = tmp.path().join("ok");
    let o = plyap(&["--config", &ok, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let checks = fs::read_to_string(out.join("checks.csv")).unwrap();
    assert!(checks.starts_with("check,worst_value,tolerance,pass"));
    assert!(checks.contains("decay_identity") && checks.contains("transport"));

    // A tolerance nobody can meet turns the same run into a failure.
    let strict = write(tmp.path(), "strict.toml", &format!("{heat}[tolerances]\ndecay_rel = 1e-300\n"));
    let o = plyap(&["--config", &strict, "--out", tmp.path().join("strict").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn invalid_configurations_are_rejected_before_running() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, text) in [
        ("zero_r.toml", "[problem]\nname = \"heat\"\n[model]\ncutoff = 0.0\n"),
        ("neg_r.toml", "[problem]\nname = \"heat\"\n[model]\ncutoff = -1.0\n"),
        ("unknown.toml", "[problem]\nname = \"heat\"\ncolour = \"red\"\n"),
    ] {
        let cfg = write(tmp.path(), name, text);
        let out = tmp.path().join(format!("out_{name}"));
        let o = plyap(&["--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{name}");
        assert!(!out.exists(), "{name}: output written despite invalid config");
    }
    let o = plyap(&["--config", tmp.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn several_configurations_run_side_by_side() {
    let tmp = tempfile::tempdir().unwrap();
    let a = write(tmp.path(), "a.toml", "[problem]\nname = \"heat\"\n[mesh]\nn = 32\n[model]\nsamples = 20\n[flow]\nt_end = 0.01\nrecord_stride = 2\n");
    let b = write(
        tmp.path(),
        "b.toml",
        "[problem]\nname = \"chafee_infante\"\n[mesh]\nn = 32\n[model]\nsamples = 20\n[flow]\nt_end = 0.01\nrecord_stride = 2\n",
    );
    let out = tmp.path().join("sweep");
    let o = plyap(&["--config", &a, "--config", &b, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(out.join("a/trajectory.csv").exists() && out.join("b/trajectory.csv").exists());
}
