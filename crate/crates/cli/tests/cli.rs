use std::fs;
use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_dqlab");

fn dqlab(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).output().expect("spawn dqlab")
}

#[test]
fn list_is_static_and_ordered() {
    let out = dqlab(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let names: Vec<&str> = text.lines().map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(
        names,
        [
            "frame-check",
            "gate-compile",
            "leakage-report",
            "bangbang-sweep",
            "leo-verify",
            "froehlich-check",
            "bcs-uniform",
            "bcs-random",
            "gap-vs-filling",
            "two-qubit-check",
            "sector-crosscheck"
        ]
    );
    assert_eq!(text, String::from_utf8(dqlab(&["list"]).stdout).unwrap());
}

#[test]
fn unknown_flag_rejected() {
    assert!(!dqlab(&["list", "--bogus"]).status.success());
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn missing_k_names_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.toml",
        "[spec]\nspin = 0.5\n\n[experiment]\nname = \"frame-check\"\n",
    );
    let out = dqlab(&["run", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("missing field `k`"), "{err}");
    assert!(err.contains("line"), "{err}");
}

#[test]
fn unknown_experiment_and_parameter() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "a.toml", "[spec]\nk = 3\n[experiment]\nname = \"nope\"\n");
    let err = String::from_utf8(dqlab(&["run", &cfg]).stderr).unwrap();
    assert!(err.contains("unknown experiment `nope`"), "{err}");
    let cfg = write(
        dir.path(),
        "b.toml",
        "[spec]\nk = 3\n[experiment]\nname = \"gate-compile\"\ngird = 3\n",
    );
    let err = String::from_utf8(dqlab(&["run", &cfg]).stderr).unwrap();
    assert!(err.contains("unknown field `gird`"), "{err}");
}

#[test]
fn dimension_overflow_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "big.toml",
        "[spec]\nk = 30\nspin = 2.5\n[experiment]\nname = \"frame-check\"\nn = 20\n",
    );
    let out = dqlab(&["run", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("exceeds limit"));
}

#[test]
fn json_config_and_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"spec": {"k": 4}, "experiment": {"name": "bcs-uniform", "ks": [4, 6]}, "output": {"directory": "res"}}"#,
    );
    let out = dqlab(&["run", &cfg, "--seed", "17"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let res = dir.path().join("res");
    let csv = fs::read_to_string(res.join("bcs-uniform.csv")).unwrap();
    assert!(csv.starts_with("seed,k,n,"));
    assert!(csv.lines().skip(1).all(|l| l.starts_with("17,")));
    assert!(!csv.contains('\r'));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(res.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 17);
    assert_eq!(manifest["config"]["experiment"]["ks"], serde_json::json!([4, 6]));
    assert!(manifest["wall_time_s"].is_number());
}

#[test]
fn geometry_file_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "dot.xyz", "0 0 0\n1 0 0\n0 1 0\n");
    let cfg = write(
        dir.path(),
        "g.toml",
        "[spec]\nk = 3\ndipolar = { geometry = { file = \"dot.xyz\", prefactor = 0.01 } }\n[experiment]\nname = \"leakage-report\"\nk_sweep = [4, 5]\n",
    );
    let out = dqlab(&["run", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn worker_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "w.toml",
        "[spec]\nk = 3\n[experiment]\nname = \"leo-verify\"\nseed = 99\nspecs = 8\nk_max = 5\n",
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(dqlab(&["run", &cfg, "--out", a.to_str().unwrap()]).status.success());
    assert!(dqlab(&["run", &cfg, "--out", b.to_str().unwrap(), "--workers", "4"])
        .status
        .success());
    for f in ["leo-verify.csv", "leo-verify.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let c = dir.path().join("c");
    assert!(dqlab(&["run", &cfg, "--out", c.to_str().unwrap(), "--seed", "100"])
        .status
        .success());
    assert_ne!(
        fs::read(a.join("leo-verify.csv")).unwrap(),
        fs::read(c.join("leo-verify.csv")).unwrap()
    );
}
