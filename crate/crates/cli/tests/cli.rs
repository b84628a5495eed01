//! End-to-end runs of the binary.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_freesplit"));
    c.env_remove("FREESPLIT_CACHE");
    c
}

fn ok(out: Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("freesplit-cli-{}-{}", std::process::id(), name));
    let _ = std::fs::remove_dir_all(&d);
    d
}

const SMALL_FAREY: [&str; 8] = [
    "run",
    "farey",
    "--sample",
    "adjacency_height=6",
    "--sample",
    "distance_height=8",
    "--sample",
    "model_pairs=12",
];

#[test]
fn presentations_of_one_sphere_share_a_key() {
    let a = ok(bin().args(["canonicalize", r#"{"type":"non-separating","rank":3,"factor":["x1","x2"],"stable":"x3"}"#]).output().unwrap());
    let b = ok(bin().args(["canonicalize", r#"{"type":"non-separating","rank":3,"factor":["x1 x2","X2"],"stable":"x3 x1"}"#]).output().unwrap());
    let c = ok(bin().args(["canonicalize", "std:3"]).output().unwrap());
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn farey_queries() {
    let v: Value = serde_json::from_str(&ok(bin().args(["--json", "farey", "1/2", "2/3"]).output().unwrap())).unwrap();
    assert_eq!(v["adjacent"], true);
    assert_eq!(v["distance"], 1);
    let v: Value = serde_json::from_str(&ok(bin().args(["--json", "farey", "0/1", "2/5"]).output().unwrap())).unwrap();
    assert_eq!(v["adjacent"], false);
}

#[test]
fn reports_are_identical_across_processes() {
    let strip = |s: String| {
        let mut v: Value = serde_json::from_str(&s).unwrap();
        v["environment"].as_object_mut().unwrap().remove("timestamp");
        v
    };
    let a = strip(ok(bin().arg("--json").args(SMALL_FAREY).output().unwrap()));
    let b = strip(ok(bin().arg("--json").args(SMALL_FAREY).output().unwrap()));
    assert_eq!(a, b);
    assert_eq!(a["pass"], true);
    let hash = |out: String| out.lines().find(|l| l.starts_with("report hash")).unwrap().to_string();
    let h1 = hash(ok(bin().args(SMALL_FAREY).output().unwrap()));
    let h2 = hash(ok(bin().args(SMALL_FAREY).output().unwrap()));
    assert_eq!(h1, h2);
    let h3 = hash(ok(bin().args(["--seed", "5"]).args(SMALL_FAREY).output().unwrap()));
    assert_ne!(h1, h3);
}

#[test]
fn constants_are_stored_only_when_calibrating() {
    let dir = scratch("calibrate");
    ok(bin().env("FREESPLIT_CACHE", &dir).args(SMALL_FAREY).output().unwrap());
    assert!(!dir.join("constants-farey.json").exists());
    ok(bin().env("FREESPLIT_CACHE", &dir).arg("--calibrate").args(SMALL_FAREY).output().unwrap());
    assert!(dir.join("constants-farey.json").exists());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn cached_balls_are_reused_and_checked() {
    let dir = scratch("balls");
    let query = ["distance", "std:1", "std:2", "--radius", "2"];
    let first = ok(bin().env("FREESPLIT_CACHE", &dir).args(query).output().unwrap());
    let file = std::fs::read_dir(&dir).unwrap().next().unwrap().unwrap().path();
    let second = ok(bin().env("FREESPLIT_CACHE", &dir).args(query).output().unwrap());
    assert_eq!(first, second);
    assert!(first.starts_with("1 "));

    // other bounds against the same file are refused
    let out = bin().env("FREESPLIT_CACHE", &dir).args(query).args(["--bounds", "3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bounds"));

    // a damaged body is a parse error with its offset
    let text = std::fs::read_to_string(&file).unwrap();
    let cut = text.find('\n').unwrap() + 1;
    std::fs::write(&file, format!("{}#{}", &text[..cut], &text[cut + 1..])).unwrap();
    let out = bin().env("FREESPLIT_CACHE", &dir).args(query).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(&format!("offset {}", cut)), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn fibonacci_run_at_small_k_fits_below_log_phi() {
    // ι is a Fibonacci number plus three, and at small k the offset pulls the
    // fit below log φ, so the run fails its tolerance; the slope approaches
    // log φ from below
    let out = bin()
        .args(["--json", "run", "example43", "--sample", "k_min=1", "--sample", "k_max=8", "--sample", "descent_starts=1"])
        .output()
        .unwrap();
    assert!(matches!(out.status.code(), Some(0 | 1)));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let slope = v["checks"][0]["measured"]["slope"].as_f64().unwrap();
    assert!(slope > 0.3 && slope < 0.4812, "{}", slope);
}

#[test]
fn invalid_specs_and_inputs_fail_cleanly() {
    for args in [
        vec!["run", "bogus"],
        vec!["--rank", "3", "run", "farey"],
        vec!["pcx", "farey"],
        vec!["farey", "1/2", "x"],
        vec!["canonicalize", "{not json"],
    ] {
        let out = bin().args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{:?}", args);
        assert!(out.stderr.starts_with(b"error:"));
    }
}
