use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_fs-ddrom");

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run(args: &[&str], cfg: &Path, out: &Path) -> (i32, String) {
    let o = Command::new(BIN).args(args).arg("--config").arg(cfg).arg("--out").arg(out).output().expect("binary runs");
    (o.status.code().unwrap_or(-1), String::from_utf8_lossy(&o.stderr).into_owned())
}

fn run_ok(cmd: &str, cfg: &Path, out: &Path) {
    let (code, err) = run(&[cmd], cfg, out);
    assert_eq!(code, 0, "{cmd} failed: {err}");
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

/// Rows of a CSV file keyed by header name.
fn read_csv(p: &Path) -> Vec<HashMap<String, String>> {
    let text = std::fs::read_to_string(p).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().expect("header").split(',').map(str::to_string).collect();
    lines.map(|l| header.iter().cloned().zip(l.split(',').map(str::to_string)).collect()).collect()
}

fn num(row: &HashMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap_or_else(|_| panic!("{key} = {:?}", row[key]))
}

fn kappa_config(nx: usize, count: usize) -> Value {
    json!({
        "system": {
            "kind": "adr", "kappa": {"param": 0}, "beta": [1.0, 0.5], "mu": 1.0,
            "source": [{"c": 1.0}, {"c": 1.0, "x": {"sin": std::f64::consts::TAU}, "y": {"pow": 1}}]
        },
        "mesh": {"nx": nx, "ny": nx},
        "samples": {"ranges": [[0.05, 0.5]], "count": count}
    })
}

fn schema() -> jsonschema::Validator {
    let s = read_json(&Path::new(env!("CARGO_MANIFEST_DIR")).join("config.schema.json"));
    jsonschema::validator_for(&s).expect("schema compiles")
}

#[test]
fn example_configs_match_schema_and_parse() {
    let v = schema();
    let mut n = 0;
    for entry in std::fs::read_dir(repo_root().join("configs")).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "json") {
            let cfg = read_json(&p);
            assert!(v.is_valid(&cfg), "{} violates the schema", p.display());
            fs_ddrom_cli::RunConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            n += 1;
        }
    }
    assert!(n >= 4);
}

#[test]
fn unknown_keys_fail_schema_and_exit_2() {
    let dir = TempDir::new().unwrap();
    let mut cfg = kappa_config(2, 2);
    cfg["system"]["nu"] = json!(1.0);
    assert!(!schema().is_valid(&cfg));
    let p = write_config(dir.path(), "c.json", &cfg);
    assert_eq!(run(&["snapshots"], &p, dir.path()).0, 2);

    let mut cfg = kappa_config(2, 2);
    cfg["meshes"] = json!(3);
    assert!(!schema().is_valid(&cfg));
    let p = write_config(dir.path(), "c.json", &cfg);
    assert_eq!(run(&["snapshots"], &p, dir.path()).0, 2);
}

#[test]
fn converge_reports_pass_and_exact() {
    let dir = TempDir::new().unwrap();
    let smooth = json!({
        "system": {"kind": "adr", "kappa": 0.5, "beta": [1.0, 0.5], "mu": 1.0,
                   "exact": {"kind": "trig", "kx": std::f64::consts::PI, "ky": std::f64::consts::PI}},
        "converge": {"degrees": [1], "sizes": [4, 8, 16, 32]}
    });
    let p = write_config(dir.path(), "smooth.json", &smooth);
    let out = dir.path().join("smooth");
    run_ok("converge", &p, &out);
    let s = read_json(&out.join("convergence_summary.json"));
    let d = &s["degrees"][0];
    assert_eq!(d["status"], "pass");
    assert!(d["slope"].as_f64().unwrap() >= 1.3);
    assert_eq!(read_csv(&out.join("convergence.csv")).len(), 4);

    let poly = json!({
        "system": {"kind": "adr", "kappa": 1.0, "beta": [1.0, 0.0], "mu": 1.0,
                   "exact": {"kind": "quadratic", "coeffs": [1.0, 0.5, -0.25, 0.3, 0.2, -0.1]}},
        "degree": 2,
        "converge": {"degrees": [2], "sizes": [2, 3, 4]}
    });
    let p = write_config(dir.path(), "poly.json", &poly);
    let out = dir.path().join("poly");
    run_ok("converge", &p, &out);
    assert_eq!(read_json(&out.join("convergence_summary.json"))["degrees"][0]["status"], "exact");

    let mut two = smooth.clone();
    two["converge"]["sizes"] = json!([4, 8]);
    assert!(!schema().is_valid(&two));
    let p = write_config(dir.path(), "two.json", &two);
    assert_eq!(run(&["converge"], &p, &dir.path().join("two")).0, 2);
}

#[test]
fn snapshot_split_and_determinism() {
    let dir = TempDir::new().unwrap();
    let p = write_config(dir.path(), "c.json", &kappa_config(2, 100));
    let a = dir.path().join("a");
    run_ok("snapshots", &p, &a);
    let rows = read_csv(&a.join("samples.csv"));
    assert_eq!(rows.len(), 100);
    let train: Vec<usize> = rows.iter().filter(|r| r["is_train"] == "true").map(|r| r["index"].parse().unwrap()).collect();
    assert_eq!(train, (0..100).step_by(5).collect::<Vec<_>>());

    let b = dir.path().join("b");
    run_ok("snapshots", &p, &b);
    for f in ["snapshots.bin", "samples.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f} differs between reruns");
    }
    let manifest = read_json(&a.join("manifest_snapshots.json"));
    let names: Vec<&str> = manifest["files"].as_array().unwrap().iter().map(|f| f["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["snapshots.bin", "samples.csv"]);
    assert_eq!(manifest["config_hash"], read_json(&b.join("manifest_snapshots.json"))["config_hash"]);

    let p = write_config(dir.path(), "one.json", &kappa_config(2, 1));
    let one = dir.path().join("one");
    run_ok("snapshots", &p, &one);
    let rows = read_csv(&one.join("samples.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["is_train"], "true");
}

#[test]
fn random_sampling_follows_seed_flag() {
    let dir = TempDir::new().unwrap();
    let mut cfg = kappa_config(2, 6);
    cfg["samples"]["spacing"] = json!("random");
    let p = write_config(dir.path(), "c.json", &cfg);
    let samples = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        let (code, err) = run(&["snapshots", "--seed", seed], &p, &out);
        assert_eq!(code, 0, "{err}");
        std::fs::read(out.join("snapshots.bin")).unwrap()
    };
    assert_eq!(samples("3", "a"), samples("3", "b"));
    assert_ne!(samples("3", "c"), samples("4", "d"));
}

#[test]
fn rom_eval_bounds_and_rank_behaviour() {
    let dir = TempDir::new().unwrap();
    let mut cfg = kappa_config(6, 100);
    cfg["rom"] = json!({"ranks": [1, 3, 20]});
    let p = write_config(dir.path(), "c.json", &cfg);
    let out = dir.path().join("o");
    run_ok("snapshots", &p, &out);
    run_ok("rom-eval", &p, &out);
    let s = read_json(&out.join("rom_summary.json"));
    assert_eq!(s["violations"], 0);
    assert_eq!((s["train"].as_u64(), s["test"].as_u64()), (Some(20), Some(80)));
    let m = s["models"].as_array().unwrap();
    let test = |i: usize| m[i]["mean_test_l2"].as_f64().unwrap();
    assert!(test(1) <= test(0), "r=3 {} vs r=1 {}", test(1), test(0));

    let rows = read_csv(&out.join("rom_estimators.csv"));
    assert_eq!(rows.len(), 300);
    for r in &rows {
        assert!(num(r, "err_r") <= num(r, "eta_r"));
        assert!(num(r, "err_l2") <= num(r, "eta_l"));
        if r["r"] == "20" && r["is_train"] == "true" {
            assert!(num(r, "err_l2") <= 1e-8, "training column not reproduced: {}", r["err_l2"]);
        }
    }
}

#[test]
fn ddrom_single_subdomain_matches_rom_eval() {
    let dir = TempDir::new().unwrap();
    let mut cfg = kappa_config(4, 20);
    cfg["rom"] = json!({"ranks": [1, 2, 3]});
    let p = write_config(dir.path(), "c.json", &cfg);
    let out = dir.path().join("o");
    run_ok("snapshots", &p, &out);
    run_ok("rom-eval", &p, &out);
    run_ok("ddrom-eval", &p, &out);
    let rom = read_csv(&out.join("rom_estimators.csv"));
    let dd = read_csv(&out.join("ddrom_estimators.csv"));
    assert_eq!(rom.len(), dd.len());
    for (a, b) in rom.iter().zip(&dd) {
        assert_eq!(b["subdomains"], "1");
        assert_eq!((&a["r"], &a["param_index"]), (&b["ranks"], &b["param_index"]));
        for key in ["err_l2", "err_r", "err_energy", "eta_r", "eta_r_energy", "eta_l", "eta_l_energy"] {
            let (x, y) = (num(a, key), num(b, key));
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{key}: {x} vs {y}");
        }
    }
}

#[test]
fn ddrom_uniform_rank_sweep_is_non_increasing() {
    let dir = TempDir::new().unwrap();
    let mut cfg = kappa_config(8, 100);
    cfg["partition"] = json!({"subdomains": 4});
    let p = write_config(dir.path(), "c.json", &cfg);
    let out = dir.path().join("o");
    run_ok("snapshots", &p, &out);
    run_ok("ddrom-eval", &p, &out);
    let s = read_json(&out.join("ddrom_summary.json"));
    assert_eq!(s["violations"], 0);
    let errs: Vec<f64> = s["models"].as_array().unwrap().iter().map(|m| m["mean_test_l2"].as_f64().unwrap()).collect();
    assert_eq!(errs.len(), 5);
    for w in errs.windows(2) {
        assert!(w[1] <= w[0], "{errs:?}");
    }
    let header = std::fs::read_to_string(out.join("ddrom_estimators.csv")).unwrap();
    assert!(header.starts_with("variant,subdomains,ranks,param_index,is_train,err_l2"));
}

#[test]
fn repartitioned_two_regime_beats_stripes() {
    let dir = TempDir::new().unwrap();
    let cfg = repo_root().join("configs/two_regime.json");
    let out = dir.path().join("o");
    run_ok("snapshots", &cfg, &out);
    run_ok("ddrom-eval", &cfg, &out);
    let s = read_json(&out.join("ddrom_summary.json"));
    let models = s["models"].as_array().unwrap();
    let find = |label: &str| models.iter().find(|m| m["label"] == label).unwrap_or_else(|| panic!("no {label} row"));
    let (stripes, rep) = (find("stripes"), find("repartitioned"));
    assert_eq!(stripes["subdomains"], 4);
    assert_eq!(rep["subdomains"], 2);
    let total = |m: &Value| m["ranks"].as_array().unwrap().iter().map(|r| r.as_u64().unwrap()).sum::<u64>();
    assert_eq!(total(stripes), total(rep));
    let (a, b) = (rep["mean_test_l2"].as_f64().unwrap(), stripes["mean_test_l2"].as_f64().unwrap());
    assert!(a <= b, "repartitioned {a} vs stripes {b}");
}

#[test]
fn indicators_on_identical_snapshots_vanish() {
    let dir = TempDir::new().unwrap();
    let mut cfg = kappa_config(4, 1);
    cfg["samples"] = json!({"values": [[0.2], [0.2], [0.2], [0.2]]});
    cfg["split"] = json!({"stride": 1});
    cfg["repartition"] = json!({});
    let p = write_config(dir.path(), "c.json", &cfg);
    let out = dir.path().join("o");
    run_ok("snapshots", &p, &out);
    run_ok("indicators", &p, &out);
    for kind in ["variance", "grassmannian"] {
        let rows = read_csv(&out.join(format!("indicator_{kind}.csv")));
        assert_eq!(rows.len(), 16);
        for r in &rows {
            assert!(num(r, "value").abs() <= 1e-12, "{kind}: {}", r["value"]);
        }
    }
    let scan = read_csv(&out.join("reconstruction_scan.csv"));
    for kind in ["variance", "grassmannian"] {
        assert_eq!(scan.iter().filter(|r| r["indicator_kind"] == kind).count(), 9);
    }
}

#[test]
fn grassmannian_labels_recover_two_regime_split() {
    let dir = TempDir::new().unwrap();
    let cfg = repo_root().join("configs/two_regime.json");
    let out = dir.path().join("o");
    run_ok("snapshots", &cfg, &out);
    run_ok("indicators", &cfg, &out);
    let rows = read_csv(&out.join("indicator_grassmannian.csv"));
    let left: Vec<bool> = rows.iter().map(|r| num(r, "barycenter_x") < 0.0).collect();
    let low: Vec<bool> = rows.iter().map(|r| r["label"] == "0").collect();
    assert!(left == low || left.iter().zip(&low).all(|(a, b)| a != b));
}

#[test]
fn axioms_and_io_exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("ax");
    run_ok("check-axioms", &repo_root().join("configs/elasticity_axioms.json"), &out);
    let a = read_json(&out.join("axioms.json"));
    assert_eq!(a["all_passed"], true);
    assert_eq!(a["systems"].as_array().unwrap().len(), 5);

    let p = write_config(dir.path(), "c.json", &kappa_config(2, 3));
    assert_eq!(run(&["rom-eval"], &p, &dir.path().join("missing")).0, 4);
    assert_eq!(run(&["snapshots"], &dir.path().join("nope.json"), &out).0, 4);

    let bad = json!({"system": {"kind": "adr", "kappa": 1e-320, "mu": 1.0}, "mesh": {"nx": 2, "ny": 2}, "samples": {"values": [[0.0]]}});
    let p = write_config(dir.path(), "bad.json", &bad);
    assert_eq!(run(&["snapshots"], &p, &dir.path().join("bad")).0, 3);
}

#[test]
fn snapshot_mismatch_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("o");
    let p = write_config(dir.path(), "a.json", &kappa_config(2, 5));
    run_ok("snapshots", &p, &out);
    let q = write_config(dir.path(), "b.json", &kappa_config(3, 5));
    assert_eq!(run(&["rom-eval"], &q, &out).0, 2);
    let r = write_config(dir.path(), "c.json", &kappa_config(2, 6));
    assert_eq!(run(&["rom-eval"], &r, &out).0, 2);
}
