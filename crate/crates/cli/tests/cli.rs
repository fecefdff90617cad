use std::collections::HashMap;
use std::path::Path;
use std::process::{Command, Output};

fn qgeo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgeo")).args(args).output().expect("binary runs")
}

fn qgeo_env(args: &[&str], key: &str, val: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgeo")).args(args).env(key, val).output().expect("binary runs")
}

/// Rows keyed by column name with the unit suffix stripped.
fn rows(out: &Output) -> Vec<HashMap<String, String>> {
    assert!(out.status.code().is_some());
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    let names: Vec<String> = r
        .headers()
        .unwrap()
        .iter()
        .map(|h| h.split(" [").next().unwrap().to_string())
        .collect();
    r.records()
        .map(|rec| names.iter().cloned().zip(rec.unwrap().iter().map(String::from)).collect())
        .collect()
}

fn num(row: &HashMap<String, String>, key: &str) -> f64 {
    row.get(key).unwrap_or_else(|| panic!("missing column {key}")).parse().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn geometry_near_canonical_transition() {
    let out = qgeo(&["geometry", "--param", "theta=pi-1e-6", "--param", "r=1-1e-6", "--T", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &rows(&out)[0];
    assert!(num(r, "qmt_phi_phi").abs() < 1e-6);
    // Along the diagonal path the θ and r entries share T² equally.
    let (tt, rr) = (num(r, "qmt_theta_theta"), num(r, "qmt_r_r"));
    assert!(((tt + rr) - 100.0).abs() < 1e-3, "{tt} {rr}");
    assert!((tt - 50.0).abs() < 1e-3);
}

#[test]
fn geometry_near_ssh_transition() {
    let out = qgeo(&["geometry", "--model", "ssh", "--param", "k=pi-1e-6", "--param", "v=1", "--param", "w=1"]);
    let r = &rows(&out)[0];
    assert!((num(r, "qmt_v_v") - 100.0).abs() < 1e-3);
    assert!((num(r, "qmt_w_w") - 100.0).abs() < 1e-3);
}

#[test]
fn repetitions_scale_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let one = write(dir.path(), "one.toml", "probe = \"0, 0.6, 0.8\"\n[params]\ntheta = 2\nphi = 1\nr = 0.5\n");
    let four = write(
        dir.path(),
        "four.toml",
        "probe = \"0, 0.6, 0.8\"\nrepetitions = 4\n[params]\ntheta = 2\nphi = 1\nr = 0.5\n",
    );
    let a = &rows(&qgeo(&["geometry", "--config", &one]))[0];
    let b = &rows(&qgeo(&["geometry", "--config", &four]))[0];
    for k in a.keys().filter(|k| k.starts_with("qcrb_")) {
        let (x, y) = (num(a, k), num(b, k));
        assert!((y - x / 4.0).abs() <= 1e-12 * x.abs().max(1.0), "{k}: {x} {y}");
    }
}

#[test]
fn exact_transition_exits_with_degeneracy() {
    let out = qgeo(&["geometry", "--param", "theta=pi", "--param", "r=1"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("hint:") && err.contains("limit path"), "{err}");
}

#[test]
fn inset_slice() {
    let out = qgeo(&["scan", "--grid", "theta=pi-0.5:pi:51", "--param", "r=1", "--T", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let rs = rows(&out);
    assert_eq!(rs.len(), 51);
    for (i, want) in [(50, 100.0), (40, 99.9271), (0, 94.1155)] {
        assert!((num(&rs[i], "max_qmt_theta") - want).abs() < 5e-4);
    }
}

#[test]
fn winding_grid_steps_at_v_equals_w() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "w.toml", "model = \"ssh\"\n[scan]\nquantities = [\"winding\"]\n");
    let out = qgeo(&["scan", "--config", &cfg, "--grid", "v=0.1:2.1:6", "--grid", "w=0.2:2:5"]);
    let rs = rows(&out);
    assert_eq!(rs.len(), 30);
    // Row-major: v is the outer axis.
    assert!(num(&rs[0], "v") == num(&rs[4], "v") && num(&rs[0], "w") < num(&rs[1], "w"));
    for r in &rs {
        let (v, w) = (num(r, "v"), num(r, "w"));
        let want = if v < w { 1.0 } else { 0.0 };
        assert_eq!(num(r, "winding"), want);
        assert!((num(r, "winding_quadrature") - want).abs() < 1e-6);
    }
}

#[test]
fn coarse_chern_over_r() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "T = 50\n[scan]\nquantities = [\"coarse_chern\", \"coarse_chern_quadrature\"]\n[[scan.axis]]\nname = \"r\"\nfrom = 0.3\nto = 2\nn = 5\n",
    );
    let rs = rows(&qgeo(&["scan", "--config", &cfg]));
    for r in &rs {
        let want = if num(r, "r") < 1.0 { 2.0 } else { 0.0 };
        assert_eq!(num(r, "coarse_chern").abs(), want);
        assert!((num(r, "coarse_chern_quadrature").abs() - want).abs() < 1e-3);
    }
}

#[test]
fn scan_marks_failing_points() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "w.toml", "model = \"ssh\"\n[scan]\nquantities = [\"winding\", \"max_qmt\"]\n");
    let out = qgeo(&["scan", "--config", &cfg, "--grid", "v=0.5:1.5:3", "--param", "w=1"]);
    assert_eq!(out.status.code(), Some(0));
    let rs = rows(&out);
    assert_eq!(rs[0]["status"], "ok");
    assert_eq!(rs[1]["status"], "transition_point");
    assert!(num(&rs[1], "winding").is_nan());
    assert_eq!(rs[2]["status"], "ok");
}

#[test]
fn output_is_byte_stable_and_thread_independent() {
    let args = ["scan", "--grid", "theta=0.1:3:9", "--grid", "r=0:2:7", "--T", "7"];
    let a = qgeo(&args);
    let b = qgeo(&args);
    let c = qgeo_env(&args, "QGEO_THREADS", "1");
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    assert!(!a.stdout.contains(&b'\r'));
    assert_eq!(qgeo_env(&args, "QGEO_THREADS", "zero").status.code(), Some(2));
}

#[test]
fn json_mirrors_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let p = path.to_str().unwrap();
    let out = qgeo(&["scan", "--grid", "r=0:1:3", "--format", "json", "--out", p]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let csv_rows = rows(&qgeo(&["scan", "--grid", "r=0:1:3"]));
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    for (j, c) in v["rows"].as_array().unwrap().iter().zip(&csv_rows) {
        for (k, val) in c {
            let jv = &j[k.as_str()];
            match val.parse::<f64>() {
                Ok(x) => assert_eq!(jv.as_f64().unwrap(), x),
                Err(_) => assert_eq!(jv.as_str().unwrap(), val),
            }
        }
    }
    assert_eq!(v["units"]["max_qmt_theta"], "1/rad^2");
}

#[test]
fn table_rows_replayed() {
    let dir = tempfile::tempdir().unwrap();
    let theta = write(
        dir.path(),
        "theta.toml",
        "T = 10\n[adaptive]\ninitial = [\"pi/4\", 1]\nfirst = [\"pi/3\", \"pi/5\", \"pi/6\", \"pi/15\"]\n",
    );
    let out = qgeo(&["adaptive", "--config", &theta]);
    assert_eq!(out.status.code(), Some(0));
    let rs = rows(&out);
    let want = [62.9773, 88.894, 99.6344, 99.994];
    let dev = [1.309, 0.680, 0.157, 0.052];
    for i in 0..4 {
        assert!((num(&rs[i + 1], "qmt") - want[i]).abs() < 5e-4);
        assert!((num(&rs[i + 1], "dev_theta") - dev[i]).abs() < 1e-3);
    }
    assert_eq!(rs[4]["status"], "converged");

    let r = write(dir.path(), "r.toml", "T = 10\n[adaptive]\ninitial = [\"pi\", 0.2]\nsecond = [0.1, 0.3, 0.2, 0.17]\n");
    let out = qgeo(&["adaptive", "--config", &r]);
    // The last r row sits at 97.04, below the peak threshold.
    assert_eq!(out.status.code(), Some(5));
    let rs = rows(&out);
    assert_eq!(rs[4]["status"], "not_converged");
    for (i, want) in [(1, 0.88088), (2, 3.57969), (4, 97.0358)] {
        assert!((num(&rs[i], "qmt") - want).abs() < 5e-4);
    }
}

#[test]
fn empty_schedule_at_transition() {
    let rs = rows(&qgeo(&["adaptive", "--param", "theta=pi", "--param", "r=1", "--T", "10"]));
    assert_eq!(rs.len(), 1);
    assert!((num(&rs[0], "qmt") - 100.0).abs() < 1e-12);
}

#[test]
fn search_and_noise_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", "[adaptive]\ninitial = [\"pi/4\", 0.2]\npolicy = \"shrinking\"\nstep = 0.3\n");
    let out = qgeo(&["adaptive", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let last = rows(&out).pop().unwrap();
    assert!(num(&last, "dev_theta") < 0.01 && num(&last, "dev_r") < 0.01);
    let a = qgeo(&["adaptive", "--config", &cfg, "--noise-sigma", "0.05", "--seed", "3"]);
    let b = qgeo(&["adaptive", "--config", &cfg, "--noise-sigma", "0.05", "--seed", "3"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(qgeo(&["adaptive", "--config", &cfg, "--noise-sigma", "-1"]).status.code(), Some(2));
    let both = write(dir.path(), "b.toml", "[adaptive]\nfirst = [0.1]\npolicy = \"fixed\"\n");
    assert_eq!(qgeo(&["adaptive", "--config", &both]).status.code(), Some(2));
}

#[test]
fn verify_passes_and_catches_a_fault() {
    let out = qgeo(&["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(rows(&out).iter().all(|r| r["status"] == "pass"));
    let out = qgeo(&["verify", "--fault", "flip-berry-sign"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("canonical_ground_qgt_vs_oracle"));
}

#[test]
fn config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "T = 10\n[params\n");
    let out = qgeo(&["geometry", "--config", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    let bad = write(dir.path(), "bad2.toml", "[params]\ntheta = \"pi +* 2\"\n");
    let out = qgeo(&["geometry", "--config", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("params.theta"));
    assert_eq!(qgeo(&["geometry", "--T", "-1"]).status.code(), Some(2));
    assert_eq!(qgeo(&["geometry", "--config", "/nonexistent.toml"]).status.code(), Some(2));
    assert_eq!(qgeo(&["scan", "--grid", "theta=0:1:1"]).status.code(), Some(2));
    assert_eq!(qgeo(&["geometry", "--fd-step", "1"]).status.code(), Some(2));
}

#[test]
fn custom_model_matches_canonical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "custom.toml",
        "model = \"custom\"\nprobe = \"0.6, 0, 0.8\"\n[custom]\nparams = [\"a\", \"b\"]\nx = \"2*sin(a)*cos(b)\"\ny = \"2*sin(a)*sin(b)\"\nz = \"2*cos(a) + 1\"\n[params]\na = 1.1\nb = 0.4\n",
    );
    let c = &rows(&qgeo(&["geometry", "--config", &cfg]))[0];
    let k = &rows(&qgeo(&["geometry", "--probe", "0.6,0,0.8", "--param", "theta=1.1", "--param", "phi=0.4", "--param", "r=0.5"]))[0];
    for (a, b) in [("a_a", "theta_theta"), ("a_b", "theta_phi"), ("b_b", "phi_phi")] {
        for m in ["qmt", "berry"] {
            let (x, y) = (num(c, &format!("{m}_{a}")), num(k, &format!("{m}_{b}")));
            assert!((x - y).abs() < 1e-6 * (1.0 + y.abs()), "{m}_{a}: {x} vs {y}");
        }
    }
}
