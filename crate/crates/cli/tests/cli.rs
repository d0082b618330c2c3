use std::path::Path;
use std::process::{Command, Output};

use curvlab::SpeedSpec;

fn curvlab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curvlab"))
        .args(args)
        .current_dir(cwd)
        .env_remove("CURVLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn stable_cylinder_decays_at_the_predicted_rate() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.cfg"),
        "# mean curvature flow, n = 2\nn = 2\nradius_factor = 1.2\nmodes = 1:0.01\nN = 64\nt_end = 0.8\n",
    )
    .unwrap();
    let o = curvlab(&["simulate", "--config", "run.cfg", "--out", "out"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = dir.path().join("out");
    let traj = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().next(), Some("time,wvol,sup_dev"));
    let rep = json(&out.join("report.json"));
    assert_eq!(rep["termination"], "completed");
    assert_eq!(rep["verdict"], "consistent");
    assert!(rep["wvol_drift"].as_f64().unwrap() <= 1e-6);
    let man = json(&out.join("manifest.json"));
    assert_eq!(man["command"], "simulate");
    let outputs: Vec<&str> = man["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    for f in ["trajectory.csv", "profile_final.csv", "report.json"] {
        assert!(outputs.iter().any(|o| o.ends_with(f)), "{f} missing from {outputs:?}");
    }
}

#[test]
fn bad_key_exits_1_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.cfg"), "n = 2\nradius_fator = 1.2\n").unwrap();
    let o = curvlab(&["simulate", "--config", "bad.cfg", "--out", "out"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("radius_fator"), "{}", stderr(&o));

    std::fs::write(dir.path().join("bad2.cfg"), "n = 2\nrtol = 0.5\n").unwrap();
    let o = curvlab(&["simulate", "--config", "bad2.cfg", "--out", "out"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("'rtol'"), "{}", stderr(&o));
}

#[test]
fn deep_neck_exits_2_with_min_rho() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("neck.cfg"), "n = 2\nradius = 0.3\nmodes = 1:0.85\nN = 64\nt_end = 0.1\n").unwrap();
    let o = curvlab(&["simulate", "--config", "neck.cfg", "--out", "out"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("min-rho"));
    let rep = json(&dir.path().join("out/report.json"));
    assert_eq!(rep["termination"], "min-rho");
    assert!(dir.path().join("out/manifest.json").exists());
}

#[test]
fn unknown_suite_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = curvlab(&["verify", "--suite", "nope"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nope"));
}

#[test]
fn paper_tables_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = curvlab(&["verify", "--suite", "paper-tables", "--seed", "3", "--out", "v.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.contains(" PASS: ")).count(), 4);
    let rep = json(&dir.path().join("v.json"));
    assert_eq!(rep["all_passed"], true);
    assert_eq!(json(&dir.path().join("v.json.manifest.json"))["seed"], 3);
}

#[test]
fn stability_table_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = curvlab(&["stability-table", "--out", "t.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,b,condition_value_num,condition_value_den,stable"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.iter().all(|r| r[1].parse::<usize>().unwrap() < r[0].parse::<usize>().unwrap()));
    let b0: Vec<(&str, &str)> = rows.iter().filter(|r| r[1] == "0").map(|r| (r[0], r[4])).collect();
    assert!(b0.contains(&("10", "false")) && b0.contains(&("11", "true")));
    assert_eq!(rows.len(), (2..=30).map(|n: usize| n.min(13)).sum::<usize>());
}

#[test]
fn bifurcation_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = curvlab(
        &["bifurcation", "--n", "4", "--b", "1", "--samples", "40", "--out", "a.csv", "--threads", "1"],
        dir.path(),
    );
    let b = curvlab(
        &["bifurcation", "--n", "4", "--b", "1", "--samples", "40", "--out", "b.csv", "--threads", "3"],
        dir.path(),
    );
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(b.status.code(), Some(0), "{}", stderr(&b));
    let ta = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(ta, std::fs::read(dir.path().join("b.csv")).unwrap());
    let text = String::from_utf8(ta).unwrap();
    assert_eq!(text.lines().next(), Some("s,eta,eta_bar,rho0,H,err_estimate"));
    assert_eq!(text.lines().count(), 41);
    assert!(!text.contains("NaN"));
}

#[test]
fn bifurcation_rejects_b_out_of_range() {
    let dir = tempfile::tempdir().unwrap();
    let o = curvlab(&["bifurcation", "--n", "3", "--b", "3"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unduloid_profile_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let o = curvlab(&["unduloid", "--n", "3", "--s", "0.3", "--samples", "33"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("z,rho"));
    assert_eq!(text.lines().count(), 34);
}

#[test]
fn tabulated_speed_matches_the_preset() {
    let dir = tempfile::tempdir().unwrap();
    let speed = SpeedSpec::MeanCurvature.build(3, 1.0).unwrap();
    let mut table = String::from("eta,F1,Fn,F1p,Fnp,F1pp,Fnpp,Fnn,Fnnp,Fnnn\n");
    for i in 0..=2000 {
        let eta = 0.5 + 19.5 * i as f64 / 2000.0;
        let p = speed.eta_profile(eta).unwrap();
        let vals = [eta, p.f1, p.fn_, p.f1p, p.fnp, p.f1pp, p.fnpp, p.fnn, p.fnnp, p.fnnn];
        let row: Vec<String> = vals.iter().map(|v| format!("{v:e}")).collect();
        table.push_str(&row.join(","));
        table.push('\n');
    }
    std::fs::write(dir.path().join("speed.csv"), table).unwrap();
    std::fs::write(dir.path().join("tab.cfg"), "n = 3\nspeed = table:speed.csv\nrun = analysis\n").unwrap();
    std::fs::write(dir.path().join("pre.cfg"), "n = 3\nrun = analysis\neta_bracket = 0.5, 20\n").unwrap();
    for (cfg, out) in [("tab.cfg", "tab"), ("pre.cfg", "pre")] {
        let o = curvlab(&["simulate", "--config", cfg, "--out", out], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let t = json(&dir.path().join("tab/report.json"));
    let p = json(&dir.path().join("pre/report.json"));
    let rt = t["analysis"]["R_crit"].as_f64().unwrap();
    let rp = p["analysis"]["R_crit"].as_f64().unwrap();
    assert!((rt - rp).abs() < 1e-4 * rp, "{rt} vs {rp}");
    assert_eq!(t["analysis"]["verdict"], p["analysis"]["verdict"]);
}

#[test]
fn help_and_usage_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(curvlab(&["--help"], dir.path()).status.code(), Some(0));
    assert_eq!(curvlab(&["simulate"], dir.path()).status.code(), Some(1));
    let o = Command::new(env!("CARGO_BIN_EXE_curvlab"))
        .args(["stability-table", "--n", "12", "--b", "0"])
        .env("CURVLAB_THREADS", "0")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}
