use std::path::{Path as FsPath, PathBuf};
use std::process::{Command, Output};

use pgplan::bench::{median, Scenario, CSV_COLUMNS};
use pgplan::{Fgmm, JointConfig, Path};
use serde_json::Value;

fn pgplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pgplan")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = pgplan(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn arg(p: &FsPath) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn plan_then_optimize() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    let opt = dir.path().join("opt.json");
    ok(&[
        "plan",
        "--scenario",
        "narrow_passage_2dof",
        "--sampler",
        "prior",
        "--seed",
        "3",
        "--out",
        arg(&plan),
    ]);
    let v = read_json(&plan);
    assert_eq!(v["success"], true);
    assert_eq!(v["sampler"], "prior");
    let path: Path = serde_json::from_value(v["path"].clone()).unwrap();
    let scenario = Scenario::builtin("narrow_passage_2dof").unwrap();
    assert_eq!(path.first(), &scenario.queries[0].q_init);
    assert_eq!(path.last(), &scenario.queries[0].q_goal);

    let out = ok(&[
        "optimize",
        "--scenario",
        "narrow_passage_2dof",
        "--path",
        arg(&plan),
        "--out",
        arg(&opt),
    ]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("shortcut"));
    let o = read_json(&opt);
    let m = &o["metrics"];
    assert_eq!(m["raw_nodes"].as_u64().unwrap() as usize, path.len());
    assert!(m["shortcut_len_rad"].as_f64().unwrap() <= m["raw_len_rad"].as_f64().unwrap());
    assert!(m["dp_nodes"].as_u64().unwrap() <= m["shortcut_nodes"].as_u64().unwrap());
    assert!(o["trajectory"].is_object());

    // a bare path file is accepted too
    let bare = dir.path().join("bare.json");
    std::fs::write(&bare, serde_json::to_string(&path).unwrap()).unwrap();
    ok(&[
        "optimize",
        "--scenario",
        "narrow_passage_2dof",
        "--path",
        arg(&bare),
        "--out",
        arg(&opt),
    ]);
}

#[test]
fn plan_is_reproducible_for_each_sampler() {
    for sampler in ["uniform", "goal-bias", "prior"] {
        let args = ["plan", "--scenario", "lid_6dof", "--sampler", sampler, "--seed", "7"];
        let a: Value = serde_json::from_slice(&ok(&args).stdout).unwrap();
        let b: Value = serde_json::from_slice(&ok(&args).stdout).unwrap();
        assert_eq!(a["path"], b["path"], "{sampler}");
        assert_eq!(a["extended_nodes"], b["extended_nodes"], "{sampler}");
    }
}

#[test]
fn collect_then_fit_then_plan_with_models() {
    let dir = tempfile::tempdir().unwrap();
    let mut models = Vec::new();
    for endpoint in ["init", "goal"] {
        let data = dir.path().join(format!("{endpoint}.json"));
        let model = dir.path().join(format!("{endpoint}_gmm.json"));
        ok(&[
            "collect-exemplars",
            "--scenario",
            "narrow_passage_2dof",
            "--endpoint",
            endpoint,
            "--m",
            "80",
            "--seed",
            "1",
            "--out",
            arg(&data),
        ]);
        assert_eq!(read_json(&data)["points"].as_array().unwrap().len(), 80);
        ok(&["fit-gmm", "--data", arg(&data), "--k", "2", "--out", arg(&model)]);
        let gmm: Fgmm = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
        assert_eq!(gmm.dim(), 2);
        assert_eq!(gmm.weights().len(), 2);
        assert!((gmm.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        models.push(model);
    }
    let out = ok(&[
        "plan",
        "--scenario",
        "narrow_passage_2dof",
        "--init-model",
        arg(&models[0]),
        "--goal-model",
        arg(&models[1]),
        "--seed",
        "2",
    ]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["success"], true);
    // pre-fitted models skip the fitting stage
    assert_eq!(v["fit_time_s"], 0.0);
}

#[test]
fn validate_reports_connectivity() {
    let v: Value =
        serde_json::from_slice(&ok(&["validate", "--scenario", "narrow_passage_2dof", "--cells", "120"]).stdout)
            .unwrap();
    assert_eq!(v["dim"], 2);
    assert_eq!(v["connectivity"][0]["connected"], true);
    let v: Value = serde_json::from_slice(&ok(&["validate", "--scenario", "handover_12dof"]).stdout).unwrap();
    assert_eq!(v["dim"], 12);
    assert!(v["connectivity"].as_array().unwrap().is_empty());
}

#[test]
fn failures_exit_nonzero_with_a_message() {
    let out = pgplan(&["plan", "--scenario", "no_such_scene"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let out = pgplan(&["plan", "--scenario", "lid_6dof", "--query", "missing"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing"));

    // usage errors come from the argument parser
    let out = pgplan(&["bench", "--scenario", "lid_6dof", "--sampler", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let out = pgplan(&["plan", "--scenario", "lid_6dof", "--init-model", "x.json"]);
    assert_eq!(out.status.code(), Some(2));

    // a path straight through the slot wall is rejected before optimizing
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let s = Scenario::builtin("narrow_passage_2dof").unwrap();
    let q = &s.queries[0];
    let p = Path::new(vec![
        q.q_init.clone(),
        JointConfig::new(vec![0.0, 0.3]).unwrap(),
        q.q_goal.clone(),
    ])
    .unwrap();
    std::fs::write(&bad, serde_json::to_string(&p).unwrap()).unwrap();
    let out = pgplan(&["optimize", "--scenario", "narrow_passage_2dof", "--path", arg(&bad)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("in collision"));
}

#[test]
fn bench_csv_summary_and_paths() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("bench.csv");
    let summary = dir.path().join("summary.tsv");
    let paths = dir.path().join("paths.json");
    ok(&[
        "bench",
        "--scenario",
        "narrow_passage_2dof",
        "--trials",
        "4",
        "--seed",
        "10",
        "--out",
        arg(&csv_path),
        "--summary",
        arg(&summary),
        "--paths",
        arg(&paths),
    ]);
    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "scenario,query,sampler,seed,success,extended_nodes,plan_time_s,fit_time_s,raw_nodes,raw_len_rad,shortcut_nodes,shortcut_len_rad,dp_nodes,refined_joints"
    );
    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), CSV_COLUMNS);
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 12);
    for r in &rows {
        // timing is opt-in so the default output is reproducible
        assert_eq!(&r[6], "");
        assert_eq!(&r[7], "");
        let seed: u64 = r[3].parse().unwrap();
        assert!((10..14).contains(&seed));
        if &r[4] == "true" {
            assert!(r[9].parse::<f64>().unwrap() >= r[11].parse::<f64>().unwrap());
        }
    }

    // the summary's medians follow from the CSV
    let table = std::fs::read_to_string(&summary).unwrap();
    for sampler in ["uniform", "goal-bias", "prior"] {
        let mut nodes: Vec<f64> = rows
            .iter()
            .filter(|r| &r[2] == sampler)
            .map(|r| r[5].parse().unwrap())
            .collect();
        let want = median(&mut nodes).unwrap();
        let line = table.lines().find(|l| l.split('\t').nth(1) == Some(sampler)).unwrap();
        let got: f64 = line.split('\t').nth(5).unwrap().parse().unwrap();
        assert_eq!(got, want, "{sampler}");
    }

    // reloaded paths re-validate against the scenario
    let scenario = Scenario::builtin("narrow_passage_2dof").unwrap();
    let trials: Vec<Value> = serde_json::from_str(&std::fs::read_to_string(&paths).unwrap()).unwrap();
    assert_eq!(trials.len(), 12);
    for t in trials.iter().filter(|t| !t["path"].is_null()) {
        for (key, res) in [
            ("path", scenario.planner.check_resolution),
            ("optimized", scenario.optimizer.check_resolution),
        ] {
            let p: Path = serde_json::from_value(t[key].clone()).unwrap();
            for w in p.waypoints().windows(2) {
                assert!(scenario.scene.segment_is_free(&w[0], &w[1], res).unwrap());
            }
        }
    }
}

#[test]
fn bench_timing_and_stdout() {
    let out = ok(&[
        "bench",
        "--scenario",
        "lid_6dof",
        "--trials",
        "2",
        "--sampler",
        "prior",
        "--timing",
        "--plan-only",
    ]);
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert_eq!(&r[2], "prior");
        assert!(r[6].parse::<f64>().unwrap() > 0.0);
        assert!(r[7].parse::<f64>().unwrap() > 0.0);
        // optimizer columns stay empty
        assert!((8..14).all(|i| r[i].is_empty()));
    }
    assert!(String::from_utf8_lossy(&out.stderr).contains("success_rate"));
}
