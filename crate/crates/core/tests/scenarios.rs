use std::collections::BTreeSet;

use pgplan::bench::{builtin_json, Scenario, ScenarioFile, BUILTIN_SCENARIOS, SCENARIO_SCHEMA};
use pgplan::collision::DEFAULT_SWEEP_RESOLUTION;
use pgplan::optimizer::OptimizerParams;
use pgplan::PlannerParams;
use serde_json::Value;

fn schema() -> Value {
    serde_json::from_str(SCENARIO_SCHEMA).unwrap()
}

fn keys(v: &Value) -> BTreeSet<String> {
    v.as_object().unwrap().keys().cloned().collect()
}

#[test]
fn builtin_files_round_trip() {
    for name in BUILTIN_SCENARIOS {
        let file: ScenarioFile = serde_json::from_str(builtin_json(name).unwrap()).unwrap();
        let text = serde_json::to_string(&file).unwrap();
        let again: ScenarioFile = serde_json::from_str(&text).unwrap();
        assert_eq!(file, again, "{name}");
        let a = Scenario::from_file(file).unwrap();
        let b = Scenario::from_json(&text).unwrap();
        assert_eq!(a.planner, b.planner);
        assert_eq!(a.optimizer, b.optimizer);
        assert_eq!(a.queries.len(), b.queries.len());
        assert_eq!(a.scene.sweep_resolution(), b.scene.sweep_resolution());
    }
}

#[test]
fn builtin_queries_are_free_and_in_limits() {
    for name in BUILTIN_SCENARIOS {
        let s = Scenario::builtin(name).unwrap();
        for q in &s.queries {
            for end in [&q.q_init, &q.q_goal] {
                assert!(s.scene.config_is_free(end).unwrap(), "{name}/{}", q.name);
                assert!(s.scene.robot().within_limits(end), "{name}/{}", q.name);
            }
        }
    }
}

#[test]
fn schema_lists_every_serialized_field() {
    let schema = schema();
    let props = &schema["properties"];
    let file: ScenarioFile = serde_json::from_str(builtin_json("lid_6dof").unwrap()).unwrap();
    let top = keys(&serde_json::to_value(&file).unwrap());
    assert_eq!(top, keys(props));
    for r in schema["required"].as_array().unwrap() {
        assert!(top.contains(r.as_str().unwrap()));
    }

    let planner = keys(&serde_json::to_value(PlannerParams::default()).unwrap());
    assert_eq!(planner, keys(&props["planner"]["properties"]));
    let exemplars = keys(&serde_json::to_value(PlannerParams::default().exemplars).unwrap());
    assert_eq!(
        exemplars,
        keys(&props["planner"]["properties"]["exemplars"]["properties"])
    );
    let optimizer = keys(&serde_json::to_value(OptimizerParams::default()).unwrap());
    assert_eq!(optimizer, keys(&props["optimizer"]["properties"]));
}

#[test]
fn schema_defaults_match_code() {
    let schema = schema();
    let props = &schema["properties"];
    let check = |section: &Value, defaults: Value| {
        for (k, v) in section["properties"].as_object().unwrap() {
            if let Some(d) = v.get("default") {
                assert_eq!(d.as_f64(), defaults[k].as_f64(), "{k}");
            }
        }
    };
    check(
        &props["planner"],
        serde_json::to_value(PlannerParams::default()).unwrap(),
    );
    check(
        &props["optimizer"],
        serde_json::to_value(OptimizerParams::default()).unwrap(),
    );
    assert_eq!(
        props["sweep_resolution"]["default"].as_f64(),
        Some(DEFAULT_SWEEP_RESOLUTION)
    );
}

#[test]
fn sweep_resolution_defaults_and_validates() {
    let mut file: Value = serde_json::from_str(builtin_json("lid_6dof").unwrap()).unwrap();
    file.as_object_mut().unwrap().remove("sweep_resolution");
    let s = Scenario::from_json(&file.to_string()).unwrap();
    assert_eq!(s.scene.sweep_resolution(), DEFAULT_SWEEP_RESOLUTION);

    file["sweep_resolution"] = Value::from(0.0);
    let err = Scenario::from_json(&file.to_string()).unwrap_err();
    assert!(err.to_string().contains("sweep_resolution"), "{err}");
}

#[test]
fn scenario_loads_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("copy.json");
    std::fs::write(&path, builtin_json("narrow_passage_2dof").unwrap()).unwrap();
    let s = Scenario::load(path.to_str().unwrap()).unwrap();
    assert_eq!(s.name, "narrow_passage_2dof");
    assert!(Scenario::load(dir.path().join("missing.json").to_str().unwrap()).is_err());
}
