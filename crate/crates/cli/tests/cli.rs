use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bipoint"));
    c.args(args).env_remove("BIPOINT_SEED");
    if let Some(s) = seed_env {
        c.env("BIPOINT_SEED", s);
    }
    c.output().unwrap()
}

/// The report without its timing block.
fn json(o: &Output) -> Value {
    let mut v: Value = serde_json::from_slice(&o.stdout).unwrap();
    v.as_object_mut().unwrap().remove("timing");
    v
}

#[test]
fn same_seed_same_report() {
    for args in [
        &["round", "sr", "--trials", "200", "--seed", "3"][..],
        &["alg", "run", "--table", "alg2", "--trials", "20", "--seed", "3"],
        &["suite", "--instances", "10", "--seed", "3"],
        &["partition", "--m", "2", "--random", "30,5,12,8", "--seed", "3"],
    ] {
        let (a, b) = (run(args, None), run(args, None));
        assert_eq!(a.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(json(&a), json(&b), "{args:?}");
        assert!(json(&a)["timing"].is_null());
    }
}

#[test]
fn different_seeds_differ() {
    let a = json(&run(&["round", "sr", "--trials", "50", "--seed", "1"], None));
    let b = json(&run(&["round", "sr", "--trials", "50", "--seed", "2"], None));
    assert_ne!(a["rows"], b["rows"]);
}

#[test]
fn env_seed_overrides_flag() {
    let a = json(&run(&["round", "sr", "--trials", "50", "--seed", "1"], Some("9")));
    let b = json(&run(&["round", "sr", "--trials", "50", "--seed", "9"], None));
    assert_eq!(a, b);
    assert_eq!(a["seed"], 9);
    let bad = run(&["round", "sr", "--trials", "5"], Some("nine"));
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["frobnicate"], None).status.code(), Some(2));
    assert_eq!(run(&["bound", "point"], None).status.code(), Some(1));
    assert_eq!(run(&["bound", "--m", "7", "--target", "1.3"], None).status.code(), Some(2));
    assert_eq!(run(&["bound"], None).status.code(), Some(2));
    assert_eq!(run(&["partition", "--m", "3", "--g", "0.7,0.2", "--random", "20,4,9,6"], None).status.code(), Some(2));
    // a target below the optimum cannot be certified
    let dir = std::env::temp_dir().join(format!("bipoint-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cert = dir.join("low.ndjson");
    let o = run(&["bound", "--m", "2", "--g", "0.6586", "--target", "1.2", "--budget-boxes", "200", "--cert", cert.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    assert_ne!(json(&o)["summary"]["status"], "certified");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn golden_file_roundtrip_and_hash() {
    let dir = std::env::temp_dir().join(format!("bipoint-golden-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("b8.txt");
    let p = path.to_str().unwrap();
    let built = json(&run(&["gap", "build", "--k", "8", "--out", p], None));
    let from_file = json(&run(&["partition", "--m", "1", "--instance", p], None));
    let from_golden = json(&run(&["partition", "--m", "1", "--golden", "8"], None));
    assert_eq!(built["instance_sha256"], from_file["instance_sha256"]);
    assert_eq!(from_file["instance_sha256"], from_golden["instance_sha256"]);
    assert_eq!(from_file["summary"]["k"], 8);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn csv_output() {
    let o = run(&["--format", "csv", "round", "sr", "--trials", "3"], None);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("cost,facilities,fractional,trial"));
    assert_eq!(lines.count(), 3);
    let o = run(&["--format", "csv", "bound", "point", "--preset", "m1-feasible"], None);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("key,value\n"));
    assert!(text.contains("summary.report.feasible,true"));
}

fn schema(name: &str) -> Value {
    let p = format!("{}/../../schemas/{name}", env!("CARGO_MANIFEST_DIR"));
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

/// Required keys present, no keys outside `properties`.
fn conforms(v: &Value, s: &Value) -> bool {
    let obj = v.as_object().unwrap();
    let props = s["properties"].as_object().unwrap();
    let required = s["required"].as_array().map(|r| r.iter().all(|k| obj.contains_key(k.as_str().unwrap()))).unwrap_or(true);
    required && obj.keys().all(|k| props.contains_key(k))
}

#[test]
fn outputs_match_schemas() {
    let rs = schema("report.schema.json");
    let commands = rs["properties"]["command"]["enum"].as_array().unwrap();
    let dir = std::env::temp_dir().join(format!("bipoint-schema-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cert = dir.join("c.ndjson");
    let c = cert.to_str().unwrap();
    for args in [
        &["gap", "verify", "--k", "50"][..],
        &["bound", "point", "--preset", "hard-point-s3"],
        &["bound", "--m", "1", "--target", "1.4", "--cert", c],
        &["alg", "enumerate", "--m", "1", "--b", "1/3", "--gamma", "2"],
    ] {
        let o = run(args, None);
        let v: Value = serde_json::from_slice(&o.stdout).unwrap();
        assert!(conforms(&v, &rs), "{args:?}");
        assert_eq!(v["schema"], rs["properties"]["schema"]["const"]);
        assert!(commands.contains(&v["command"]), "{args:?}");
    }
    let cs = schema("certificate.schema.json");
    let text = std::fs::read_to_string(&cert).unwrap();
    let mut lines = text.lines();
    assert!(conforms(&serde_json::from_str(lines.next().unwrap()).unwrap(), &cs["$defs"]["header"]));
    for l in lines {
        assert!(conforms(&serde_json::from_str(l).unwrap(), &cs["$defs"]["leaf"]));
    }

    // a preset written out and read back through --file gives the same evaluation
    let ps = schema("point.schema.json");
    let preset = json(&run(&["bound", "point", "--preset", "hard-point-s3"], None));
    let point = &preset["summary"]["point"];
    assert!(conforms(point, &ps));
    assert!(conforms(&point["d"], &ps["properties"]["d"]));
    let file = dir.join("p.json");
    std::fs::write(&file, point.to_string()).unwrap();
    let from_file = json(&run(&["bound", "point", "--file", file.to_str().unwrap()], None));
    assert_eq!(from_file["summary"]["report"], preset["summary"]["report"]);
    let mut bad = point.clone();
    bad["extra"] = Value::from(1);
    std::fs::write(&file, bad.to_string()).unwrap();
    assert_eq!(run(&["bound", "point", "--file", file.to_str().unwrap()], None).status.code(), Some(1));
    std::fs::remove_dir_all(&dir).unwrap();
}
