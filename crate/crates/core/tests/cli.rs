use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn compgen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_compgen"))
        .args(args)
        .env_remove("COMPGEN_OUT_DIR")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn gen_small(dir: &Path, domain: &str, task: &str) -> Output {
    compgen(&[
        "gen",
        "--domain",
        domain,
        "--task",
        task,
        "--train-size",
        "300",
        "--test-size",
        "300",
        "--seed",
        "7",
        "--out",
        dir.to_str().unwrap(),
    ])
}

#[test]
fn exec_examples() {
    let o = compgen(&["exec", "--domain", "scan", "jump and run after walk"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "WALK JUMP RUN\n");

    let o = compgen(&["exec", "--domain", "robustfill", "ConstStr x", "--input", "abc"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "x\n");

    let o = compgen(&["exec", "--domain", "robustfill", "GetToken WORD 3", "--input", "one two"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("match 3"));

    let o = compgen(&["exec", "--domain", "scan", "turn twice"]);
    assert!(!o.status.success());
}

#[test]
fn translate_and_mask() {
    let o = compgen(&["translate", "jump left twice and run right after walk thrice"]);
    assert_eq!(stdout(&o), "WALK WALK WALK LTURN JUMP LTURN JUMP RTURN RUN\n");
    let o = compgen(&["mask", "--variant", "sep-to-last", "SEP A SEP B SEP"]);
    assert_eq!(
        stdout(&o),
        "10000\n11000\n01100\n00110\n01011\n\n0: 0\n1: 0 1\n2: 1 2\n3: 2 3\n4: 1 3 4\n"
    );
    let o = compgen(&["mask"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "");
}

#[test]
fn bogus_task_is_a_usage_error() {
    let o = compgen(&["gen", "--domain", "scan", "--task", "bogus"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
}

#[test]
fn gen_validate_score_audit() {
    let dir = tempfile::tempdir().unwrap();
    let o = gen_small(dir.path(), "robustfill", "switch-concept-order");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let p = |s: &str| dir.path().join(format!("robustfill_switch-concept-order_{s}"));
    for s in ["train.jsonl", "test.jsonl", "finetune.jsonl", "audit.txt", "audit.json"] {
        assert!(p(s).exists(), "{s}");
    }
    assert_eq!(fs::read_to_string(p("test.jsonl")).unwrap().lines().count(), 300);

    let files: Vec<String> = ["train.jsonl", "test.jsonl", "finetune.jsonl"]
        .iter()
        .map(|s| p(s).display().to_string())
        .collect();
    let mut args = vec!["validate"];
    args.extend(files.iter().map(String::as_str));
    assert!(compgen(&args).status.success());

    // Echo the targets as predictions.
    let test = p("test.jsonl");
    let preds = dir.path().join("preds.jsonl");
    let mut lines = String::new();
    for line in fs::read_to_string(&test).unwrap().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let pred = serde_json::json!({"instance_id": v["id"], "predicted_tokens": v["target_tokens"]});
        lines.push_str(&pred.to_string());
        lines.push('\n');
    }
    fs::write(&preds, &lines).unwrap();
    let json = dir.path().join("report.json");
    let o = compgen(&[
        "score",
        test.to_str().unwrap(),
        preds.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("accuracy 100.0%"));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["accuracy"], 1.0);

    // An id that is not in the dataset.
    let bad = lines.replacen("\"instance_id\":\"", "\"instance_id\":\"x", 1);
    fs::write(&preds, bad).unwrap();
    let o = compgen(&["score", test.to_str().unwrap(), preds.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));

    let o = compgen(&["audit", &files[0], &files[1]]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("status      clean"));
    // Auditing the test file as the train side flags every record.
    let o = compgen(&["audit", &files[1], &files[1]]);
    assert!(!o.status.success());

    let o = compgen(&["stats", &files[2]]);
    assert!(stdout(&o).contains("finetune/train_dist"));
}

#[test]
fn malformed_dataset_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.jsonl");
    fs::write(&data, "{}\n").unwrap();
    let o = compgen(&["validate", data.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains(":1:"));
}

#[test]
fn multi_task_score_reports_every_task() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = [
        "length",
        "length-hard",
        "length-hardest",
        "compose-different-concepts",
        "switch-concept-order",
        "compose-new-operation",
        "add-operation-functionality",
    ];
    let mut all = String::new();
    for t in tasks {
        assert!(gen_small(dir.path(), "scan", t).status.success(), "{t}");
        all.push_str(&fs::read_to_string(dir.path().join(format!("scan_{t}_finetune.jsonl"))).unwrap());
    }
    let data = dir.path().join("all.jsonl");
    fs::write(&data, &all).unwrap();
    let preds = dir.path().join("preds.jsonl");
    let mut lines = String::new();
    let mut seen = std::collections::HashSet::new();
    for line in all.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        // Specs shared across tasks share an id; predict once per id.
        if !seen.insert(v["id"].to_string()) {
            continue;
        }
        lines.push_str(&serde_json::json!({"instance_id": v["id"], "predicted_tokens": ["WALK"]}).to_string());
        lines.push('\n');
    }
    fs::write(&preds, lines).unwrap();
    let json = dir.path().join("r.json");
    let o = compgen(&[
        "score",
        data.to_str().unwrap(),
        preds.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    for t in tasks {
        assert!(report["per_task"][format!("scan/{t}")].is_object(), "{t}");
    }
}

#[test]
fn config_file_and_env_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gen.toml");
    fs::write(
        &cfg,
        "domain = \"scan\"\ntask = \"length-hardest\"\ntrain-size = 50\ntest-size = 60\nseed = 3\nhardest-test-max = 4\n",
    )
    .unwrap();
    let out = dir.path().join("env-out");
    let o = Command::new(env!("CARGO_BIN_EXE_compgen"))
        .args(["gen", "--config", cfg.to_str().unwrap(), "--test-size", "70"])
        .env("COMPGEN_OUT_DIR", &out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let test = fs::read_to_string(out.join("scan_length-hardest_test.jsonl")).unwrap();
    assert_eq!(test.lines().count(), 70);
    for line in test.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!((2..=4).contains(&v["length"].as_u64().unwrap()));
    }
    let train = fs::read_to_string(out.join("scan_length-hardest_train.jsonl")).unwrap();
    assert_eq!(train.lines().count(), 50);

    fs::write(&cfg, "domain = \"scan\"\ntask = \"length\"\nsede = 3\n").unwrap();
    let o = compgen(&["gen", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
}
