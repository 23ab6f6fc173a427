use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn shoplab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shoplab"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

/// A shipped config shrunk to test scale, with relative paths.
fn small_config(dir: &Path, base: &str, methods: &[&str]) -> PathBuf {
    let text = std::fs::read_to_string(shipped(base)).unwrap();
    let mut config: serde_json::Value = serde_json::from_str(&text).unwrap();
    config["split"] = serde_json::json!({"train_count": 8, "test_count": 3});
    let ppo = &mut config["algo"]["ppo"];
    ppo["total_steps"] = 300.into();
    ppo["hidden"] = serde_json::json!([8]);
    config["eval"]["methods"] = serde_json::json!(methods);
    config["eval"]["seeds"] = serde_json::json!([0, 1]);
    let path = dir.join(format!("small_{base}"));
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

fn read_jsonl(path: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn shipped_configs_differ_only_in_problem_and_reward() {
    let load = |name| -> serde_json::Value { serde_json::from_str(&std::fs::read_to_string(shipped(name)).unwrap()).unwrap() };
    let (a, b) = (load("default_6x6.json"), load("tools_3x4_sparse.json"));
    for key in a.as_object().unwrap().keys() {
        let same = a[key] == b[key];
        assert_eq!(same, !matches!(key.as_str(), "problem" | "reward_mode" | "paths"), "{key}");
    }
    assert_eq!(a["reward_mode"], "dense");
    assert_eq!(b["reward_mode"], "sparse");
}

#[test]
fn generate_writes_both_sets() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), "default_6x6.json", &["spt"]);
    let out = shoplab(&["generate", "--config", config.to_str().unwrap(), "--out", "sets"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("train: 8 instances"));
    let train = read_jsonl(&dir.path().join("sets/train.jsonl"));
    let test = read_jsonl(&dir.path().join("sets/test.jsonl"));
    assert_eq!((train.len(), test.len()), (8, 3));
    for inst in train.iter().chain(&test) {
        assert_eq!(inst["num_jobs"], 6);
        assert_eq!(inst["tasks_per_job"], 6);
        assert!(stdout(&out).contains(inst["id"].as_str().unwrap()));
    }
}

#[test]
fn tool_config_puts_a_tool_on_every_task() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), "tools_3x4_sparse.json", &["spt"]);
    let out = shoplab(&["generate", "--config", config.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let insts = read_jsonl(&dir.path().join("runs/tools_3x4_sparse/instances/train.jsonl"));
    for inst in insts {
        assert_eq!(inst["num_jobs"], 3);
        for task in inst["tasks"].as_array().unwrap() {
            assert!(task["tool"].as_u64().unwrap() < 2);
        }
    }
}

#[test]
fn config_errors_exit_2_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), "default_6x6.json", &["spt"]);
    let mut value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&config).unwrap()).unwrap();
    value["split"].as_object_mut().unwrap().remove("test_count");
    std::fs::write(&config, value.to_string()).unwrap();
    let out = shoplab(&["generate", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("split"), "{}", stderr(&out));
    assert!(stderr(&out).contains("test_count"), "{}", stderr(&out));

    let out = shoplab(&["generate"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = shoplab(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_annotates_reports_and_respects_limits() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), "tools_3x4_sparse.json", &["spt"]);
    shoplab(&["generate", "--config", config.to_str().unwrap(), "--out", "sets"], dir.path());

    let out = shoplab(&["solve", "--instances", "sets", "--node-limit", "1"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("optimal 0 feasible 11"), "{}", stdout(&out));

    let out = shoplab(&["solve", "--instances", "sets"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out).matches(" optimal makespan ").count(), 11);
    assert!(stdout(&out).contains("optimal 11 feasible 0 failed files 0"));
    for inst in read_jsonl(&dir.path().join("sets/test.jsonl")) {
        assert_eq!(inst["proof_status"], "optimal");
        assert!(inst["optimal_makespan"].as_u64().unwrap() > 0);
    }

    std::fs::create_dir(dir.path().join("empty")).unwrap();
    let out = shoplab(&["solve", "--instances", "empty"], dir.path());
    assert!(out.status.success());
    assert!(stdout(&out).contains("optimal 0 feasible 0"));
}

#[test]
fn solve_continues_past_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), "tools_3x4_sparse.json", &["spt"]);
    shoplab(&["generate", "--config", config.to_str().unwrap(), "--out", "sets"], dir.path());
    std::fs::write(dir.path().join("sets/broken.jsonl"), "{not json\n").unwrap();
    let out = shoplab(&["solve", "--instances", "sets"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("broken.jsonl"));
    assert!(stdout(&out).contains("optimal 11 feasible 0 failed files 1"));
}

#[test]
fn train_test_pipeline_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), "default_6x6.json", &["ppo", "spt", "random", "solver"]);
    let c = config.to_str().unwrap();

    let out = shoplab(&["test", "--config", c], dir.path());
    assert_eq!(out.status.code(), Some(1));

    let mut snapshots = Vec::new();
    for _ in 0..2 {
        assert!(shoplab(&["generate", "--config", c], dir.path()).status.success());
        assert!(shoplab(&["solve", "--instances", "runs/default_6x6/instances"], dir.path()).status.success());
        let out = shoplab(&["train", "--config", c], dir.path());
        assert!(out.status.success(), "{}", stderr(&out));
        let out = shoplab(&["test", "--config", c], dir.path());
        assert!(out.status.success(), "{}", stderr(&out));
        let table = stdout(&out);
        for method in ["ppo", "spt", "random", "solver"] {
            assert!(table.lines().any(|l| l.starts_with(method)), "{table}");
        }
        let results = dir.path().join("runs/default_6x6/results");
        let mut files: Vec<_> = std::fs::read_dir(&results).unwrap().map(|e| e.unwrap().path()).collect();
        files.sort();
        assert_eq!(files.len(), 2);
        snapshots.push((table, files.iter().map(|f| std::fs::read(f).unwrap()).collect::<Vec<_>>()));
    }
    assert_eq!(snapshots[0], snapshots[1]);
}

#[test]
fn test_with_random_only_needs_no_model() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), "default_6x6.json", &["random"]);
    let c = config.to_str().unwrap();
    shoplab(&["generate", "--config", c], dir.path());
    let out = shoplab(&["test", "--config", c], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let rows: Vec<_> = stdout(&out).lines().filter(|l| l.starts_with("random")).map(String::from).collect();
    assert_eq!(rows.len(), 1);
}

#[test]
fn plot_solver_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), "default_6x6.json", &["spt"]);
    shoplab(&["generate", "--config", config.to_str().unwrap(), "--out", "sets"], dir.path());
    std::fs::remove_file(dir.path().join("sets/train.jsonl")).unwrap();
    let out = shoplab(&["solve", "--instances", "sets", "--schedules", "schedules"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let test = read_jsonl(&dir.path().join("sets/test.jsonl"));
    let id = test[0]["id"].as_str().unwrap();
    let makespan = test[0]["optimal_makespan"].as_u64().unwrap();
    let schedule = format!("schedules/{id}.json");

    let out = shoplab(&["plot", "--schedule", &schedule, "--out", "chart.svg"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let svg = std::fs::read_to_string(dir.path().join("chart.svg")).unwrap();
    assert_eq!(svg.matches(r#"class="task""#).count(), 36);
    assert!(svg.contains(&format!(r#"data-makespan="{makespan}""#)));
    let last_tick = svg
        .split(r#"class="tick-label""#)
        .skip(1)
        .map(|s| s.split('>').nth(1).unwrap().split('<').next().unwrap().parse::<u64>().unwrap())
        .max()
        .unwrap();
    assert_eq!(last_tick, makespan);

    let again = shoplab(&["plot", "--schedule", &schedule, "--out", "again.svg"], dir.path());
    assert!(again.status.success());
    assert_eq!(svg, std::fs::read_to_string(dir.path().join("again.svg")).unwrap());
}

#[test]
fn plot_refuses_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{\"instance_id\": 3").unwrap();
    let out = shoplab(&["plot", "--schedule", "bad.json", "--out", "x.svg"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("x.svg").exists());

    // A valid export whose two tasks overlap on one machine.
    let config = small_config(dir.path(), "tools_3x4_sparse.json", &["spt"]);
    shoplab(&["generate", "--config", config.to_str().unwrap(), "--out", "sets"], dir.path());
    std::fs::remove_file(dir.path().join("sets/train.jsonl")).unwrap();
    shoplab(&["solve", "--instances", "sets", "--schedules", "s"], dir.path());
    let file = std::fs::read_dir(dir.path().join("s")).unwrap().next().unwrap().unwrap().path();
    let mut export: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&file).unwrap()).unwrap();
    let mut makespan = 0;
    for p in export["placements"].as_array_mut().unwrap() {
        let len = p["end"].as_u64().unwrap() - p["start"].as_u64().unwrap();
        p["start"] = 0.into();
        p["end"] = len.into();
        makespan = makespan.max(len);
    }
    export["makespan"] = makespan.into();
    std::fs::write(&file, export.to_string()).unwrap();
    let out = shoplab(&["plot", "--schedule", file.to_str().unwrap(), "--out", "y.svg"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("invalid schedule"), "{}", stderr(&out));
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = shoplab(&["selftest", "--cases", "10", "--seed", "3"], dir.path());
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).contains("7/7 properties passed"));
}
