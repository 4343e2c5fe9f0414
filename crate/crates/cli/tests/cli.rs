use std::path::Path;
use std::process::{Command, Output};

fn steerclone(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_steerclone"))
        .arg("--data-root")
        .arg(root)
        .args(args)
        .env_remove("STEERCLONE_DATA")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ok(o: Output) -> String {
    assert!(
        o.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        o.status.code(),
        stdout(&o),
        String::from_utf8_lossy(&o.stderr)
    );
    stdout(&o)
}

fn write_manifest(dir: &Path, steering: &[f32]) -> std::path::PathBuf {
    let mut body = String::from("timestamp,center,left,right,steering,throttle,brake,speed\n");
    for (i, s) in steering.iter().enumerate() {
        body += &format!("{},IMG/c{i}.png,,,{s},0.5,0,20\n", i as f64 / 1.5);
    }
    let p = dir.join("driving_log.csv");
    std::fs::write(&p, body).unwrap();
    p
}

/// Rows of the histogram table as (before, after) pairs.
fn histogram(out: &str) -> Vec<(usize, usize)> {
    out.lines()
        .filter(|l| l.starts_with('['))
        .map(|l| {
            let cols: Vec<&str> = l[l.find([')', ']']).unwrap() + 1..].split_whitespace().collect();
            (cols[0].parse().unwrap(), cols[1].parse().unwrap())
        })
        .collect()
}

#[test]
fn help_lists_every_command_and_unknown_flags_fail() {
    let dir = tempfile::tempdir().unwrap();
    let help = ok(steerclone(dir.path(), &["--help"]));
    for cmd in ["collect", "balance", "train", "evaluate", "experiment", "activations", "predict-analyze", "scenario"] {
        assert!(help.contains(cmd), "{cmd} missing from help");
    }
    let train_help = ok(steerclone(dir.path(), &["train", "--help"]));
    for flag in ["--manifest", "--behavior", "--epochs", "--seed", "--deletion-rate", "--out"] {
        assert!(train_help.contains(flag), "{flag} missing from train help");
    }
    assert_eq!(steerclone(dir.path(), &["collect", "--bogus"]).status.code(), Some(1));
    assert_eq!(steerclone(dir.path(), &["frobnicate"]).status.code(), Some(1));
}

#[test]
fn collect_creates_missing_dir_and_center_only_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a/b/cones");
    let text = ok(steerclone(
        dir.path(),
        &["collect", "--scenario", "collision", "--laps", "1", "--out", out.to_str().unwrap()],
    ));
    let table: Vec<Vec<&str>> = text
        .lines()
        .filter(|l| l.contains(" | "))
        .map(|l| l.split('|').map(str::trim).collect())
        .collect();
    assert_eq!(table[0], ["Driving Behavior", "Complete Dataset", "Training Dataset", "Validation Dataset"]);
    assert_eq!(table[1][0], "Collision avoidance");
    let manifest = std::fs::read_to_string(out.join("driving_log.csv")).unwrap();
    let rows: Vec<_> = manifest.lines().skip(1).collect();
    assert!(!rows.is_empty());
    for r in &rows {
        let cols: Vec<_> = r.split(',').collect();
        assert!(cols[1].starts_with("IMG/center_"));
        assert_eq!((cols[2], cols[3]), ("", ""), "{r}");
        assert!(out.join(cols[1]).exists());
    }
    let counts: Vec<usize> = table[1][1..].iter().map(|c| c.parse().unwrap()).collect();
    assert_eq!(counts[0], rows.len());
    assert_eq!(counts[1] + counts[2], rows.len());
}

#[test]
fn bidirectional_collection_splits_laps() {
    let dir = tempfile::tempdir().unwrap();
    ok(steerclone(dir.path(), &["collect", "--scenario", "simplistic", "--laps", "2", "--bidirectional", "--rate", "0.5"]));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("simplistic/collection.json")).unwrap()).unwrap();
    assert_eq!(meta["bidirectional"], true);
    assert_eq!(meta["laps"], 2);
    assert_eq!(meta["cameras"], 3);
    let manifest = std::fs::read_to_string(dir.path().join("simplistic/driving_log.csv")).unwrap();
    assert!(manifest.lines().nth(1).unwrap().contains("IMG/left_000000.png"));
}

#[test]
fn balance_reports_deletions() {
    let dir = tempfile::tempdir().unwrap();
    let mut steering = vec![0.0f32; 10];
    steering.extend([0.3, -0.5, 0.9]);
    let m = write_manifest(dir.path(), &steering);
    let m = m.to_str().unwrap();

    let same = ok(steerclone(dir.path(), &["balance", "--manifest", m, "--behavior", "rigorous", "--deletion-rate", "0"]));
    let rows = histogram(&same);
    assert_eq!(rows.len(), 25);
    assert!(rows.iter().all(|(b, a)| b == a));

    // Preset rate 0.7: D = round(10 * 0.7) = 7.
    let text = ok(steerclone(dir.path(), &["balance", "--manifest", m, "--behavior", "simplistic"]));
    assert!(text.contains("d = 10, deleted D = round(d * 0.7) = 7"), "{text}");
    assert!(text.contains("samples: 13 before, 6 after"), "{text}");
    let rows = histogram(&text);
    assert_eq!(rows.iter().map(|r| r.0).sum::<usize>(), 13);
    assert_eq!(rows.iter().map(|r| r.1).sum::<usize>(), 6);
    assert_eq!(rows[12], (10, 3));

    let rigorous = ok(steerclone(dir.path(), &["balance", "--manifest", m, "--behavior", "rigorous"]));
    assert!(rigorous.contains("round(d * 0.8) = 8"), "{rigorous}");
}

#[test]
fn bad_inputs_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    assert_eq!(steerclone(dir.path(), &["balance", "--manifest", missing.to_str().unwrap(), "--behavior", "rigorous"]).status.code(), Some(2));
    let m = write_manifest(dir.path(), &[0.1, 1.7]);
    let o = steerclone(dir.path(), &["balance", "--manifest", m.to_str().unwrap(), "--behavior", "rigorous"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 2"));
    let m = write_manifest(dir.path(), &[0.1]);
    let o = steerclone(dir.path(), &["balance", "--manifest", m.to_str().unwrap(), "--deletion-rate", "1.5", "--behavior", "rigorous"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(steerclone(dir.path(), &["evaluate"]).status.code(), Some(1));
    assert_eq!(
        steerclone(dir.path(), &["experiment", "obstacle_variation", "--scenario", "rigorous", "--expert"]).status.code(),
        Some(1)
    );
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(dir.path(), &[0.0; 10]);
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "behavior = \"rigorous\"\n[train]\ndeletion_rate = 0.5\n").unwrap();
    let c = cfg.to_str().unwrap();
    let m = m.to_str().unwrap();
    assert!(ok(steerclone(dir.path(), &["--config", c, "balance", "--manifest", m])).contains("= 5\n"));
    assert!(ok(steerclone(dir.path(), &["--config", c, "balance", "--manifest", m, "--deletion-rate", "0.3"])).contains("= 3\n"));
    std::fs::write(&cfg, "[train]\nepoch = 3\n").unwrap();
    assert_eq!(steerclone(dir.path(), &["--config", c, "balance", "--manifest", m]).status.code(), Some(1));
}

#[test]
fn train_is_reproducible_and_downstream_commands_run() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    ok(steerclone(root, &["collect", "--scenario", "collision", "--laps", "1", "--seed", "1"]));
    let train = |out: &str| {
        let text = ok(steerclone(
            root,
            &["train", "--behavior", "collision", "--epochs", "2", "--augmentation-loops", "2", "--seed", "7", "--out", out],
        ));
        text.lines()
            .find_map(|l| l.strip_prefix("model checksum: "))
            .expect("checksum printed")
            .to_string()
    };
    let a = train(root.join("r1").to_str().unwrap());
    let b = train(root.join("r2").to_str().unwrap());
    assert_eq!(a, b);
    assert_eq!(a.len(), 64);

    let history: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(root.join("r1/history.json")).unwrap()).unwrap();
    let epochs = history.as_array().unwrap();
    assert_eq!(epochs.len(), 2);
    for e in epochs {
        assert!(e["train_loss"].as_f64().unwrap() > 0.0);
        assert!(e["val_loss"].as_f64().unwrap() > 0.0);
    }
    assert!(root.join("r1/training.json").exists());

    let model = root.join("r1/model.scnn");
    let model = model.to_str().unwrap();
    let act = root.join("act");
    let text = ok(steerclone(root, &["activations", "--model", model, "--layer", "2", "--scenario", "collision", "--out", act.to_str().unwrap()]));
    assert!(text.contains("layer 2: 16 maps of 4x4"), "{text}");
    let maps = std::fs::read_dir(&act).unwrap().filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("layer2_")).count();
    assert_eq!(maps, 16);
    assert_eq!(steerclone(root, &["activations", "--model", model, "--layer", "9", "--scenario", "collision"]).status.code(), Some(1));

    let csv = root.join("pred.csv");
    let manifest = root.join("collision/driving_log.csv");
    let text = ok(steerclone(
        root,
        &["predict-analyze", "--model", model, "--manifest", manifest.to_str().unwrap(), "--end", "30", "--out", csv.to_str().unwrap()],
    ));
    assert!(text.contains("mean absolute error"));
    let rows = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(rows.lines().next(), Some("t,ground_truth,prediction"));
    assert_eq!(rows.lines().count(), 1 + 45);

    let diverge = steerclone(
        root,
        &["train", "--behavior", "collision", "--epochs", "1", "--augmentation-loops", "2", "--learning-rate", "1e30", "--out", root.join("r3").to_str().unwrap()],
    );
    assert_eq!(diverge.status.code(), Some(3));
}

#[test]
fn evaluate_prints_autonomy_and_writes_log() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("lap.csv");
    let text = ok(steerclone(dir.path(), &["evaluate", "--scenario", "rigorous", "--expert", "--log", log.to_str().unwrap()]));
    assert!(text.contains("interferences: 0"), "{text}");
    assert!(text.contains("autonomy: 100.0%"), "{text}");
    assert!(std::fs::read_to_string(&log).unwrap().starts_with("t,x,y,yaw,steering,throttle,brake,speed,progress,event"));
}

#[test]
fn experiment_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(steerclone(dir.path(), &["experiment", "heading-inversion", "--scenario", "collision", "--expert"]));
    assert!(text.contains("Vehicle heading inversion"), "{text}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("collision/reports/heading_inversion.json")).unwrap())
            .unwrap();
    assert_eq!(report["behavior"], "collision");
    assert_eq!(report["experiments"][0]["id"], "heading_inversion");
    assert!(dir.path().join("collision/reports/heading_inversion.txt").exists());
}

#[test]
fn exported_scenario_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("hill.toml");
    ok(steerclone(dir.path(), &["scenario", "export", "--scenario", "rigorous", "--out", file.to_str().unwrap()]));
    let text = std::fs::read_to_string(&file).unwrap();
    assert!(text.contains("id = \"rigorous\""));
    let stdout_copy = ok(steerclone(dir.path(), &["scenario", "export", "--scenario-file", file.to_str().unwrap()]));
    assert_eq!(stdout_copy, text);
    std::fs::write(&file, "id = \"rigorous\"\n").unwrap();
    assert_eq!(steerclone(dir.path(), &["scenario", "export", "--scenario-file", file.to_str().unwrap()]).status.code(), Some(2));
}
