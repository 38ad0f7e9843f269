use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn deltagen(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deltagen"))
        .args(args)
        .current_dir(dir)
        .env_remove("DELTAGEN_OUT")
        .output()
        .expect("binary runs")
}

fn generate(dir: &Path, out: &str, jobs: &str) -> Output {
    deltagen(&["generate", "--level", "0", "--depths", "0,1", "--kbs", "4", "--seed", "7", "--jobs", jobs, "-o", out], dir)
}

#[test]
fn generate_writes_dataset_and_sidecars() {
    let tmp = tempfile::tempdir().unwrap();
    let out = generate(tmp.path(), "run", "1");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = tmp.path().join("run");
    let lines = fs::read_to_string(run.join("dataset.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 4 * 3 * 2);
    let parts: usize = ["train", "validation", "test"]
        .iter()
        .map(|p| fs::read_to_string(run.join(format!("{p}.jsonl"))).unwrap().lines().count())
        .sum();
    assert_eq!(parts, 24);
    for f in ["stats.json", "stats.txt", "config.txt"] {
        assert!(run.join(f).exists(), "{f}");
    }

    // the config header replays the run
    let replay = deltagen(&["generate", "--config", "run/config.txt", "-o", "replay"], tmp.path());
    assert!(replay.status.success());
    assert_eq!(fs::read(run.join("dataset.jsonl")).unwrap(), fs::read(tmp.path().join("replay/dataset.jsonl")).unwrap());

    // thread count does not change the bytes
    assert!(generate(tmp.path(), "wide", "3").status.success());
    for f in ["dataset.jsonl", "stats.json", "stats.txt"] {
        assert_eq!(fs::read(run.join(f)).unwrap(), fs::read(tmp.path().join("wide").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn check_reports_flipped_answer() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(generate(tmp.path(), "run", "1").status.success());
    let ok = deltagen(&["check", "run/dataset.jsonl"], tmp.path());
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stdout));

    let text = fs::read_to_string(tmp.path().join("run/dataset.jsonl")).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let flipped = if lines[2].contains("\"answer\":\"unknown\"") {
        lines[2].replace("\"answer\":\"unknown\"", "\"answer\":\"true\"")
    } else {
        lines[2].replace("\"answer\":\"true\"", "\"answer\":\"unknown\"").replace("\"answer\":\"false\"", "\"answer\":\"unknown\"")
    };
    assert_ne!(flipped, lines[2]);
    lines[2] = flipped;
    fs::write(tmp.path().join("bad.jsonl"), lines.join("\n") + "\n").unwrap();
    let bad = deltagen(&["check", "bad.jsonl"], tmp.path());
    assert_eq!(bad.status.code(), Some(4));
    let report = String::from_utf8_lossy(&bad.stdout);
    assert!(report.contains("line 3:"), "{report}");
    assert!(report.contains("1 mismatches"), "{report}");
}

#[test]
fn translate_soft_and_hard() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(generate(tmp.path(), "run", "1").status.success());
    let soft = deltagen(&["translate", "run/dataset.jsonl", "soft", "-o", "soft.jsonl"], tmp.path());
    assert!(soft.status.success(), "{}", String::from_utf8_lossy(&soft.stderr));
    let text = fs::read_to_string(tmp.path().join("soft.jsonl")).unwrap();
    assert!(text.contains("a_1"));
    let again = deltagen(&["translate", "soft.jsonl", "soft", "-o", "soft2.jsonl"], tmp.path());
    assert!(again.status.success());
    assert_eq!(text, fs::read_to_string(tmp.path().join("soft2.jsonl")).unwrap());

    let hard = deltagen(&["translate", "run/dataset.jsonl", "hard", "-o", "hard.jsonl"], tmp.path());
    assert!(hard.status.success());
    assert!(fs::read_to_string(tmp.path().join("hard.jsonl")).unwrap().contains("is subsumed by"));
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(deltagen(&["generate", "--level", "7"], tmp.path()).status.code(), Some(2));
    assert_eq!(deltagen(&["generate", "--depths", "x"], tmp.path()).status.code(), Some(2));
    fs::write(tmp.path().join("bad.cfg"), "colour=red\n").unwrap();
    assert_eq!(deltagen(&["generate", "--config", "bad.cfg"], tmp.path()).status.code(), Some(2));
    assert_eq!(deltagen(&["generate", "--bogus"], tmp.path()).status.code(), Some(2));
}

#[test]
fn output_dir_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_deltagen"))
        .args(["generate", "--level", "0", "--depths", "0", "--kbs", "2"])
        .current_dir(tmp.path())
        .env("DELTAGEN_OUT", "from-env")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(tmp.path().join("from-env/dataset.jsonl").exists());
}

#[test]
fn quality_tests_pass() {
    let tmp = tempfile::tempdir().unwrap();
    let out = deltagen(&["quality-tests"], tmp.path());
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("PASS conjunction elimination (left)"));
    assert!(!text.contains("FAIL"));
}
