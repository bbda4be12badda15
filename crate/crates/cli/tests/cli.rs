use std::path::{Path, PathBuf};
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_quizforge");

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn quizforge(dir: &Path, args: &[&str]) -> Run {
    let out = Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env_remove("SOURCE_DATE_EPOCH")
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn ok(dir: &Path, args: &[&str]) -> Run {
    let run = quizforge(dir, args);
    assert_eq!(
        run.code, 0,
        "{args:?} failed:\n{}\n{}",
        run.stdout, run.stderr
    );
    run
}

/// Cleaned corpus and generated quizzes in a fresh directory.
fn prepared() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let raw = fixture("raw_corpus.jsonl");
    ok(
        dir.path(),
        &[
            "corpus",
            "clean",
            "--in",
            raw.to_str().unwrap(),
            "--out",
            "corpus.jsonl",
        ],
    );
    ok(
        dir.path(),
        &[
            "generate",
            "--corpus",
            "corpus.jsonl",
            "--out",
            "gen",
            "--timestamp",
            "2024-05-01T00:00:00Z",
        ],
    );
    dir
}

fn walk(cmd: &clap::Command, path: &str, out: &mut Vec<(String, clap::Command)>) {
    out.push((path.to_string(), cmd.clone()));
    for sub in cmd.get_subcommands() {
        walk(sub, &format!("{path} {}", sub.get_name()), out);
    }
}

#[test]
fn help_lists_every_flag_of_every_subcommand() {
    let mut root = quizforge::command();
    root.build();
    let mut all = Vec::new();
    walk(&root, "quizforge", &mut all);
    assert!(
        all.len() >= 16,
        "expected every subcommand, found {}",
        all.len()
    );
    for (path, mut cmd) in all {
        let help = cmd.render_long_help().to_string();
        for arg in cmd.get_arguments() {
            if let Some(long) = arg.get_long() {
                assert!(
                    help.contains(&format!("--{long}")),
                    "`{path} --help` does not list --{long}:\n{help}"
                );
            }
        }
    }
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["--help"][..],
        &["--version"],
        &["dataset", "split", "--help"],
    ] {
        let run = quizforge(dir.path(), args);
        assert_eq!(run.code, 0, "{args:?}");
        assert!(!run.stdout.is_empty());
    }
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["frobnicate"][..],
        &["score", "--no-such-flag"],
        &["dataset"],
    ] {
        let run = quizforge(dir.path(), args);
        assert_eq!(run.code, 1, "{args:?}: {}", run.stderr);
        assert!(
            format!("{}{}", run.stdout, run.stderr).contains("Usage"),
            "{}",
            run.stderr
        );
    }
    let run = quizforge(dir.path(), &["dataset", "split", "--train", "many"]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("--train"));
}

#[test]
fn gate_threshold_out_of_range_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let run = quizforge(dir.path(), &["score", "--gate-min", "1.1"]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("[0, 1]"), "{}", run.stderr);
}

#[test]
fn missing_inputs_are_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let run = quizforge(dir.path(), &["stats", "--corpus", "nope.jsonl"]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("nope.jsonl"));
    let run = quizforge(
        dir.path(),
        &[
            "dataset",
            "split",
            "--records",
            "r.jsonl",
            "--train",
            "1",
            "--eval",
            "1",
        ],
    );
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("--seed"), "{}", run.stderr);
}

#[test]
fn unwritable_output_exits_two() {
    let dir = prepared();
    std::fs::write(dir.path().join("blocker"), "").unwrap();
    let run = quizforge(
        dir.path(),
        &[
            "transform",
            "mcq-to-saq",
            "--in",
            "gen/quizzes.jsonl",
            "--out",
            "blocker/saq.jsonl",
        ],
    );
    assert_eq!(run.code, 2, "{}", run.stderr);
}

#[test]
fn unreachable_endpoint_exits_two() {
    let dir = prepared();
    let run = quizforge(
        dir.path(),
        &[
            "generate",
            "--corpus",
            "corpus.jsonl",
            "--out",
            "down",
            "--endpoint",
            "http://127.0.0.1:9/v1",
            "--api-key-env",
            "",
            "--max-retries",
            "0",
            "--timeout",
            "5",
        ],
    );
    assert_eq!(run.code, 2, "{}\n{}", run.stdout, run.stderr);
    assert!(run.stdout.contains("10 request failures"), "{}", run.stdout);
}

#[test]
fn flags_override_config_values() {
    let dir = prepared();
    std::fs::write(
        dir.path().join("pipeline.toml"),
        "[paths]\ncorpus = \"corpus.jsonl\"\n[gate]\nmin_rouge_l = 0.99\n",
    )
    .unwrap();
    let strict = ok(
        dir.path(),
        &[
            "--config",
            "pipeline.toml",
            "--json",
            "score",
            "--quiz",
            "gen/quizzes.jsonl",
        ],
    );
    let strict: serde_json::Value = serde_json::from_str(&strict.stdout).unwrap();
    assert_eq!(strict["passed"], 0);
    assert_eq!(strict["gate"]["min_rouge_l"], 0.99);
    let lax = ok(
        dir.path(),
        &[
            "--config",
            "pipeline.toml",
            "--json",
            "score",
            "--quiz",
            "gen/quizzes.jsonl",
            "--gate-min",
            "0",
        ],
    );
    let lax: serde_json::Value = serde_json::from_str(&lax.stdout).unwrap();
    assert_eq!(lax["passed"], 10);
}

#[test]
fn bad_config_files_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("typo.toml"), "[gate]\nmin_rogue_l = 0.1\n").unwrap();
    let run = quizforge(
        dir.path(),
        &[
            "--config",
            "typo.toml",
            "dataset",
            "emit-config",
            "--model-kind",
            "gpt35",
            "--out",
            "x.toml",
        ],
    );
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("min_rogue_l"), "{}", run.stderr);
    let run = quizforge(dir.path(), &["--config", "absent.toml", "stats"]);
    assert_eq!(run.code, 1);
}

#[test]
fn reruns_produce_identical_files() {
    let dir = prepared();
    let read = |p: &str| std::fs::read(dir.path().join(p)).unwrap();
    let raw = fixture("raw_corpus.jsonl");
    let corpus = read("corpus.jsonl");
    let quizzes = read("gen/quizzes.jsonl");
    ok(
        dir.path(),
        &[
            "corpus",
            "clean",
            "--in",
            raw.to_str().unwrap(),
            "--out",
            "corpus.jsonl",
        ],
    );
    let again = ok(
        dir.path(),
        &[
            "--json",
            "generate",
            "--corpus",
            "corpus.jsonl",
            "--out",
            "gen",
        ],
    );
    let summary: serde_json::Value = serde_json::from_str(&again.stdout).unwrap();
    assert_eq!(summary["resumed"], 10);
    assert_eq!(read("corpus.jsonl"), corpus);
    assert_eq!(read("gen/quizzes.jsonl"), quizzes);

    ok(
        dir.path(),
        &[
            "transform",
            "mcq-to-saq",
            "--in",
            "gen/quizzes.jsonl",
            "--out",
            "saq.jsonl",
        ],
    );
    ok(
        dir.path(),
        &[
            "dataset",
            "build",
            "--quiz",
            "gen/quizzes.jsonl",
            "--corpus",
            "corpus.jsonl",
            "--out",
            "rec.jsonl",
        ],
    );
    let split = [
        "dataset",
        "split",
        "--records",
        "rec.jsonl",
        "--train",
        "7",
        "--eval",
        "3",
        "--seed",
        "11",
        "--out",
    ];
    ok(dir.path(), &[&split[..], &["a"]].concat());
    ok(dir.path(), &[&split[..], &["b"]].concat());
    for f in ["train.jsonl", "eval.jsonl", "manifest.json"] {
        assert_eq!(read(&format!("a/{f}")), read(&format!("b/{f}")), "{f}");
    }
}

#[test]
fn split_paths_and_sizes_come_from_config() {
    let dir = prepared();
    ok(
        dir.path(),
        &[
            "dataset",
            "build",
            "--quiz",
            "gen/quizzes.jsonl",
            "--corpus",
            "corpus.jsonl",
            "--out",
            "out/records.jsonl",
        ],
    );
    std::fs::write(
        dir.path().join("pipeline.toml"),
        "[paths]\noutputs = \"out\"\n[split]\ntrain = 6\neval = 4\nseed = 3\n",
    )
    .unwrap();
    let run = ok(
        dir.path(),
        &[
            "--config",
            "pipeline.toml",
            "--json",
            "dataset",
            "split",
            "--eval",
            "2",
        ],
    );
    let manifest: serde_json::Value = serde_json::from_str(&run.stdout).unwrap();
    assert_eq!(manifest["train"]["documents"], 6);
    assert_eq!(manifest["eval"]["documents"], 2);
    assert_eq!(manifest["seed"], 3);
    assert!(dir.path().join("out/dataset/manifest.json").exists());
}

#[test]
fn invalid_quiz_lines_fail_the_transform() {
    let dir = prepared();
    let mut text = std::fs::read_to_string(dir.path().join("gen/quizzes.jsonl")).unwrap();
    text.push_str("{\"doc_id\": \"broken\"}\n");
    std::fs::write(dir.path().join("mixed.jsonl"), text).unwrap();
    let run = quizforge(
        dir.path(),
        &[
            "--json",
            "transform",
            "mcq-to-saq",
            "--in",
            "mixed.jsonl",
            "--out",
            "saq.jsonl",
        ],
    );
    assert_eq!(run.code, 1);
    let summary: serde_json::Value = serde_json::from_str(&run.stdout).unwrap();
    assert_eq!(summary["sets_out"], 10);
    assert_eq!(summary["errors"][0]["line"], 11);
}

#[test]
fn eval_report_renders_saved_runs() {
    let dir = prepared();
    ok(
        dir.path(),
        &[
            "dataset",
            "build",
            "--quiz",
            "gen/quizzes.jsonl",
            "--corpus",
            "corpus.jsonl",
            "--out",
            "rec.jsonl",
        ],
    );
    ok(
        dir.path(),
        &[
            "dataset",
            "split",
            "--records",
            "rec.jsonl",
            "--train",
            "6",
            "--eval",
            "4",
            "--seed",
            "1",
            "--out",
            "ds",
        ],
    );
    ok(
        dir.path(),
        &[
            "eval",
            "run",
            "--eval-set",
            "ds/eval.jsonl",
            "--format",
            "mcq",
            "--label",
            "base",
            "--model",
            "mock-1",
            "--out",
            "run.json",
        ],
    );
    let report = ok(dir.path(), &["eval", "report", "--in", "run.json"]);
    assert!(
        report
            .stdout
            .starts_with("MCQ: ROUGE-1 / ROUGE-2 / ROUGE-L (F1 x100)\nmock-1 base: "),
        "{}",
        report.stdout
    );
    ok(
        dir.path(),
        &[
            "eval", "report", "--in", "run.json", "--format", "html", "--out", "r.html",
        ],
    );
    assert!(std::fs::read_to_string(dir.path().join("r.html"))
        .unwrap()
        .contains("<td>mock-1</td>"));
    let bad = quizforge(
        dir.path(),
        &["eval", "report", "--in", "run.json", "--format", "pdf"],
    );
    assert_eq!(bad.code, 1);
}
