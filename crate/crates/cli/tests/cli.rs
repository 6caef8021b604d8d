//! End-to-end tests that drive the compiled `cbm` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cbm() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cbm"))
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("failed to launch the cbm binary")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// 96 rows of two-bit parity: label +1 iff both or neither attribute is set.
fn write_parity(dir: &Path) -> PathBuf {
    let mut text = String::new();
    for _ in 0..24 {
        text.push_str("+1\n-1 1:1\n-1 2:1\n+1 1:1 2:1\n");
    }
    let path = dir.join("parity.libsvm");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn training_on_parity_with_pairs_reaches_full_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_parity(dir.path());
    let model = dir.path().join("parity.cbm");

    let out = run(cbm()
        .args(["train", data.to_str().unwrap(), "--C", "100", "--k", "2"])
        .arg("--model")
        .arg(&model));
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));

    // Trace rows: iter TAB active TAB violation TAB objective.
    let trace = stdout_of(&out);
    let mut last_objective = f64::INFINITY;
    let mut last_active = 0usize;
    for (i, line) in trace.lines().enumerate() {
        let fields: Vec<&str> = line.split('\t').collect();
        assert_eq!(fields.len(), 4, "bad trace line: {line}");
        assert_eq!(fields[0].parse::<usize>().unwrap(), i);
        let active: usize = fields[1].parse().unwrap();
        let v: f64 = fields[2].parse().unwrap();
        let objective: f64 = fields[3].parse().unwrap();
        assert!(active >= last_active);
        assert!(v >= 0.0);
        assert!(objective <= last_objective + 1e-10);
        last_active = active;
        last_objective = objective;
    }
    assert!(trace.lines().count() >= 2, "expected several iterations");

    let diag = stderr_of(&out);
    assert!(diag.contains("96 transactions, 2 attributes"), "stderr: {diag}");
    assert!(diag.contains("stopped: no candidates above threshold"), "stderr: {diag}");
    assert!(diag.contains("training accuracy: 1.0000"), "stderr: {diag}");

    let header = fs::read_to_string(&model).unwrap();
    assert!(
        header.starts_with("cbm v1 d=2 k=2 loss=logistic"),
        "model header: {}",
        header.lines().next().unwrap_or("")
    );

    // Predict on the training data reproduces the labels exactly.
    let out = run(cbm().arg("predict").arg(&model).arg(&data));
    assert_eq!(out.status.code(), Some(0));
    assert!(stderr_of(&out).contains("accuracy: 1.0000"));
    let lines: Vec<String> = stdout_of(&out).lines().map(str::to_owned).collect();
    assert_eq!(lines.len(), 96);
    let expected = ["1", "-1", "-1", "1"];
    for (i, line) in lines.iter().enumerate() {
        let label = line.split_whitespace().next().unwrap();
        assert_eq!(label, expected[i % 4], "row {i}: {line}");
        let score: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
        assert!(score.is_finite());
    }
}

#[test]
fn single_attributes_cannot_express_parity() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_parity(dir.path());

    let out = run(cbm().args(["train", data.to_str().unwrap(), "--C", "100", "--k", "1"]));
    assert_eq!(out.status.code(), Some(0));
    let diag = stderr_of(&out);
    let acc: f64 = diag
        .lines()
        .find_map(|l| l.strip_prefix("training accuracy: "))
        .expect("no accuracy line")
        .parse()
        .unwrap();
    assert!(acc <= 0.75, "degree-1 model should stay at or below 0.75, got {acc}");
}

#[test]
fn a_tiny_penalty_weight_leaves_the_model_empty() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_parity(dir.path());
    let model = dir.path().join("empty.cbm");

    let out = run(cbm()
        .args(["train", data.to_str().unwrap(), "--C", "1e-9"])
        .arg("--model")
        .arg(&model));
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));

    let trace = stdout_of(&out);
    let rows: Vec<&str> = trace.lines().collect();
    assert_eq!(rows.len(), 1, "trace: {trace}");
    let fields: Vec<&str> = rows[0].split('\t').collect();
    assert_eq!(fields[0], "0");
    assert_eq!(fields[1], "0");
    assert_eq!(fields[2], "0", "violation total should print as plain zero");

    let diag = stderr_of(&out);
    assert!(diag.contains("nonzero weights: 0"), "stderr: {diag}");

    let content = fs::read_to_string(&model).unwrap();
    assert_eq!(content.lines().count(), 1, "expected a header-only model file");
    assert!(content.starts_with("cbm v1 d=2 k=inf loss=logistic"));
}

#[test]
fn report_renders_names_bias_and_magnitude_order() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("toy.cbm");
    fs::write(
        &model,
        "cbm v1 d=3 k=inf loss=logistic C=1.0000000000000000e0\n\
         5.0000000000000000e-1\t-\n\
         -2.0000000000000000e0\t1,3\n\
         1.0000000000000000e0\t2\n",
    )
    .unwrap();
    let names = dir.path().join("names.txt");
    fs::write(&names, "first\nsecond\nthird\n").unwrap();

    let out = run(cbm().arg("report").arg(&model).arg("--names").arg(&names));
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout_of(&out),
        "-2.0000\tfirst & third\n1.0000\tsecond\n0.5000\t(bias)\n"
    );

    // Without a names file, raw attribute indices stand in.
    let out = run(cbm().arg("report").arg(&model));
    assert_eq!(stdout_of(&out), "-2.0000\t1 & 3\n1.0000\t2\n0.5000\t(bias)\n");

    // --top truncates after ranking.
    let out = run(cbm().arg("report").arg(&model).args(["--top", "1"]));
    assert_eq!(stdout_of(&out), "-2.0000\t1 & 3\n");
}

#[test]
fn saved_cut_points_reproduce_the_binarization_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("real.csv");
    fs::write(&csv, "1,0.10,5.0\n-1,0.50,6.0\n1,0.90,7.0\n").unwrap();
    let first = dir.path().join("first.libsvm");
    let second = dir.path().join("second.libsvm");

    let out = run(cbm()
        .arg("binarize")
        .arg(&csv)
        .arg(&first)
        .args(["--bins", "4"]));
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    assert!(stderr_of(&out).contains("binarized 3 rows into 8 boolean attributes"));

    let sidecar = PathBuf::from(format!("{}.bins", first.display()));
    let out = run(cbm()
        .arg("binarize")
        .arg(&csv)
        .arg(&second)
        .arg("--load-bins")
        .arg(&sidecar));
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));

    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
    let second_sidecar = PathBuf::from(format!("{}.bins", second.display()));
    assert_eq!(fs::read(&sidecar).unwrap(), fs::read(&second_sidecar).unwrap());
}

#[test]
fn mining_ranks_candidates_by_absolute_weighted_frequency() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_parity(dir.path());

    let out = run(cbm().args(["mine", data.to_str().unwrap(), "--theta", "20"]));
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_of(&out), "96\t-\n48\t1\n48\t2\n24\t1,2\n");
    assert!(stderr_of(&out).contains("4 candidates above 20"));
}

#[test]
fn mining_accepts_signed_weights_from_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("three.libsvm");
    fs::write(&data, "+1 1:1 2:1\n-1 2:1 3:1\n+1 3:1\n").unwrap();
    let weights = dir.path().join("weights.txt");
    fs::write(&weights, "2\n-3\n0.5\n").unwrap();

    let out = run(cbm()
        .args(["mine", data.to_str().unwrap(), "--theta", "2"])
        .arg("--weights")
        .arg(&weights));
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    assert_eq!(stdout_of(&out), "-3\t2,3\n-2.5\t3\n");

    // A weight count that disagrees with the row count is a data error.
    let short = dir.path().join("short.txt");
    fs::write(&short, "1\n1\n").unwrap();
    let out = run(cbm()
        .args(["mine", data.to_str().unwrap()])
        .arg("--weights")
        .arg(&short));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("2 weights for 3 transactions"));
}

#[test]
fn prediction_warns_when_the_data_outgrows_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("small.cbm");
    fs::write(
        &model,
        "cbm v1 d=2 k=inf loss=logistic C=1.0000000000000000e0\n5.0000000000000000e-1\t1\n",
    )
    .unwrap();
    let data = dir.path().join("wide.libsvm");
    fs::write(&data, "+1 3:1\n-1 1:1\n").unwrap();

    let out = run(cbm().arg("predict").arg(&model).arg(&data));
    assert_eq!(out.status.code(), Some(0));
    let diag = stderr_of(&out);
    assert!(
        diag.contains("warning: data has 3 attributes but the model knows 2"),
        "stderr: {diag}"
    );
    let lines: Vec<String> = stdout_of(&out).lines().map(str::to_owned).collect();
    assert_eq!(lines, ["1 0", "1 0.5"]);
    assert!(diag.contains("accuracy: 0.5000"));
}

#[test]
fn exit_codes_separate_usage_errors_from_data_errors() {
    // Usage problems exit 1.
    let out = run(cbm().arg("frobnicate"));
    assert_eq!(out.status.code(), Some(1));
    let out = run(cbm().arg("train"));
    assert_eq!(out.status.code(), Some(1));
    let out = run(cbm().args(["train", "whatever.libsvm", "--C", "abc"]));
    assert_eq!(out.status.code(), Some(1));

    // Help is not an error.
    let out = run(cbm().arg("--help"));
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout_of(&out).contains("Usage"));
    let out = run(cbm().args(["train", "--help"]));
    assert_eq!(out.status.code(), Some(0));

    // Unreadable or malformed inputs exit 2 with a prefixed message.
    let out = run(cbm().args(["train", "/no/such/file.libsvm"]));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).starts_with("error: "));

    let dir = tempfile::tempdir().unwrap();
    let bogus = dir.path().join("bogus.cbm");
    fs::write(&bogus, "this is not a model\n").unwrap();
    let data = dir.path().join("tiny.libsvm");
    fs::write(&data, "+1 1:1\n").unwrap();
    let out = run(cbm().arg("predict").arg(&bogus).arg(&data));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).starts_with("error: "));
}
