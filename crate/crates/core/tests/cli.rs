use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn woamlp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_woamlp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn assert_one_line_error(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
}

const XOR: &str = "id,label,f0,f1\na,zero,0,0\nb,one,0,1\nc,one,1,0\nd,zero,1,1\n";

#[test]
fn help_for_every_subcommand() {
    for sub in ["fuse", "train", "eval", "bench"] {
        let out = woamlp(&[sub, "--help"]);
        assert!(out.status.success(), "{sub}");
        assert!(
            String::from_utf8_lossy(&out.stdout).contains("Usage"),
            "{sub}"
        );
    }
    let train_help = String::from_utf8_lossy(&woamlp(&["train", "--help"]).stdout).into_owned();
    for flag in [
        "--config",
        "--data",
        "--output",
        "--seed",
        "--hidden",
        "--population",
        "--iterations",
    ] {
        assert!(train_help.contains(flag), "{flag}");
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_one_line_error(&woamlp(&["frobnicate"]), 1);
    assert_one_line_error(&woamlp(&["bench", "--objective", "ackley"]), 1);
}

#[test]
fn fuse_writes_concatenated_table() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("a.csv"),
        "id,label,f0,f1\ns1,covid,1,2\ns2,non-covid,3,4\n",
    )
    .unwrap();
    fs::write(
        dir.path().join("b.csv"),
        "id,label,f0\ns2,non-covid,8\ns1,covid,9\n",
    )
    .unwrap();
    let out = woamlp(&[
        "fuse",
        &path(dir.path(), "a.csv"),
        &path(dir.path(), "b.csv"),
        "-o",
        &path(dir.path(), "f.csv"),
    ]);
    assert!(out.status.success());
    assert_eq!(
        fs::read_to_string(dir.path().join("f.csv")).unwrap(),
        "id,label,f0,f1,f2\ns1,covid,1,2,9\ns2,non-covid,3,4,8\n"
    );
}

#[test]
fn fuse_label_disagreement_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("a.csv"),
        "id,label,f0\ns1,covid,1\ns2,non-covid,3\n",
    )
    .unwrap();
    fs::write(
        dir.path().join("b.csv"),
        "id,label,f0\ns1,non-covid,8\ns2,non-covid,9\n",
    )
    .unwrap();
    let out = woamlp(&[
        "fuse",
        &path(dir.path(), "a.csv"),
        &path(dir.path(), "b.csv"),
        "-o",
        &path(dir.path(), "f.csv"),
    ]);
    assert_one_line_error(&out, 3);
}

#[test]
fn missing_file_is_io_error() {
    let out = woamlp(&[
        "train",
        "--data",
        "/nonexistent.csv",
        "-o",
        "/tmp/never.json",
    ]);
    assert_one_line_error(&out, 2);
}

#[test]
fn bad_config_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), r#"{"seed": "not a number"}"#).unwrap();
    fs::write(dir.path().join("d.csv"), XOR).unwrap();
    let out = woamlp(&[
        "train",
        "--config",
        &path(dir.path(), "c.json"),
        "--data",
        &path(dir.path(), "d.csv"),
        "-o",
        &path(dir.path(), "m.json"),
    ]);
    assert_one_line_error(&out, 1);
}

#[test]
fn non_finite_objective_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("id,label,f0\n");
    for i in 0..8 {
        csv.push_str(&format!(
            "s{i},{},{}\n",
            if i % 2 == 0 { "a" } else { "b" },
            i
        ));
    }
    fs::write(dir.path().join("d.csv"), csv).unwrap();
    // relu units with weights near f64::MAX overflow to infinity
    let out = woamlp(&[
        "train",
        "--data",
        &path(dir.path(), "d.csv"),
        "-o",
        &path(dir.path(), "m.json"),
        "--activation",
        "relu",
        "--hidden",
        "4,4",
        "--weight-bound",
        "1e308",
        "--iterations",
        "3",
    ]);
    assert_one_line_error(&out, 4);
}

#[test]
fn xor_train_then_eval_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("xor.csv"), XOR).unwrap();
    // the XOR table is too small to hold out a test split, so train on a
    // doubled copy and evaluate on the original four points
    let doubled: String = XOR
        .lines()
        .skip(1)
        .flat_map(|l| {
            let rest = l.split_once(',').unwrap();
            [
                format!("{}1,{}", rest.0, rest.1),
                format!("{}2,{}", rest.0, rest.1),
            ]
        })
        .fold(String::from("id,label,f0,f1\n"), |acc, l| acc + &l + "\n");
    fs::write(dir.path().join("xor2.csv"), doubled).unwrap();

    let out = woamlp(&[
        "train",
        "--data",
        &path(dir.path(), "xor2.csv"),
        "-o",
        &path(dir.path(), "m.json"),
        "--hidden",
        "4",
        "--population",
        "40",
        "--iterations",
        "500",
        "--test-fraction",
        "0.25",
        "--seed",
        "1",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in [
        "m.json",
        "m.history.csv",
        "m.config.json",
        "m.train.csv",
        "m.test.csv",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let history = fs::read_to_string(dir.path().join("m.history.csv")).unwrap();
    assert!(history.starts_with("iteration,best_fitness\n1,"));
    assert_eq!(history.lines().count(), 501);

    let echo: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("m.config.json")).unwrap())
            .unwrap();
    assert_eq!(echo["seed"], 1);
    assert_eq!(echo["woa"]["max_iterations"], 500);

    let out = woamlp(&[
        "eval",
        "--model",
        &path(dir.path(), "m.json"),
        "--data",
        &path(dir.path(), "xor.csv"),
        "-o",
        &path(dir.path(), "r.json"),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(r["acc"], 1.0);
    assert_eq!(r["samples"], 4);
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("100.00"), "{table}");
}

#[test]
fn eval_on_perfect_predictions() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("p.csv"),
        "id,truth,prediction\n1,covid,covid\n2,non-covid,non-covid\n3,covid,covid\n4,non-covid,non-covid\n",
    )
    .unwrap();
    let out = woamlp(&["eval", "--predictions", &path(dir.path(), "p.csv")]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    let json_start = stdout.find('{').unwrap();
    let r: serde_json::Value = serde_json::from_str(&stdout[json_start..]).unwrap();
    for key in ["acc", "sen", "spe", "pre", "f1", "mcc", "kappa"] {
        assert_eq!(r[key], 1.0, "{key}");
    }
    assert_eq!(r["counts"]["positive_class"], "covid");
    assert_eq!(r["counts"]["tp"], 2);
}

#[test]
fn eval_positive_class_flag() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("p.csv"),
        "id,truth,prediction\n1,covid,covid\n2,covid,non-covid\n3,non-covid,non-covid\n",
    )
    .unwrap();
    let out = woamlp(&[
        "eval",
        "--predictions",
        &path(dir.path(), "p.csv"),
        "--positive",
        "non-covid",
        "-o",
        &path(dir.path(), "r.json"),
    ]);
    assert!(out.status.success());
    let r: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(
        (r["counts"]["tp"].as_u64(), r["counts"]["fp"].as_u64()),
        (Some(1), Some(1))
    );
}

#[test]
fn bench_writes_history() {
    let dir = tempfile::tempdir().unwrap();
    let out = woamlp(&[
        "bench",
        "--objective",
        "rastrigin",
        "--dim",
        "3",
        "--iterations",
        "25",
        "--population",
        "10",
        "--lower",
        "-5.12",
        "--upper",
        "5.12",
        "-o",
        &path(dir.path(), "h.csv"),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let h = fs::read_to_string(dir.path().join("h.csv")).unwrap();
    assert_eq!(h.lines().count(), 26);
    let vals: Vec<f64> = h
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(vals.windows(2).all(|w| w[1] <= w[0]));
    assert!(String::from_utf8_lossy(&out.stdout).contains("best_fitness="));
}
