use std::path::Path;
use std::process::{Command, Output};

fn fairscale(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fairscale"))
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

const FAST: &[&str] = &["--n-samples", "400", "--epochs", "2", "--seeds", "0,1"];

#[test]
fn gen_then_train_on_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = fairscale(
        &["gen", "--file", "data.csv", "--n-samples", "300"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("data.csv")).unwrap();
    assert!(text.starts_with("id,x0,"));
    assert_eq!(text.lines().count(), 301);

    let o = fairscale(
        &[
            "train",
            "--data",
            "data.csv",
            "--id-column",
            "id",
            "--epochs",
            "1",
            "--seeds",
            "3",
            "--method",
            "erm",
            "--out",
            "out",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    for f in [
        "run_3.json",
        "checkpoint_3.txt",
        "predictions_3.csv",
        "config.toml",
    ] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary[0]["metric"], "overall_auc");
}

#[test]
fn compare_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["compare", "--out", "cmp"];
    args.extend_from_slice(FAST);
    let o = fairscale(&args, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("cmp/comparison.csv")).unwrap();
    assert_eq!(csv, stdout(&o));
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("erm,") && rows[2].starts_with("fis,"));
}

#[test]
fn sweep_uses_default_grid() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["sweep", "c", "--out", "sw"];
    args.extend_from_slice(FAST);
    let o = fairscale(&args, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("sw/sweep.csv")).unwrap();
    let firsts: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(firsts, ["0", "0.25", "0.5", "0.75", "1"]);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("exp.toml"),
        "seeds = [4]\nmethod = \"erm\"\n[training]\nepochs = 1\n[data]\nkind = \"synthetic\"\nfeature_dim = 3\nnum_groups = 2\ngroup_proportions = [0.5, 0.5]\npositive_rate = [0.5, 0.5]\nclass_separation = [2.0, 1.0]\nlabel_noise = [0.0, 0.0]\nn_samples = 200\nseed = 1\n",
    )
    .unwrap();
    let o = fairscale(
        &[
            "train", "--config", "exp.toml", "--seeds", "6", "--out", "o",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("o/run_6.json").exists());
    assert!(!dir.path().join("o/run_4.json").exists());
    let saved = std::fs::read_to_string(dir.path().join("o/config.toml")).unwrap();
    assert!(saved.contains("feature_dim = 3"));
}

#[test]
fn report_recomputes_metrics() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("p.csv"),
        "id,label,group,score\n0,1,0,0.9\n1,0,0,0.2\n2,1,1,0.6\n3,0,1,0.7\n",
    )
    .unwrap();
    let o = fairscale(&["report", "p.csv", "--out", "r.json"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["auc_g0"], 1.0);
    assert_eq!(v["auc_g1"], 0.0);
    assert_eq!(v["overall_auc"], 0.75);
    assert!(dir.path().join("r.json").exists());
}

#[test]
fn errors_are_one_parseable_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = fairscale(&["train", "--c", "1.5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(
        err.starts_with("error kind=invalid_fusion_weight message=\""),
        "{err}"
    );

    let o = fairscale(&["train", "--data", "missing.csv"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error kind=io "));

    std::fs::write(dir.path().join("bad.csv"), "x,label,group\n1,0,a\nzz,1,b\n").unwrap();
    let o = fairscale(&["train", "--data", "bad.csv"], dir.path());
    let err = stderr(&o);
    assert!(err.starts_with("error kind=parse "), "{err}");
    assert!(err.contains("line 3"), "{err}");
}
