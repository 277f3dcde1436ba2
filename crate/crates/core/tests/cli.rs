use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mrot(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mrot"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> Output {
    let out = mrot(args, dir);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn synth_fit_score_eval_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "toy", "--output", "toy.csv"], d);
    let fit = ["fit", "--input", "toy.csv", "--label-col", "label", "--k", "30", "--epsilon", "1"];
    ok(&[&fit[..], &["--output", "a.json"]].concat(), d);
    ok(&[&fit[..], &["--output", "b.json"]].concat(), d);
    assert_eq!(fs::read(d.join("a.json")).unwrap(), fs::read(d.join("b.json")).unwrap());

    let score = ["score", "--model", "a.json", "--input", "toy.csv", "--label-col", "label"];
    ok(&[&score[..], &["--output", "s1.csv"]].concat(), d);
    ok(&[&score[..], &["--output", "s2.csv"]].concat(), d);
    let s1 = fs::read_to_string(d.join("s1.csv")).unwrap();
    assert_eq!(s1, fs::read_to_string(d.join("s2.csv")).unwrap());
    let lines: Vec<&str> = s1.lines().collect();
    assert_eq!(lines[0], "sample_index,score");
    assert_eq!(lines.len(), 526);
    for (i, line) in lines[1..].iter().enumerate() {
        let (idx, s) = line.split_once(',').unwrap();
        assert_eq!(idx.parse::<usize>().unwrap(), i);
        let v: f64 = s.parse().unwrap();
        assert!((0.0..=1.0).contains(&v));
    }

    let out = ok(&["eval", "--scores", "s1.csv", "--labels", "toy.csv"], d);
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(json["auc_roc"].as_f64().unwrap() >= 0.95, "{json}");
    assert!(json["auc_pr"].as_f64().is_some());
    let out = ok(&["eval", "--scores", "s1.csv", "--labels", "toy.csv", "--metric", "auc-pr"], d);
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(json.get("auc_roc").is_none());
}

#[test]
fn synth_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "toy", "--n-normal", "30", "--n-anom", "3", "--seed", "4", "--output", "a.csv"], d);
    ok(&["synth", "toy", "--n-normal", "30", "--n-anom", "3", "--seed", "4", "--output", "b.csv"], d);
    ok(&["synth", "toy", "--n-normal", "30", "--n-anom", "3", "--seed", "5", "--output", "c.csv"], d);
    let a = fs::read(d.join("a.csv")).unwrap();
    assert_eq!(a, fs::read(d.join("b.csv")).unwrap());
    assert_ne!(a, fs::read(d.join("c.csv")).unwrap());
    assert!(String::from_utf8(a).unwrap().starts_with("x0,x1,label\n"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "toy", "--n-normal", "12", "--n-anom", "2", "--output", "t.csv"], d);

    assert_eq!(mrot(&["fit", "--bogus"], d).status.code(), Some(1));
    assert_eq!(mrot(&[], d).status.code(), Some(1));
    assert_eq!(mrot(&["--help"], d).status.code(), Some(0));
    let missing = mrot(&["score", "--model", "nope.json", "--input", "t.csv"], d);
    assert_eq!(missing.status.code(), Some(1));

    let big_k = mrot(
        &["fit", "--input", "t.csv", "--label-col", "label", "--k", "14", "--epsilon", "0.1", "--output", "m.json"],
        d,
    );
    assert_eq!(big_k.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&big_k.stderr).contains("k < n"));

    ok(&["fit", "--input", "t.csv", "--label-col", "label", "--k", "3", "--epsilon", "0.5", "--output", "m.json"], d);
    // without --label-col the label becomes a third feature
    let wrong_dim = mrot(&["score", "--model", "m.json", "--input", "t.csv", "--output", "s.csv"], d);
    assert_eq!(wrong_dim.status.code(), Some(2));

    fs::write(d.join("bad.csv"), "a,b\n1,2\n3,abc\n").unwrap();
    let bad = mrot(&["fit", "--input", "bad.csv", "--k", "1", "--epsilon", "0.1", "--output", "x.json"], d);
    assert_eq!(bad.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&bad.stderr);
    assert!(msg.contains(":3:") && msg.contains("column 2"), "{msg}");

    let mut text = fs::read_to_string(d.join("m.json")).unwrap();
    text = text.replacen("\"format_version\": 1", "\"format_version\": 0", 1);
    fs::write(d.join("old.json"), text).unwrap();
    let old = mrot(&["score", "--model", "old.json", "--input", "t.csv", "--label-col", "label"], d);
    assert_eq!(old.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&old.stderr).contains("version 0"));
}

#[test]
fn windows_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("series.csv"), "s\n1\n2\n3\n4\n").unwrap();
    ok(&["windows", "--input", "series.csv", "--window-len", "2", "--output", "f.csv"], d);
    let text = fs::read_to_string(d.join("f.csv")).unwrap();
    let r = 0.5f64.sqrt();
    // default stride is half the window
    assert_eq!(text, format!("mu_s,sigma_s\n1.5,{r:?}\n2.5,{r:?}\n3.5,{r:?}\n"));
    ok(&["windows", "--input", "series.csv", "--window-len", "2", "--stride", "2", "--output", "g.csv"], d);
    assert_eq!(fs::read_to_string(d.join("g.csv")).unwrap().lines().count(), 3);
    let short = mrot(&["windows", "--input", "series.csv", "--window-len", "5", "--output", "h.csv"], d);
    assert_eq!(short.status.code(), Some(2));
}

#[test]
fn ablate_subcommand_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "toy", "--n-normal", "60", "--n-anom", "6", "--output", "t.csv"], d);
    let args = [
        "ablate", "--input", "t.csv", "--label-col", "label", "--epsilons", "0,0.5", "--ks", "3,70",
        "--regressors", "knn,gbt",
    ];
    ok(&[&args[..], &["--output", "a.csv", "--json", "a.json"]].concat(), d);
    ok(&[&args[..], &["--output", "b.csv", "--json", "b.json"]].concat(), d);
    let a = fs::read_to_string(d.join("a.csv")).unwrap();
    assert_eq!(a, fs::read_to_string(d.join("b.csv")).unwrap());
    assert_eq!(fs::read(d.join("a.json")).unwrap(), fs::read(d.join("b.json")).unwrap());
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines[0], "epsilon,k,regressor,auc_roc,auc_pr,converged,error");
    assert_eq!(lines.len(), 9);
    // k = 70 exceeds n and is recorded as a failed cell
    assert!(lines.iter().filter(|l| l.contains(",70,")).all(|l| l.contains("k < n")));
    assert_eq!(mrot(&["ablate", "--input", "t.csv", "--output", "x.csv"], d).status.code(), Some(2));
}
