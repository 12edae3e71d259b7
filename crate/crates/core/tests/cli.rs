mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sketchreward"));
    c.env_remove("SKETCHREWARD_SEED");
    c
}

fn run(c: &mut Command) -> (i32, String, String) {
    let Output {
        status,
        stdout,
        stderr,
    } = c.output().unwrap();
    (
        status.code().unwrap_or(-1),
        String::from_utf8(stdout).unwrap(),
        String::from_utf8(stderr).unwrap(),
    )
}

fn data(name: &str) -> std::path::PathBuf {
    common::data_dir().join(name)
}

fn demos(dir: &Path, n: usize) -> std::path::PathBuf {
    let p = dir.join(format!("demos{n}.jsonl"));
    let (code, _, err) = run(bin().args(["demo", "-n", &n.to_string(), "--out"]).arg(&p));
    assert_eq!(code, 0, "{err}");
    p
}

const SHORT: &str = "N = 6\nK = 4\nmax_frames = 0\neval_every = 3\neval_episodes = 5\n";

fn train(dir: &Path, cfg: &str, out: &str, extra: &[&str]) -> (i32, String, String) {
    let demos = demos(dir, 2);
    let cfg_path = dir.join(format!("{out}.cfg"));
    fs::write(&cfg_path, cfg).unwrap();
    run(bin()
        .arg("train")
        .arg("--config")
        .arg(&cfg_path)
        .arg("--sketch")
        .arg(data("doorkey.rsk"))
        .arg("--constraint")
        .arg(data("doorkey.rsc"))
        .arg("--demos")
        .arg(&demos)
        .arg("--out")
        .arg(dir.join(out))
        .args(extra))
}

#[test]
fn check_reports_doorkey() {
    let (code, out, _) = run(bin()
        .arg("check")
        .arg("--sketch")
        .arg(data("doorkey.rsk"))
        .arg("--constraint")
        .arg(data("doorkey.rsc")));
    assert_eq!(code, 0);
    assert!(out.contains("holes: ?1 ?2 ?3 ?4 ?5"), "{out}");
    assert!(
        out.contains("c2: ?4 + ?5 <= 0") || out.contains("c2:"),
        "{out}"
    );
    assert!(
        out.trim_end().ends_with("5 holes, 5 predicates, OK"),
        "{out}"
    );
}

#[test]
fn check_flags_violated_predicates() {
    let (code, out, err) = run(bin()
        .arg("check")
        .arg("--sketch")
        .arg(data("doorkey.rsk"))
        .arg("--constraint")
        .arg(data("doorkey.rsc"))
        .arg("--holes=1,0.5,-0.6,0.4,-0.3"));
    assert_eq!(code, 1, "{out}");
    assert!(err.contains("c2"), "{err}");
    let (code, out, _) = run(bin()
        .arg("check")
        .arg("--sketch")
        .arg(data("doorkey.rsk"))
        .arg("--constraint")
        .arg(data("doorkey.rsc"))
        .arg("--holes=1,0.5,-0.6,0.2,-0.3"));
    assert_eq!(code, 0, "{out}");
}

#[test]
fn bad_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.rsk");
    fs::write(&bad, "fn(traj) { match token { reach_goal => if then } }").unwrap();
    let (code, _, err) = run(bin().arg("check").arg("--sketch").arg(&bad));
    assert_eq!(code, 1);
    assert!(err.starts_with("error: "), "{err}");

    let (code, _, err) = run(bin()
        .arg("check")
        .arg("--sketch")
        .arg(dir.path().join("missing.rsk")));
    assert_eq!(code, 1);
    assert!(err.contains("missing.rsk"), "{err}");

    // constraint naming a hole the sketch lacks
    let rsc = dir.path().join("c.rsc");
    fs::write(&rsc, "?9 <= 0\n").unwrap();
    let (code, _, _) = run(bin()
        .arg("check")
        .arg("--sketch")
        .arg(data("doorkey.rsk"))
        .arg("--constraint")
        .arg(&rsc));
    assert_eq!(code, 1);
}

#[test]
fn demo_writes_requested_count() {
    let dir = tempfile::tempdir().unwrap();
    for n in [0, 1, 10] {
        let p = demos(dir.path(), n);
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().filter(|l| l.contains("\"steps\"")).count(), n);
        assert!(p.with_extension("manifest.json").exists());
    }
}

#[test]
fn train_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, err) = train(dir.path(), SHORT, "run", &["--seed", "3", "--jobs", "2"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("constraint satisfied: yes"), "{out}");
    let o = dir.path().join("run");
    for f in [
        "program.rsk",
        "policy.json",
        "metrics.csv",
        "learning_curve.svg",
        "holes.txt",
        "manifest.json",
    ] {
        assert!(o.join(f).exists(), "missing {f}");
    }
    let metrics = fs::read_to_string(o.join("metrics.csv")).unwrap();
    assert!(
        metrics.starts_with("iter,elbo,H,J_c,J_gen,j_adv,constraint_margin,eval_success,frames")
    );
    assert_eq!(metrics.lines().count(), 1 + 6);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(o.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 3);
    // the learned program is a complete sketch
    let (code, out, _) = run(bin()
        .arg("check")
        .arg("--sketch")
        .arg(o.join("program.rsk")));
    assert_eq!(code, 0);
    assert!(out.contains("0 holes"), "{out}");
}

#[test]
fn zero_iterations_still_write_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, err) = train(dir.path(), "N = 0\n", "zero", &[]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("holes: [0.0, 0.0, 0.0, 0.0, 0.0]"), "{out}");
    let metrics = fs::read_to_string(dir.path().join("zero/metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 1);
}

#[test]
fn identical_seeds_give_identical_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let a = train(dir.path(), SHORT, "a", &["--seed", "11"]);
    let b = train(dir.path(), SHORT, "b", &["--seed", "11", "--jobs", "1"]);
    assert_eq!((a.0, b.0), (0, 0));
    let ma = fs::read(dir.path().join("a/metrics.csv")).unwrap();
    let mb = fs::read(dir.path().join("b/metrics.csv")).unwrap();
    assert_eq!(ma, mb);
    let c = train(dir.path(), SHORT, "c", &["--seed", "12"]);
    assert_eq!(c.0, 0);
    assert_ne!(ma, fs::read(dir.path().join("c/metrics.csv")).unwrap());
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{}seed = 1\n", SHORT.replace("N = 6", "N = 1"));
    let seed_of = |name: &str| -> u64 {
        let m: serde_json::Value = serde_json::from_str(
            &fs::read_to_string(dir.path().join(name).join("manifest.json")).unwrap(),
        )
        .unwrap();
        m["seed"].as_u64().unwrap()
    };
    assert_eq!(train(dir.path(), &cfg, "cfg", &[]).0, 0);
    assert_eq!(seed_of("cfg"), 1);

    let demos = demos(dir.path(), 1);
    let cfg_path = dir.path().join("p.cfg");
    fs::write(&cfg_path, &cfg).unwrap();
    let with_env = |out: &str, extra: &[&str]| {
        let mut cmd = bin();
        cmd.env("SKETCHREWARD_SEED", "5")
            .arg("train")
            .arg("--config")
            .arg(&cfg_path)
            .arg("--sketch")
            .arg(data("doorkey.rsk"))
            .arg("--constraint")
            .arg(data("doorkey.rsc"))
            .arg("--demos")
            .arg(&demos)
            .arg("--out")
            .arg(dir.path().join(out))
            .args(extra);
        run(&mut cmd)
    };
    let (code, _, err) = with_env("env", &[]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(seed_of("env"), 5);
    assert_eq!(with_env("flag", &["--seed", "9"]).0, 0);
    assert_eq!(seed_of("flag"), 9);
}

#[test]
fn missing_demos_is_a_user_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(bin()
        .arg("train")
        .arg("--sketch")
        .arg(data("doorkey.rsk"))
        .arg("--constraint")
        .arg(data("doorkey.rsc"))
        .arg("--demos")
        .arg(dir.path().join("nope.jsonl"))
        .arg("--out")
        .arg(dir.path().join("o")));
    assert_eq!(code, 1);
    assert!(err.contains("nope.jsonl"), "{err}");
}

#[test]
fn bad_config_value_is_a_user_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = train(dir.path(), "K = 1\n", "k1", &[]);
    assert_eq!(code, 1, "{err}");
    let (code, _, err) = train(dir.path(), "bogus = 3\n", "bogus", &[]);
    assert_eq!(code, 1);
    assert!(err.contains("bogus"), "{err}");
}

#[test]
fn overflowing_rewards_abort_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let demos = demos(dir.path(), 1);
    let rsk = dir.path().join("big.rsk");
    fs::write(
        &rsk,
        "fn(traj) { match token { reach_goal => 1e308 * 1e308 * ?1, _ => 0 } }",
    )
    .unwrap();
    let rsc = dir.path().join("big.rsc");
    fs::write(&rsc, "?1 <= 1\n").unwrap();
    let cfg = dir.path().join("c.cfg");
    fs::write(&cfg, SHORT).unwrap();
    let (code, _, err) = run(bin()
        .arg("train")
        .arg("--config")
        .arg(&cfg)
        .arg("--sketch")
        .arg(&rsk)
        .arg("--constraint")
        .arg(&rsc)
        .arg("--demos")
        .arg(&demos)
        .arg("--out")
        .arg(dir.path().join("o")));
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("not finite"), "{err}");
}

#[test]
fn study_writes_report_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.cfg");
    fs::write(&cfg, "ms = 50,500\nreps = 10\nholes = 0.5,-0.8\n").unwrap();
    let (code, out, err) = run(bin()
        .args(["study", "--kind", "snis", "--config"])
        .arg(&cfg)
        .arg("--env")
        .arg(data("toy_mdp.json"))
        .arg("--sketch")
        .arg(data("toy.rsk"))
        .arg("--out")
        .arg(dir.path()));
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("median_abs_err"));
    let csv = fs::read_to_string(dir.path().join("study_snis.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 20);
    assert!(fs::read_to_string(dir.path().join("study_snis.svg"))
        .unwrap()
        .contains("<polyline"));
    assert!(dir.path().join("manifest_snis.json").exists());

    // a gridworld cannot be enumerated
    let (code, _, _) = run(bin()
        .args(["study", "--kind", "snis", "--env"])
        .arg(data("doorkey6x6.env"))
        .arg("--out")
        .arg(dir.path()));
    assert_eq!(code, 1);
    let (code, _, _) = run(bin()
        .args(["study", "--kind", "bogus", "--out"])
        .arg(dir.path()));
    assert_ne!(code, 0);
}
