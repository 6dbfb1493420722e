use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use twf_core::linalg::DenseMatrix;
use twf_core::persist::save_instance;
use twf_core::ProblemInstance;

fn twf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn estimate(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(dir.join("estimate.json")).unwrap()).unwrap()
}

#[test]
fn noiseless_recover_is_accurate() {
    let dir = tempfile::tempdir().unwrap();
    let o = twf(&[
        "recover",
        "--p",
        "200",
        "--m",
        "2000",
        "--k",
        "10",
        "--nsr",
        "0",
        "--seed",
        "7",
        "--out",
        p(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("relative error "), "{}", stdout(&o));
    let est = estimate(dir.path());
    assert!(est["relative_error"].as_f64().unwrap() <= 1e-3, "{est}");
    assert_eq!(est["tool"]["name"], "twf");
    assert!(est["tool"]["version"].is_string());
    assert_eq!(est["config"]["source"]["synthetic"]["p"], 200);
}

#[test]
fn missing_config_file_is_named() {
    let o = twf(&["recover", "--config", "missing.cfg"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing.cfg"), "{}", stderr(&o));
}

#[test]
fn negative_step_is_rejected() {
    let o = twf(&[
        "recover", "--mu", "-1", "--p", "20", "--m", "50", "--k", "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("mu must be positive"), "{}", stderr(&o));
}

#[test]
fn config_file_unknown_key_and_override() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "p = 20\n# fine\nstep = 3\n").unwrap();
    let o = twf(&["recover", "--config", p(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let good = dir.path().join("good.cfg");
    let out = dir.path().join("out");
    fs::write(
        &good,
        format!(
            "p = 30\nm = 300\nk = 2\nnsr = 0\niters = 50\nout = {}\n",
            out.display()
        ),
    )
    .unwrap();
    let o = twf(&["recover", "--config", p(&good), "--m", "250"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("p=30 m=250"), "{}", stdout(&o));
    assert_eq!(estimate(&out)["config"]["iterations"], 50);
}

#[test]
fn recover_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let o = twf(&[
            "recover",
            "--p",
            "40",
            "--m",
            "300",
            "--k",
            "3",
            "--nsr",
            "0.3",
            "--iters",
            "100",
            "--trace",
            "--seed",
            "5",
            "--out",
            p(&out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        (
            fs::read(out.join("estimate.json")).unwrap(),
            fs::read_to_string(out.join("trace.csv")).unwrap(),
        )
    };
    let (a, trace) = run("a");
    assert_eq!((a, trace.clone()), run("b"));
    assert!(trace.starts_with("iter,risk,tau,step_norm,support_size\n"));
    assert_eq!(trace.lines().count(), 1 + 101);
}

#[test]
fn saved_instance_recovers_identically() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    let o = twf(&[
        "recover",
        "--p",
        "30",
        "--m",
        "200",
        "--k",
        "2",
        "--iters",
        "80",
        "--save-instance",
        p(&inst),
        "--out",
        p(&dir.path().join("a")),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("inst.bin").exists());
    let o = twf(&[
        "recover",
        "--instance",
        p(&inst),
        "--iters",
        "80",
        "--out",
        p(&dir.path().join("b")),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (a, b) = (
        estimate(&dir.path().join("a")),
        estimate(&dir.path().join("b")),
    );
    assert_eq!(a["estimate"], b["estimate"]);
    assert_eq!(a["relative_error"], b["relative_error"]);
}

#[test]
fn degenerate_instance_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let a = DenseMatrix::from_rows(&[vec![1.0, 0.5], vec![-0.3, 2.0], vec![0.7, 0.1]]).unwrap();
    let inst = ProblemInstance::from_measurements(a, vec![0.0; 3]).unwrap();
    let path = dir.path().join("zero.json");
    save_instance(&inst, &path).unwrap();
    let o = twf(&["recover", "--instance", p(&path), "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn divergence_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = twf(&[
        "recover",
        "--p",
        "20",
        "--m",
        "100",
        "--k",
        "3",
        "--mu",
        "1000",
        "--trace",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(dir.path().join("trace.csv").exists());
}

#[test]
fn sweep_is_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let run = |workers: &str| {
        let out = dir.path().join(workers);
        let o = twf(&[
            "sweep",
            "--p",
            "40",
            "--m",
            "300",
            "--k",
            "3",
            "--iters",
            "60",
            "--axis",
            "beta",
            "--grid",
            "0,0.5,1",
            "--trials",
            "3",
            "--seed",
            "11",
            "--workers",
            workers,
            "--out",
            p(&out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        [
            "sweep_beta.json",
            "sweep_beta_trials.csv",
            "sweep_beta_summary.csv",
            "sweep_beta.svg",
        ]
        .map(|f| fs::read(out.join(f)).unwrap())
    };
    let one = run("1");
    assert_eq!(one, run("4"));
    let trials = String::from_utf8(one[1].clone()).unwrap();
    assert!(trials.starts_with("axis_value,trial,error,seed,wallclock_ms\n"));
    assert_eq!(trials.lines().count(), 1 + 9);
    let json: serde_json::Value = serde_json::from_slice(&one[0]).unwrap();
    assert_eq!(json["spec"]["fixed"]["p"], 40);
    assert!(json["tool"]["version"].is_string());
}

#[test]
fn sweep_rejects_unsorted_grid() {
    let o = twf(&[
        "sweep", "--axis", "beta", "--grid", "1,0", "--p", "20", "--m", "50", "--k", "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn figures_quick_all_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let o = twf(&[
            "figures",
            "--which",
            "all",
            "--preset",
            "quick",
            "--iters",
            "30",
            "--seed",
            "2",
            "--out",
            p(&out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let mut svgs: Vec<_> = fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|f| f.extension().is_some_and(|x| x == "svg"))
            .collect();
        svgs.sort();
        svgs.iter()
            .map(|f| (f.file_name().unwrap().to_owned(), fs::read(f).unwrap()))
            .collect::<Vec<_>>()
    };
    let a = run("a");
    assert_eq!(a.len(), 4);
    assert_eq!(a, run("b"));
    let beta = fs::read_to_string(dir.path().join("a/figure_beta_summary.csv")).unwrap();
    assert_eq!(beta.lines().count(), 1 + 13);
}

#[test]
fn figures_m_grid_at_paper_scale() {
    let dir = tempfile::tempdir().unwrap();
    // one iteration keeps this a check of the grid and file layout
    let o = twf(&[
        "figures",
        "--which",
        "m",
        "--preset",
        "paper",
        "--seed",
        "1",
        "--iters",
        "1",
        "--out",
        p(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("figure_m_summary.csv")).unwrap();
    let ms: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(
        ms,
        ["2000", "3000", "4000", "5000", "6000", "7000", "8000", "9000", "10000", "11000"]
    );
}

#[test]
fn selftest_filter_and_fault_injection() {
    let o = twf(&["selftest", "--suite", "gradient"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 1);
    assert!(out.starts_with("PASS gradient"));

    let o = twf(&[
        "selftest",
        "--inject-fault",
        "threshold",
        "--suite",
        "threshold-contract",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("threshold-contract"));

    let o = twf(&["selftest", "--suite", "bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn selftest_full_run_passes() {
    let o = twf(&["selftest"]);
    assert!(o.status.success(), "{}\n{}", stdout(&o), stderr(&o));
    assert_eq!(
        stdout(&o)
            .lines()
            .filter(|l| l.starts_with("PASS "))
            .count(),
        7
    );
}
