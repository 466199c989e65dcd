use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const FIXTURE: &str = "#pool dim=2 actions=2\n0,0,0\n1,0,0\n3,0,1\n";

fn bcmer(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bcmer"))
        .args(args)
        .current_dir(dir)
        .env_remove("BCMER_SEED")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = bcmer(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(dir: &Path, args: &[&str]) -> String {
    let out = bcmer(dir, args);
    assert!(!out.status.success(), "{args:?} should fail");
    String::from_utf8(out.stderr).unwrap()
}

fn workspace() -> TempDir {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("fixture.pool"), FIXTURE).unwrap();
    dir
}

#[test]
fn collect_is_deterministic() {
    let dir = workspace();
    let d = dir.path();
    let args = [
        "collect",
        "--env",
        "predator-prey",
        "--teacher",
        "scripted",
        "--n",
        "500",
        "--seed",
        "7",
    ];
    let out = ok(d, &[&args[..], &["--out", "a.pool"]].concat());
    assert!(out.contains("500 raw pairs"), "{out}");
    ok(d, &[&args[..], &["--out", "b.pool"]].concat());
    let a = fs::read(d.join("a.pool")).unwrap();
    assert_eq!(a, fs::read(d.join("b.pool")).unwrap());
    assert!(a.starts_with(b"#pool dim=2 actions=4\n"));
}

#[test]
fn seed_comes_from_the_environment() {
    let dir = workspace();
    let d = dir.path();
    let run = |seed: &str, out: &str| {
        let status = Command::new(env!("CARGO_BIN_EXE_bcmer"))
            .args([
                "collect",
                "--env",
                "mountain-car",
                "--n",
                "50",
                "--out",
                out,
            ])
            .current_dir(d)
            .env("BCMER_SEED", seed)
            .output()
            .unwrap()
            .status;
        assert!(status.success());
        fs::read(d.join(out)).unwrap()
    };
    assert_eq!(run("4", "x.pool"), run("4", "y.pool"));
    ok(
        d,
        &[
            "collect",
            "--env",
            "mountain-car",
            "--n",
            "50",
            "--seed",
            "4",
            "--out",
            "z.pool",
        ],
    );
    assert_eq!(run("4", "x.pool"), fs::read(d.join("z.pool")).unwrap());
    assert_ne!(run("5", "w.pool"), run("4", "x.pool"));
}

#[test]
fn unknown_environment_is_rejected() {
    let dir = workspace();
    let err = fails(
        dir.path(),
        &["collect", "--env", "pong", "--n", "5", "--out", "x.pool"],
    );
    assert!(err.contains("pong"), "{err}");
    assert!(!dir.path().join("x.pool").exists());
}

#[test]
fn condense_fixture_and_fixpoint() {
    let dir = workspace();
    let d = dir.path();
    let out = ok(
        d,
        &[
            "condense",
            "--pool",
            "fixture.pool",
            "--out",
            "c.pool",
            "--result",
            "c.txt",
        ],
    );
    assert!(out.contains("retained 2 of 3"), "{out}");
    assert_eq!(
        fs::read_to_string(d.join("c.pool")).unwrap(),
        "#pool dim=2 actions=2\n1,0,0\n3,0,1\n"
    );
    let result = fs::read_to_string(d.join("c.txt")).unwrap();
    assert!(result.starts_with("#condensation retained=2 total=3"));
    ok(d, &["condense", "--pool", "c.pool", "--out", "cc.pool"]);
    assert_eq!(
        fs::read(d.join("c.pool")).unwrap(),
        fs::read(d.join("cc.pool")).unwrap()
    );
}

#[test]
fn condense_rejects_empty_input_and_warns_on_one_action() {
    let dir = workspace();
    let d = dir.path();
    fs::write(d.join("empty.pool"), "").unwrap();
    fails(d, &["condense", "--pool", "empty.pool", "--out", "x.pool"]);
    fs::write(d.join("headless.pool"), "#pool dim=2 actions=2\n").unwrap();
    fails(
        d,
        &["condense", "--pool", "headless.pool", "--out", "x.pool"],
    );
    fs::write(d.join("one.pool"), "#pool dim=1 actions=2\n0,0\n1,0\n").unwrap();
    let out = bcmer(d, &["condense", "--pool", "one.pool", "--out", "x.pool"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("single action"));
    fails(
        d,
        &["condense", "--pool", "missing.pool", "--out", "x.pool"],
    );
}

#[test]
fn fit_and_predict_explain_the_decision() {
    let dir = workspace();
    let d = dir.path();
    for backend in ["brute", "kdtree", "balltree"] {
        ok(
            d,
            &[
                "fit",
                "--pool",
                "fixture.pool",
                "--model",
                backend,
                "--out",
                "m.txt",
            ],
        );
        let model = fs::read_to_string(d.join("m.txt")).unwrap();
        assert!(model.starts_with(&format!("#nbmodel backend={backend}")));
        let out = ok(d, &["predict", "--model", "m.txt", "--state", "-5,0"]);
        assert!(out.starts_with("action 0\n"), "{out}");
        assert!(
            out.contains("nearest experience 0 at (0,0) distance 5"),
            "{out}"
        );
    }
    ok(
        d,
        &[
            "fit",
            "--pool",
            "fixture.pool",
            "--model",
            "dt_gini_l5",
            "--out",
            "t.txt",
        ],
    );
    assert_eq!(
        ok(d, &["predict", "--model", "t.txt", "--state", "2.5,0"]),
        "action 1\n"
    );
    fails(d, &["predict", "--model", "t.txt", "--state", "1,2,3"]);
    fails(d, &["predict", "--model", "fixture.pool", "--state", "1,2"]);
    fails(
        d,
        &[
            "fit",
            "--pool",
            "fixture.pool",
            "--model",
            "teacher",
            "--out",
            "t.txt",
        ],
    );
}

#[test]
fn scaled_fit_round_trips() {
    let dir = workspace();
    let d = dir.path();
    ok(
        d,
        &[
            "fit",
            "--pool",
            "fixture.pool",
            "--model",
            "kdtree",
            "--scale",
            "--out",
            "s.txt",
        ],
    );
    assert!(fs::read_to_string(d.join("s.txt"))
        .unwrap()
        .contains("scale="));
    assert!(ok(d, &["predict", "--model", "s.txt", "--state", "2.9,0"]).starts_with("action 1"));
}

#[test]
fn evaluate_teacher_against_itself() {
    let dir = workspace();
    let d = dir.path();
    let out = ok(
        d,
        &[
            "evaluate",
            "--env",
            "mountain-car",
            "--episodes",
            "3",
            "--out",
            "e.txt",
        ],
    );
    assert!(out.contains("\nacc=1\n"), "{out}");
    assert!(fs::read_to_string(d.join("e.txt"))
        .unwrap()
        .starts_with("#evaluation\n"));
    // a 2-D model cannot drive a 4-D environment
    ok(
        d,
        &[
            "fit",
            "--pool",
            "fixture.pool",
            "--model",
            "brute",
            "--out",
            "m.txt",
        ],
    );
    fails(
        d,
        &[
            "evaluate",
            "--env",
            "cart-pole",
            "--student",
            "m.txt",
            "--episodes",
            "1",
        ],
    );
}

#[test]
fn evaluate_a_collected_student() {
    let dir = workspace();
    let d = dir.path();
    ok(
        d,
        &[
            "collect",
            "--env",
            "predator-prey",
            "--n",
            "2000",
            "--seed",
            "1",
            "--out",
            "p.pool",
        ],
    );
    ok(d, &["condense", "--pool", "p.pool", "--out", "c.pool"]);
    ok(
        d,
        &[
            "fit", "--pool", "c.pool", "--model", "kdtree", "--out", "m.txt",
        ],
    );
    let out = ok(
        d,
        &[
            "evaluate",
            "--env",
            "predator-prey",
            "--student",
            "m.txt",
            "--episodes",
            "20",
        ],
    );
    let acc: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("acc="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(acc > 0.9, "{out}");
}

#[test]
fn external_teacher_protocol() {
    let dir = workspace();
    let d = dir.path();
    let out = ok(
        d,
        &[
            "collect",
            "--env",
            "cart-pole",
            "--teacher",
            "external",
            "--teacher-command",
            "while read line; do echo 1; done",
            "--n",
            "20",
            "--out",
            "x.pool",
        ],
    );
    assert!(out.contains("20 raw pairs"));
    let pool = fs::read_to_string(d.join("x.pool")).unwrap();
    assert!(pool.lines().skip(1).all(|l| l.ends_with(",1")));
    fails(
        d,
        &[
            "collect",
            "--env",
            "cart-pole",
            "--teacher",
            "external",
            "--teacher-command",
            "echo nope",
            "--n",
            "5",
            "--out",
            "y.pool",
        ],
    );
    fails(
        d,
        &[
            "collect",
            "--env",
            "cart-pole",
            "--teacher",
            "external",
            "--n",
            "5",
            "--out",
            "y.pool",
        ],
    );
}

#[test]
fn suite_writes_csv_and_summary() {
    let dir = workspace();
    let d = dir.path();
    fs::write(
        d.join("smoke.cfg"),
        "# smoke run\nenvs=predator-prey\nsizes=300\nseeds=2\nepisodes=5\nmodels=teacher,brute,kdtree,dt_gini_l5\n",
    )
    .unwrap();
    ok(d, &["suite", "--config", "smoke.cfg", "--out-dir", "a"]);
    ok(d, &["suite", "--config", "smoke.cfg", "--out-dir", "b"]);
    let csv = fs::read_to_string(d.join("a/report.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "env,size,model,mae,rmsd,acc,retained_fraction,mean_return,seed"
    );
    assert_eq!(lines.count(), 4);
    assert_eq!(csv, fs::read_to_string(d.join("b/report.csv")).unwrap());
    let summary = fs::read_to_string(d.join("a/summary.txt")).unwrap();
    assert!(
        summary.contains("sizes=300") && summary.contains("models=teacher,brute,kdtree,dt_gini_l5")
    );

    ok(
        d,
        &[
            "suite",
            "--config",
            "smoke.cfg",
            "--sizes",
            "100,200",
            "--out-dir",
            "c",
        ],
    );
    assert_eq!(
        fs::read_to_string(d.join("c/report.csv"))
            .unwrap()
            .lines()
            .count(),
        1 + 2 * 4
    );
    fs::write(d.join("bad.cfg"), "sizes=many\n").unwrap();
    fails(d, &["suite", "--config", "bad.cfg", "--out-dir", "x"]);
}

#[test]
fn visualize_scatter_and_regions() {
    let dir = workspace();
    let d = dir.path();
    ok(
        d,
        &["visualize", "--pool", "fixture.pool", "--svg", "p.svg"],
    );
    let svg = fs::read_to_string(d.join("p.svg")).unwrap();
    assert_eq!(svg.matches("<circle").count(), 3);
    assert_eq!(svg.matches("fill=\"none\"").count(), 1);

    // condensed and full pools draw the same regions on this fixture
    ok(
        d,
        &["condense", "--pool", "fixture.pool", "--out", "c.pool"],
    );
    ok(
        d,
        &[
            "fit",
            "--pool",
            "fixture.pool",
            "--model",
            "brute",
            "--out",
            "full.txt",
        ],
    );
    ok(
        d,
        &[
            "fit", "--pool", "c.pool", "--model", "brute", "--out", "cond.txt",
        ],
    );
    for (m, img) in [("full.txt", "full.ppm"), ("cond.txt", "cond.ppm")] {
        ok(
            d,
            &[
                "visualize",
                "--model",
                m,
                "--ppm",
                img,
                "--env",
                "predator-prey",
                "--width",
                "40",
                "--height",
                "30",
            ],
        );
    }
    let full = fs::read(d.join("full.ppm")).unwrap();
    assert!(full.starts_with(b"P6\n40 30\n255\n"));
    assert_eq!(full, fs::read(d.join("cond.ppm")).unwrap());

    fs::write(d.join("line.pool"), "#pool dim=1 actions=2\n0,0\n1,1\n").unwrap();
    let err = fails(d, &["visualize", "--pool", "line.pool", "--svg", "l.svg"]);
    assert!(err.contains("dimension"), "{err}");
    fails(d, &["visualize"]);
}
