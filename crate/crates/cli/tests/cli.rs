use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn icuae(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_icuae"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn ok(args: &[&str]) -> String {
    let out = icuae(args);
    assert_eq!(
        code(&out),
        0,
        "icuae {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Data rows of a stamped CSV: (stamp, header, rows).
fn read_csv(path: &Path) -> (String, Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let stamp = lines.next().unwrap().to_string();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (stamp, header, rows)
}

struct Fixture {
    _dir: TempDir,
    root: PathBuf,
}

impl Fixture {
    fn new(patients: usize) -> Self {
        let dir = TempDir::new().unwrap();
        let root = dir.path().to_path_buf();
        ok(&[
            "generate",
            "--patients",
            &patients.to_string(),
            "--seed",
            "3",
            "--out",
            s(&root.join("raw")),
        ]);
        Self { _dir: dir, root }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn prepare(&self, name: &str, interval: usize) -> PathBuf {
        let out = self.path(name);
        ok(&[
            "prepare",
            "--raw",
            s(&self.path("raw")),
            "--out",
            s(&out),
            "--interval",
            &interval.to_string(),
            "--seed",
            "3",
        ]);
        out
    }

    fn train(&self, data: &Path, name: &str, model: &str, extra: &[&str]) -> PathBuf {
        let out = self.path(name);
        let mut args = vec![
            "train",
            "--data",
            s(data),
            "--model",
            model,
            "--out",
            s(&out),
            "--seed",
            "5",
        ];
        args.extend_from_slice(extra);
        ok(&args);
        out
    }
}

#[test]
fn generate_rejects_zero_patients_and_bad_flags() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("raw");
    assert_eq!(
        code(&icuae(&["generate", "--patients", "0", "--out", s(&out)])),
        2
    );
    assert_eq!(code(&icuae(&["generate", "--no-such-flag"])), 2);
    assert_eq!(code(&icuae(&["frobnicate"])), 2);
    assert_eq!(code(&icuae(&["--help"])), 0);
}

#[test]
fn generate_is_deterministic_and_stamped() {
    let a = Fixture::new(12);
    let b = Fixture::new(12);
    for f in ["manifest.json", "events.csv", "stays.csv", "schema.txt"] {
        let x = fs::read(a.path("raw").join(f)).unwrap();
        let y = fs::read(b.path("raw").join(f)).unwrap();
        assert_eq!(x, y, "{f} differs between identical runs");
    }
    let events = fs::read_to_string(a.path("raw/events.csv")).unwrap();
    let mut lines = events.lines();
    assert!(lines.next().unwrap().starts_with("# manifest_sha256="));
    assert_eq!(
        lines.next().unwrap(),
        "stay_id,feature_id,time_offset_hours,value"
    );
}

#[test]
fn config_file_values_replace_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("gen.cfg");
    fs::write(&cfg, "# small cohort\npatients = 4\n").unwrap();
    let out = dir.path().join("raw");
    ok(&[
        "generate",
        "--patients",
        "9",
        "--out",
        s(&out),
        "--config",
        s(&cfg),
    ]);
    let stays = fs::read_to_string(out.join("stays.csv")).unwrap();
    assert_eq!(stays.lines().count(), 2 + 4);

    fs::write(&cfg, "bogus=1\n").unwrap();
    assert_eq!(
        code(&icuae(&["generate", "--out", s(&out), "--config", s(&cfg)])),
        2
    );
}

#[test]
fn prepare_reports_units_and_is_reproducible() {
    let fx = Fixture::new(40);
    let first = ok(&[
        "prepare",
        "--raw",
        s(&fx.path("raw")),
        "--out",
        s(&fx.path("p1")),
        "--interval",
        "32",
    ]);
    let second = ok(&[
        "prepare",
        "--raw",
        s(&fx.path("raw")),
        "--out",
        s(&fx.path("p2")),
        "--interval",
        "32",
    ]);
    for unit in ["MICU", "CCU", "CSRU", "SICU", "TSICU"] {
        assert!(
            first.contains(&format!("{unit}: ")),
            "summary lacks {unit}:\n{first}"
        );
    }
    let container = |text: &str| {
        text.lines()
            .find_map(|l| l.strip_prefix("container_sha256="))
            .unwrap()
            .to_string()
    };
    assert_eq!(container(&first), container(&second));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(fx.path("p1/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["interval_hours"], 32);
    assert_eq!(manifest["flat_width"], 960);
}

#[test]
fn prepare_missing_input_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    let out = icuae(&[
        "prepare",
        "--raw",
        s(&dir.path().join("absent")),
        "--out",
        s(&dir.path().join("p")),
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn train_writes_history_and_rejects_conflicting_interval() {
    let fx = Fixture::new(40);
    let data = fx.prepare("p4", 4);
    let run = fx.train(
        &data,
        "run",
        "dense1",
        &["--epochs", "3", "--interval", "4"],
    );
    let (stamp, header, rows) = read_csv(&run.join("history.csv"));
    assert!(stamp.starts_with("# manifest_sha256="));
    assert_eq!(header, ["epoch", "train_mse", "val_mse"]);
    assert!(!rows.is_empty() && rows.len() <= 3);
    assert!(run.join("model.ckpt").exists() && run.join("run.cfg").exists());

    let refused = fx.path("refused");
    let out = icuae(&[
        "train",
        "--data",
        s(&data),
        "--model",
        "seq",
        "--interval",
        "16",
        "--out",
        s(&refused),
    ]);
    assert_eq!(code(&out), 2);
    assert!(
        !refused.exists(),
        "nothing is written before the usage check"
    );

    let out = icuae(&["train", "--data", s(&data), "--out", s(&refused)]);
    assert_eq!(code(&out), 2, "model is required");
}

#[test]
fn run_config_reproduces_history() {
    let fx = Fixture::new(40);
    let data = fx.prepare("p4", 4);
    let a = fx.train(&data, "a", "dense2", &["--epochs", "4", "--lr", "0.003"]);
    let cfg = a.join("run.cfg");
    let b = fx.path("b");
    ok(&[
        "train",
        "--data",
        s(&data),
        "--out",
        s(&b),
        "--config",
        s(&cfg),
    ]);
    assert_eq!(
        fs::read(a.join("history.csv")).unwrap(),
        fs::read(b.join("history.csv")).unwrap()
    );
    assert_eq!(
        fs::read(a.join("model.ckpt")).unwrap(),
        fs::read(b.join("model.ckpt")).unwrap()
    );
}

#[test]
fn diverging_training_exits_with_numeric_code() {
    let fx = Fixture::new(30);
    let data = fx.prepare("p4", 4);
    let out = icuae(&[
        "train",
        "--data",
        s(&data),
        "--model",
        "dense1",
        "--out",
        s(&fx.path("run")),
        "--optimizer",
        "adam",
        "--lr",
        "1e308",
        "--clip-norm",
        "none",
        "--epochs",
        "5",
    ]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn eval_orders_trained_below_untrained_and_covers_units() {
    let fx = Fixture::new(80);
    let data = fx.prepare("p4", 4);
    let frozen = fx.train(&data, "frozen", "dense1", &["--epochs", "1", "--lr", "0"]);
    let trained = fx.train(
        &data,
        "trained",
        "dense2",
        &["--epochs", "40", "--lr", "0.003"],
    );
    let out = fx.path("eval");
    ok(&[
        "eval",
        "--checkpoint",
        s(&frozen.join("model.ckpt")),
        "--checkpoint",
        s(&trained.join("model.ckpt")),
        "--data",
        s(&data),
        "--out",
        s(&out),
    ]);
    let (_, header, rows) = read_csv(&out.join("report.csv"));
    assert_eq!(
        header[..6],
        ["model", "interval", "trained_on", "subset", "n", "mse"]
    );
    let overall = |model: &str| -> f64 {
        rows.iter()
            .find(|r| r[0] == model && r[3] == "all")
            .map(|r| r[5].parse().unwrap())
            .unwrap()
    };
    assert!(overall("dense2") < overall("dense1"));
    for r in &rows {
        let mse: f64 = r[5].parse().unwrap();
        assert!(mse.is_finite() && mse >= 0.0);
    }

    let (_, header, fig2) = read_csv(&out.join("figure2.csv"));
    assert_eq!(header, ["interval", "dense1", "dense2", "seq"]);
    assert_eq!(fig2.len(), 1);
    assert_eq!(fig2[0][0], "4");
    assert!(fig2[0][3].is_empty());

    let (_, _, fig3) = read_csv(&out.join("figure3.csv"));
    let units: Vec<&str> = fig3.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(units, ["MICU", "CCU", "CSRU", "SICU", "TSICU"]);
}

#[test]
fn eval_rejects_mismatched_dataset() {
    let fx = Fixture::new(30);
    let p4 = fx.prepare("p4", 4);
    let p16 = fx.prepare("p16", 16);
    let run = fx.train(&p4, "run", "dense1", &["--epochs", "1"]);
    let out = icuae(&[
        "eval",
        "--checkpoint",
        s(&run.join("model.ckpt")),
        "--data",
        s(&p16),
        "--out",
        s(&fx.path("eval")),
    ]);
    assert_eq!(code(&out), 3);
    let out = icuae(&[
        "embed",
        "--checkpoint",
        s(&run.join("model.ckpt")),
        "--data",
        s(&p16),
        "--out",
        s(&fx.path("e.csv")),
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn reconstruct_and_embed_shapes() {
    let fx = Fixture::new(40);
    let data = fx.prepare("p32", 32);
    let run = fx.train(
        &data,
        "run",
        "seq",
        &["--epochs", "1", "--batch-size", "64"],
    );
    let ckpt = run.join("model.ckpt");

    let test: Vec<String> = fs::read_to_string(data.join("test.csv"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("stay_id"))
        .map(|l| l.split(',').next().unwrap().to_string())
        .collect();
    let stay = &test[0];

    let recon = fx.path("recon.csv");
    ok(&[
        "reconstruct",
        "--checkpoint",
        s(&ckpt),
        "--data",
        s(&data),
        "--stay-id",
        stay,
        "--out",
        s(&recon),
    ]);
    let (_, header, rows) = read_csv(&recon);
    assert_eq!(
        header,
        [
            "hour",
            "feature",
            "true_value",
            "reconstructed_value",
            "padding"
        ]
    );
    assert_eq!(rows.len(), 32 * 30);
    for r in &rows {
        let v: f64 = r[3].parse().unwrap();
        assert!(v > 0.0 && v < 1.0);
    }
    assert!(fx.path("recon.csv.manifest.json").exists());

    let out = icuae(&[
        "reconstruct",
        "--checkpoint",
        s(&ckpt),
        "--data",
        s(&data),
        "--stay-id",
        "1",
        "--out",
        s(&recon),
    ]);
    assert_eq!(code(&out), 3, "unknown stay is a lookup error");

    let emb = fx.path("emb.csv");
    ok(&[
        "embed",
        "--checkpoint",
        s(&ckpt),
        "--data",
        s(&data),
        "--out",
        s(&emb),
    ]);
    let first = fs::read(&emb).unwrap();
    let (_, header, rows) = read_csv(&emb);
    assert_eq!(header.len(), 3 + 96);
    assert_eq!(rows.len(), test.len());
    ok(&[
        "embed",
        "--checkpoint",
        s(&ckpt),
        "--data",
        s(&data),
        "--out",
        s(&emb),
    ]);
    assert_eq!(first, fs::read(&emb).unwrap());
}
