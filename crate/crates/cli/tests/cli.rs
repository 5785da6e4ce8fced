use std::path::Path;
use std::process::{Command, Output};

use isingml::{BackendSpec, Checkpoint, ModelState, PreprocessSpec, RunConfig};

fn isingml(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isingml"))
        .current_dir(dir)
        .env_remove("ISINGML_OUT_DIR")
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

fn csv_shape(path: &Path) -> (String, usize, usize) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows: Vec<&str> = lines.collect();
    let cols = header.split(',').count();
    assert!(rows.iter().all(|r| r.split(',').count() == cols));
    (header, rows.len(), cols)
}

#[test]
fn gen_data_random_and_bas_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let o = isingml(
        dir.path(),
        &[
            "--out-dir",
            "out",
            "--seed",
            "7",
            "gen-data",
            "random",
            "--n",
            "10",
            "--samples",
            "20",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows, cols) = csv_shape(&dir.path().join("out/random.csv"));
    assert_eq!((rows, cols), (20, 11));
    assert!(header.starts_with("theta_0,theta_1,") && header.ends_with("theta_9,y"));

    let o = isingml(
        dir.path(),
        &[
            "--out-dir",
            "out",
            "gen-data",
            "bas",
            "--k",
            "12",
            "--samples",
            "80",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("80 rows x 144 features"));
    let (_, rows, cols) = csv_shape(&dir.path().join("out/bas.csv"));
    assert_eq!((rows, cols), (80, 145));
}

#[test]
fn out_dir_defaults_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_isingml"))
        .current_dir(dir.path())
        .env("ISINGML_OUT_DIR", "from-env")
        .args([
            "gen-data",
            "function",
            "--function",
            "quadratic",
            "--samples",
            "5",
        ])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, rows, cols) = csv_shape(&dir.path().join("from-env/fn-quad.csv"));
    assert_eq!((rows, cols), (5, 2));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = isingml(dir.path(), &["gen-data", "random", "--samples", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--n"));

    let o = isingml(dir.path(), &["train", "--preset", "mnist"]);
    assert_eq!(o.status.code(), Some(2));

    let o = isingml(dir.path(), &["train"]);
    assert_eq!(o.status.code(), Some(2));

    let o = isingml(
        dir.path(),
        &["--backend", "quantum", "train", "--preset", "random"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("quantum"));

    let o = isingml(
        dir.path(),
        &[
            "--backend-param",
            "temperature=3",
            "train",
            "--preset",
            "random",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("temperature"));
}

#[test]
fn bas_with_exact_backend_is_a_capacity_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = isingml(
        dir.path(),
        &["train", "--preset", "bas", "--backend", "exact"],
    );
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(
        err.contains("144") && err.contains("simulated-annealing"),
        "{err}"
    );
}

#[test]
fn fn_lin_preset_writes_published_values() {
    let dir = tempfile::tempdir().unwrap();
    let o = isingml(
        dir.path(),
        &[
            "--out-dir",
            "out",
            "train",
            "--preset",
            "fn-lin",
            "--size",
            "50",
            "--epochs",
            "2",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let run = dir.path().join("out/fn-lin-50");
    let cfg = RunConfig::load(&run.join("config.toml")).unwrap();
    assert_eq!(
        cfg.model.preprocess,
        PreprocessSpec::uniform_offset(1, 0.8 / 50.0, 50)
    );
    assert_eq!(cfg.model.lambda, -0.3);
    assert_eq!(
        cfg.model.epsilon,
        isingml::experiment::EpsilonSetting::Pinned { value: -9.30 }
    );
    assert_eq!(cfg.training.eta, 0.02);
    assert_eq!(cfg.training.epochs, 2);
    let text = std::fs::read_to_string(run.join("config.toml")).unwrap();
    assert!(text.contains("\"model.lambda\" = \"published\""), "{text}");
    assert!(text.contains("\"training.epochs\" = \"user\""), "{text}");
    let (header, rows, _) = csv_shape(&run.join("metrics.csv"));
    assert_eq!(header, "epoch,train_mse,test_mse,accuracy,mean_step");
    assert_eq!(rows, 2);
}

#[test]
fn random_preset_loss_decreases() {
    let dir = tempfile::tempdir().unwrap();
    let o = isingml(
        dir.path(),
        &[
            "--out-dir",
            "out",
            "train",
            "--preset",
            "random",
            "--backend",
            "simulated-annealing",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("out/random/metrics.csv")).unwrap();
    let losses: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(losses.len(), 50);
    let head: f64 = losses[..5].iter().sum();
    let tail: f64 = losses[45..].iter().sum();
    assert!(tail < 0.5 * head, "{head} -> {tail}");
}

#[test]
fn config_file_rejects_unknown_keys_and_yields_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = isingml::Preset::Random.config(3);
    cfg.training.epochs = 4;
    cfg.set_backend(BackendSpec::exact());
    cfg.save(&dir.path().join("run.toml")).unwrap();

    let o = isingml(
        dir.path(),
        &[
            "--out-dir",
            "out",
            "--config",
            "run.toml",
            "train",
            "--epochs",
            "2",
            "--name",
            "cfg",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, rows, _) = csv_shape(&dir.path().join("out/cfg/metrics.csv"));
    assert_eq!(rows, 2);

    let text = std::fs::read_to_string(dir.path().join("run.toml")).unwrap();
    std::fs::write(
        dir.path().join("bad.toml"),
        text.replace("eta =", "learning_rate ="),
    )
    .unwrap();
    let o = isingml(dir.path(), &["--config", "bad.toml", "train"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("learning_rate"), "{}", stderr(&o));
}

#[test]
fn manifest_replay_matches() {
    let dir = tempfile::tempdir().unwrap();
    let o = isingml(
        dir.path(),
        &[
            "--out-dir",
            "out",
            "--backend",
            "exact",
            "--seed",
            "5",
            "train",
            "--preset",
            "random",
            "--epochs",
            "6",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = isingml(
        dir.path(),
        &[
            "--out-dir",
            "out",
            "reproduce",
            "--manifest",
            "out/random/manifest.toml",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("metrics match"), "{}", stdout(&o));
    let a = std::fs::read(dir.path().join("out/random/metrics.csv")).unwrap();
    let b = std::fs::read(dir.path().join("out/random-replay/metrics.csv")).unwrap();
    assert_eq!(a, b);
}

fn zero_model(dir: &Path, n: usize) -> std::path::PathBuf {
    let state = ModelState::complete(n, PreprocessSpec::Identity, 1.0, 0.0).unwrap();
    let path = dir.join("zero.toml");
    Checkpoint::new(&state, BackendSpec::exact(), 0)
        .save(&path)
        .unwrap();
    path
}

#[test]
fn predict_closed_form_and_dimension_check() {
    let dir = tempfile::tempdir().unwrap();
    let model = zero_model(dir.path(), 2);
    let model = model.to_str().unwrap();
    let o = isingml(
        dir.path(),
        &["predict", "--model", model, "--input", "1,-2", "--verbose"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.lines().any(|l| l == "-3"), "{out}");
    assert!(out.contains("z* = -+") && out.contains("E0 = -3"), "{out}");

    let o = isingml(
        dir.path(),
        &["predict", "--model", model, "--input", "1,-2,3"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("expected length 2"), "{}", stderr(&o));
}

#[test]
fn predict_bas_matrix_prints_label() {
    let dir = tempfile::tempdir().unwrap();
    // λ = 1, ε = 10: all-zero couplings give F = 10 - (number of ones).
    let state = ModelState::complete(9, PreprocessSpec::Identity, 1.0, 10.0).unwrap();
    let model = dir.path().join("bas.toml");
    Checkpoint::new(&state, BackendSpec::exact(), 0)
        .save(&model)
        .unwrap();
    std::fs::write(dir.path().join("m.txt"), "111\n000\n000\n").unwrap();
    let o = isingml(
        dir.path(),
        &["predict", "--model", "bas.toml", "--bas", "m.txt"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(
        out.contains("7\n") && out.contains("label: stripes"),
        "{out}"
    );

    std::fs::write(dir.path().join("bad.txt"), "110\n000\n000\n").unwrap();
    let o = isingml(
        dir.path(),
        &["predict", "--model", "bas.toml", "--bas", "bad.txt"],
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solve_problem_document() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("p.toml"),
        "n = 3\nbiases = [1.0, 0.0, 0.0]\nedges = [[0, 1, 1.0], [1, 2, 1.0], [0, 2, 1.0]]\n",
    )
    .unwrap();
    let o = isingml(dir.path(), &["solve", "p.toml"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(
        out.contains("backend: exact") && out.contains("energy: -2"),
        "{out}"
    );
}
