use isingml::experiment::{
    reproduce, run_to_dir, DataConfig, DataSource, EpsilonSetting, OutputPaths, RANDOM_REPEATS,
};
use isingml::{BackendSpec, BasOptions, Checkpoint, Execution, Preset, RunConfig, RunManifest};

fn csv_rows(path: &std::path::Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect()
}

#[test]
fn run_directory_contents_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = Preset::Random.config(4);
    config.training.epochs = 7;
    config.checkpoint_every = 3;
    config.set_backend(BackendSpec::exact());
    let (outcome, manifest) = run_to_dir(&config, dir.path()).unwrap();

    let rows = csv_rows(&dir.path().join("metrics.csv"));
    assert_eq!(rows.len(), 8);
    assert_eq!(rows[0], "epoch,train_mse,test_mse,accuracy,mean_step");
    assert!(dir.path().join("checkpoint-0003.toml").exists());
    assert!(dir.path().join("checkpoint-0006.toml").exists());
    assert!(!dir.path().join("checkpoint-0007.toml").exists());

    let model = Checkpoint::load(&dir.path().join("model.toml")).unwrap();
    assert_eq!(model.state().unwrap(), outcome.report.final_state);
    assert_eq!(
        RunConfig::load(&dir.path().join("config.toml")).unwrap(),
        config
    );
    let loaded = RunManifest::load(&dir.path().join("manifest.toml")).unwrap();
    assert_eq!(loaded, manifest);
    assert_eq!(loaded.solver_calls, 7 * 20);
    assert_eq!(loaded.epsilon_used, outcome.epsilon);
    assert_eq!(loaded.outputs, OutputPaths::in_dir(dir.path()));
}

#[test]
fn bars_and_stripes_manifest_notes() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = Preset::Bas.config(0);
    let small = |seed| DataSource::Bas {
        size: 3,
        samples: 12,
        seed,
        options: BasOptions::default(),
    };
    config.datasets = DataConfig {
        train: small(0),
        test: Some(small(1)),
    };
    config.training.epochs = 2;
    let (outcome, manifest) = run_to_dir(&config, dir.path()).unwrap();
    assert_eq!(config.model.epsilon, EpsilonSetting::FromData);
    let test = outcome.test.as_ref().unwrap();
    let overlap = test.overlap(&outcome.train);
    assert!(manifest
        .notes
        .iter()
        .any(|n| n.contains("simulated annealing")));
    assert!(manifest
        .notes
        .iter()
        .any(|n| n.starts_with(&format!("{overlap} of 12 test inputs"))));
    let r = &outcome.report.records[0];
    assert!(r.train_accuracy.is_some() && r.test_accuracy.is_some());
}

#[test]
fn reproduce_random_writes_aggregate_table() {
    let dir = tempfile::tempdir().unwrap();
    let summary = reproduce(
        Preset::Random,
        100,
        Some(BackendSpec::exact()),
        dir.path(),
        Execution::Parallel,
    )
    .unwrap();
    let rows = csv_rows(&dir.path().join("loss_aggregate.csv"));
    assert_eq!(rows[0], "epoch,mean_mse,std_mse,runs");
    assert_eq!(rows.len(), 51);
    let left_out = summary
        .lines
        .iter()
        .filter(|l| l.contains("left out"))
        .count();
    let runs: usize = rows[1].rsplit(',').next().unwrap().parse().unwrap();
    assert_eq!(runs + left_out, RANDOM_REPEATS);
    for i in 0..RANDOM_REPEATS {
        assert!(dir.path().join(format!("run-{i:02}/metrics.csv")).exists());
    }
}

#[test]
fn reproduce_function_writes_sweep() {
    let dir = tempfile::tempdir().unwrap();
    reproduce(
        Preset::FnQuad { size: 50 },
        0,
        None,
        dir.path(),
        Execution::Parallel,
    )
    .unwrap();
    let rows = csv_rows(&dir.path().join("sweep.csv"));
    assert_eq!(rows[0], "x,target,model");
    assert_eq!(rows.len(), 51);
    assert!(dir.path().join("run/manifest.toml").exists());
}
