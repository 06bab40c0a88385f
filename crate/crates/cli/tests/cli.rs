//! Flag parsing, exit codes and run-directory layout of the `galtrans` binary.

use std::path::{Path, PathBuf};
use std::process::Command as Process;

use galtrans::image_core::read_archive;
use galtrans::trainer::Case;
use galtrans_cli::{parse_invocation, Command, RunConfig, EXIT_CONTRACT, EXIT_USAGE, EXIT_VALIDATION};

fn bin() -> Process {
    Process::new(env!("CARGO_BIN_EXE_galtrans"))
}

/// A config small enough for a full chain in a few seconds.
fn tiny_config(run_dir: &Path) -> RunConfig {
    let mut c = RunConfig::desk();
    c.run_dir = run_dir.to_path_buf();
    c.dataset.paired_train = 4;
    c.dataset.paired_test = 2;
    c.dataset.unpaired_x = 6;
    c.dataset.unpaired_y = 6;
    c.train.iterations = 2;
    c.train.batch.unpaired_x = 2;
    c.train.batch.unpaired_y = 2;
    c.train.batch.pairs = 2;
    c.evaluation.noise_samples = 8;
    c
}

fn write_config(dir: &Path, config: &RunConfig) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path
}

fn run(args: &[&str], config: &Path) -> i32 {
    let out = bin().args(args).arg("--config").arg(config).output().unwrap();
    if !out.status.success() {
        eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    }
    out.status.code().unwrap()
}

#[test]
fn seed_flag_reaches_every_stage() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &tiny_config(dir.path()));
    let p = path.to_str().unwrap();
    let (cmd, config) = parse_invocation(["galtrans", "gen-data", "--config", p, "--seed", "7"]).unwrap();
    assert_eq!(cmd, Command::GenData);
    assert_eq!(config.dataset.seed, 7);
    assert_eq!(config.train.seed, 7);
}

#[test]
fn iteration_flag_overrides_only_iterations() {
    let dir = tempfile::tempdir().unwrap();
    let file = tiny_config(dir.path());
    let path = write_config(dir.path(), &file);
    let (cmd, config) =
        parse_invocation(["galtrans", "train-step1", "--config", path.to_str().unwrap(), "--iterations", "500"])
            .unwrap();
    assert_eq!(cmd, Command::TrainStep1 { resume: false });
    assert_eq!(config.train.iterations, 500);
    let mut expected = file;
    expected.train.iterations = 500;
    assert_eq!(config, expected);
}

#[test]
fn usage_errors() {
    for argv in [
        vec!["galtrans", "frobnicate"],
        vec!["galtrans", "gen-data", "--no-such-flag"],
        vec!["galtrans"],
    ] {
        let err = parse_invocation(argv.clone()).unwrap_err();
        assert_eq!(err.code, EXIT_USAGE, "{argv:?}");
    }
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    assert!(!out.stderr.is_empty());
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let mut v = serde_json::to_value(tiny_config(dir.path())).unwrap();
    v["train"].as_object_mut().unwrap().remove("clip_norm");
    std::fs::write(&path, v.to_string()).unwrap();
    let err = parse_invocation(["galtrans", "gen-data", "--config", path.to_str().unwrap()]).unwrap_err();
    assert_eq!(err.code, EXIT_VALIDATION);
    assert!(err.message.contains("clip_norm"), "{}", err.message);

    v = serde_json::to_value(tiny_config(dir.path())).unwrap();
    v["surprise"] = serde_json::json!(1);
    std::fs::write(&path, v.to_string()).unwrap();
    let err = parse_invocation(["galtrans", "gen-data", "--config", path.to_str().unwrap()]).unwrap_err();
    assert_eq!(err.code, EXIT_VALIDATION);
    assert!(err.message.contains("surprise"), "{}", err.message);
}

#[test]
fn variant_case_from_flag_or_config() {
    let dir = tempfile::tempdir().unwrap();
    let mut file = tiny_config(dir.path());
    let path = write_config(dir.path(), &file);
    let p = path.to_str().unwrap();
    let err = parse_invocation(["galtrans", "train-variant", "--config", p]).unwrap_err();
    assert_eq!(err.code, EXIT_VALIDATION);
    let err = parse_invocation(["galtrans", "train-variant", "--config", p, "--case", "z"]).unwrap_err();
    assert_eq!(err.code, EXIT_VALIDATION);
    file.variant = Some(Case::C);
    let path = write_config(dir.path(), &file);
    let p = path.to_str().unwrap();
    let (cmd, _) = parse_invocation(["galtrans", "train-variant", "--config", p]).unwrap();
    assert_eq!(cmd, Command::TrainVariant { case: Case::C, resume: false });
    let (cmd, _) = parse_invocation(["galtrans", "train-variant", "--config", p, "--case", "E"]).unwrap();
    assert_eq!(cmd, Command::TrainVariant { case: Case::E, resume: false });
}

#[test]
fn evaluate_without_test_pairs_is_an_empty_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = tiny_config(dir.path());
    config.dataset.paired_test = 0;
    let path = write_config(dir.path(), &config);
    for args in [["gen-data"], ["train-step1"], ["train-step2"]] {
        assert_eq!(run(&args, &path), 0, "{args:?}");
    }
    assert_eq!(run(&["evaluate"], &path), EXIT_VALIDATION);
}

#[test]
fn tiny_chain_layout_and_translation_contract() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path());
    let path = write_config(dir.path(), &config);
    let data = dir.path().join("data");
    assert_eq!(run(&["gen-data"], &path), 0);
    let archive_bytes = std::fs::read(data.join("x.gxc")).unwrap();
    for args in [["train-step1"], ["train-step2"], ["evaluate"]] {
        assert_eq!(run(&args, &path), 0, "{args:?}");
    }
    for f in ["state.ckpt", "model.ckpt", "losses.csv", "config.json"] {
        assert!(dir.path().join("step1").join(f).is_file(), "step1/{f}");
        assert!(dir.path().join("step2").join(f).is_file(), "step2/{f}");
    }
    let eval = dir.path().join("evaluation");
    assert!(eval.join("summary.json").is_file());
    for f in [
        "flux_differences.csv",
        "scatter_r.png",
        "scatter_r_points.csv",
        "scatter_r_reference.csv",
        "fourier_real_r.png",
        "fourier_translated_z.csv",
    ] {
        assert!(eval.join("x_to_y").join(f).is_file(), "x_to_y/{f}");
    }

    assert_eq!(run(&["translate", "--direction", "x-to-y"], &path), 0);
    let (out, manifest) = read_archive(&dir.path().join("translate").join("x_to_y.gxc")).unwrap();
    assert_eq!(out.len(), 12);
    assert_eq!(out[0].size(), 68);
    assert_eq!(manifest.survey, config.dataset.survey_y);

    // A Y archive fed to the X->Y generator.
    let y = data.join("y.gxc");
    let code = run(&["translate", "--direction", "x-to-y", "--input", y.to_str().unwrap()], &path);
    assert_eq!(code, EXIT_CONTRACT);

    // Inputs are never rewritten.
    assert_eq!(std::fs::read(data.join("x.gxc")).unwrap(), archive_bytes);
}

#[test]
fn missing_checkpoint_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &tiny_config(dir.path()));
    assert_eq!(run(&["gen-data"], &path), 0);
    assert_eq!(run(&["train-step2"], &path), galtrans_cli::EXIT_IO);
}

#[test]
fn shipped_desk_config_matches_defaults() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk.json");
    let loaded = RunConfig::load(&path).unwrap();
    assert_eq!(loaded, RunConfig::desk());
}
