//! Seeded behaviour of the training loops on a tiny synthetic corpus.

use galtrans::networks::{ModelBundle, Role};
use galtrans::synthetic::{build_dataset, DatasetConfig};
use galtrans::trainer::{
    advance, init_step_one, init_step_two, init_variant, run_variant, train_step_one, train_step_two, BatchSizes,
    Case, CheckpointState, TrainConfig, TrainingData, VariantSpec,
};
use galtrans::Error;

fn tiny() -> (TrainConfig, TrainingData) {
    let dataset = DatasetConfig {
        paired_train: 4,
        paired_test: 2,
        unpaired_x: 4,
        unpaired_y: 4,
        seed: 21,
        ..DatasetConfig::desk()
    };
    let data = TrainingData::from_dataset(&build_dataset(&dataset).unwrap()).unwrap();
    let config = TrainConfig {
        iterations: 3,
        batch: BatchSizes {
            unpaired_x: 2,
            unpaired_y: 2,
            pairs: 2,
        },
        seed: 5,
        ..TrainConfig::desk()
    };
    (config, data)
}

#[test]
fn zero_iterations_return_the_initialization() {
    let (mut config, data) = tiny();
    config.iterations = 0;
    let one = train_step_one(&config, &data).unwrap();
    let roles = [Role::AeX, Role::AeY, Role::NeX, Role::NeY, Role::DiscX, Role::DiscY];
    let init = ModelBundle::initialize(&config.network, &data.survey_x, &data.survey_y, &roles, config.seed).unwrap();
    assert_eq!(one.state.bundle, init);
    assert!(one.log.is_empty());

    let two = train_step_two(&config, &data, &one.state.bundle).unwrap();
    let gens =
        ModelBundle::initialize(&config.network, &data.survey_x, &data.survey_y, &[Role::GenXy, Role::GenYx], config.seed)
            .unwrap();
    for role in [Role::GenXy, Role::GenYx] {
        assert_eq!(two.state.bundle.get(role), gens.get(role));
    }
}

#[test]
fn runs_are_deterministic() {
    let (config, data) = tiny();
    let a = train_step_one(&config, &data).unwrap();
    let b = train_step_one(&config, &data).unwrap();
    assert_eq!(a.state.bundle.max_abs_diff(&b.state.bundle), 0.0);
    assert_eq!(a.log, b.log);
    let a2 = train_step_two(&config, &data, &a.state.bundle).unwrap();
    let b2 = train_step_two(&config, &data, &b.state.bundle).unwrap();
    assert_eq!(a2.state, b2.state);

    let mut other = config.clone();
    other.seed += 1;
    let c = train_step_one(&other, &data).unwrap();
    assert!(a.state.bundle.max_abs_diff(&c.state.bundle) > 0.0);
}

fn assert_resume_matches(mut fresh: impl FnMut() -> CheckpointState, config: &TrainConfig, data: &TrainingData) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.ckpt");
    let mut whole = fresh();
    let mut whole_log = Vec::new();
    advance(&mut whole, config, data, 4, &mut whole_log).unwrap();

    let mut part = fresh();
    let mut log = Vec::new();
    advance(&mut part, config, data, 2, &mut log).unwrap();
    part.save(&path).unwrap();
    let mut resumed = CheckpointState::load(&path).unwrap();
    assert_eq!(resumed, part);
    advance(&mut resumed, config, data, 4, &mut log).unwrap();
    assert_eq!(resumed.bundle.max_abs_diff(&whole.bundle), 0.0);
    assert_eq!(resumed, whole);
    assert_eq!(log, whole_log);
}

#[test]
fn resume_reproduces_the_uninterrupted_run() {
    let (config, data) = tiny();
    assert_resume_matches(|| init_step_one(&config, &data).unwrap(), &config, &data);
    let one = train_step_one(&config, &data).unwrap().state.bundle;
    assert_resume_matches(|| init_step_two(&config, &data, &one).unwrap(), &config, &data);
    let f = VariantSpec::for_case(Case::F);
    assert_resume_matches(|| init_variant(f, &config, &data).unwrap(), &config, &data);
}

#[test]
fn model_checkpoints_are_not_training_states() {
    let (config, data) = tiny();
    let state = init_step_one(&config, &data).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    galtrans::networks::write_checkpoint(
        &path,
        &state.bundle,
        galtrans::networks::Dtype::F32,
        &Default::default(),
    )
    .unwrap();
    assert!(matches!(CheckpointState::load(&path), Err(Error::Format(_))));
}

#[test]
fn every_case_trains_with_its_own_losses() {
    let (mut config, data) = tiny();
    config.iterations = 1;
    config.discriminator_steps = 1;
    config.noise_steps = 1;
    let expect: [(Case, &[&str]); 6] = [
        (Case::A, &["identity", "adv_g", "generator_total", "adv_d"]),
        (Case::B, &["cycle", "adv_g", "generator_total", "adv_d"]),
        (Case::C, &["pseudo_identity", "cycle", "adv_g", "generator_total", "adv_d"]),
        (Case::D, &["identity", "cycle", "adv_g", "generator_total", "adv_d"]),
        (Case::E, &["identity", "cycle", "adv_g", "generator_total", "adv_d"]),
        (Case::F, &["identity", "cycle", "generator_total", "adv_d", "adv_ne"]),
    ];
    for (case, names) in expect {
        let out = run_variant(VariantSpec::for_case(case), &config, &data).unwrap();
        let got: Vec<&str> = out.log.iter().map(|r| r.loss.as_str()).collect();
        assert_eq!(got, names, "case {case}");
        assert_eq!(out.state.bundle.get(Role::NeX).is_some(), case == Case::F);
        assert!(out.state.bundle.all_finite());
    }
    let full = run_variant(VariantSpec::for_case(Case::Full), &config, &data).unwrap();
    let got: Vec<&str> = full.log.iter().map(|r| r.loss.as_str()).collect();
    assert_eq!(got, ["auto", "adv_d", "adv_ne", "identity", "cycle", "step2_total"]);
    assert!(matches!(
        init_variant(VariantSpec::for_case(Case::Full), &config, &data),
        Err(Error::Config(_))
    ));
}

#[test]
fn non_finite_losses_abort() {
    let (mut config, data) = tiny();
    // Adam moves every parameter by about lr per step.
    config.lr0 = 1e300;
    assert!(matches!(train_step_one(&config, &data), Err(Error::Divergence(_))));
}
