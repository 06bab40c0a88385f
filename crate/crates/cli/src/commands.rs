use std::path::{Path, PathBuf};

use galtrans::evaluation::{
    band_planes, emit_report, fourier_amplitude_stack, global_flux_difference, noise_sigma_reference,
    FluxDifferenceRecord, FourierStack, NoiseReference,
};
use galtrans::image_core::{read_archive, write_archive, ArchiveManifest, Cutout, SurveyId, SurveySpec};
use galtrans::networks::{
    read_checkpoint, write_checkpoint, AmplitudeMode, CheckpointExtras, Direction, Dtype, ModelBundle, NoiseSeeds,
    Role,
};
use galtrans::synthetic::build_dataset;
use galtrans::trainer::{
    advance, init_step_one, init_step_two, init_variant, read_loss_log, run_variant, translate, write_loss_log, Case,
    CheckpointState, LossRecord, Phase, TrainingData, VariantSpec,
};
use galtrans::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::RunConfig;
use crate::{Command, DirectionArg};

pub const DATA_DIR: &str = "data";
pub const STATE_FILE: &str = "state.ckpt";
pub const MODEL_FILE: &str = "model.ckpt";
pub const LOSS_FILE: &str = "losses.csv";
pub const CONFIG_FILE: &str = "config.json";
pub const SUMMARY_FILE: &str = "summary.json";

// RNG streams of the inference-time noise draws, apart from training streams.
const TRANSLATE_STREAM: u64 = 0x20;
const EVALUATE_STREAM: u64 = 0x30;
const REFERENCE_STREAM: u64 = 0x40;

/// Directory of a training subcommand inside the run directory.
pub fn stage_dir(run_dir: &Path, command: &Command) -> PathBuf {
    match command {
        Command::GenData => run_dir.join(DATA_DIR),
        Command::TrainStep1 { .. } => run_dir.join("step1"),
        Command::TrainStep2 { .. } => run_dir.join("step2"),
        Command::TrainVariant { case, .. } => run_dir.join(format!("variant-{case}")),
        Command::Translate { .. } => run_dir.join("translate"),
        Command::Evaluate { .. } => run_dir.join("evaluation"),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn load_data(config: &RunConfig) -> Result<TrainingData> {
    let dir = config.run_dir.join(DATA_DIR);
    let data = TrainingData::from_archives(&dir.join("x.gxc"), &dir.join("y.gxc"))?;
    if data.survey_x != config.dataset.survey_x || data.survey_y != config.dataset.survey_y {
        return Err(Error::ContractViolation(format!(
            "archives in {} were generated for different surveys than the config names",
            dir.display()
        )));
    }
    Ok(data)
}

/// Run one subcommand; all outputs land under `config.run_dir`.
pub fn dispatch(command: &Command, config: &RunConfig) -> Result<()> {
    config.validate()?;
    let out = stage_dir(&config.run_dir, command);
    match command {
        Command::GenData => gen_data(config, &out),
        Command::TrainStep1 { resume } => train(config, &out, *resume, Phase::StepOne, |data| {
            init_step_one(&config.train, data)
        }),
        Command::TrainStep2 { resume } => {
            let step_one = config.run_dir.join("step1").join(STATE_FILE);
            train(config, &out, *resume, Phase::StepTwo, |data| {
                let (bundle, _, _) = read_checkpoint(&step_one)?;
                init_step_two(&config.train, data, &bundle)
            })
        }
        Command::TrainVariant { case, resume } => {
            let spec = VariantSpec::for_case(*case);
            if *case == Case::Full {
                if *resume {
                    return Err(Error::Config(
                        "the full model resumes through train-step1 and train-step2".into(),
                    ));
                }
                return train_full(config, &out, spec);
            }
            train(config, &out, *resume, Phase::Variant(spec), |data| {
                init_variant(spec, &config.train, data)
            })
        }
        Command::Translate {
            direction,
            input,
            checkpoint,
            output,
            noise,
        } => translate_archive(config, *direction, input.as_deref(), checkpoint.as_deref(), output, *noise, &out),
        Command::Evaluate { checkpoint, output } => {
            evaluate(config, checkpoint.as_deref(), output.as_deref().unwrap_or(&out))
        }
    }
}

fn gen_data(config: &RunConfig, out: &Path) -> Result<()> {
    let dataset = build_dataset(&config.dataset)?;
    dataset.write(out)?;
    write_json(&out.join(CONFIG_FILE), config)
}

fn save_stage(config: &RunConfig, out: &Path, state: &CheckpointState, log: &[LossRecord]) -> Result<()> {
    state.save(&out.join(STATE_FILE))?;
    write_checkpoint(&out.join(MODEL_FILE), &state.bundle, Dtype::F32, &CheckpointExtras::default())?;
    write_loss_log(&out.join(LOSS_FILE), log)?;
    write_json(&out.join(CONFIG_FILE), config)
}

fn train(
    config: &RunConfig,
    out: &Path,
    resume: bool,
    phase: Phase,
    init: impl FnOnce(&TrainingData) -> Result<CheckpointState>,
) -> Result<()> {
    let data = load_data(config)?;
    create_dir(out)?;
    let (mut state, mut log) = if resume {
        let state = CheckpointState::load(&out.join(STATE_FILE))?;
        if state.phase != phase {
            return Err(Error::ContractViolation(format!(
                "{} holds a {:?} state, not {phase:?}",
                out.display(),
                state.phase
            )));
        }
        let mut log = read_loss_log(&out.join(LOSS_FILE))?;
        log.retain(|r| r.iteration < state.iteration);
        (state, log)
    } else {
        (init(&data)?, Vec::new())
    };
    advance(&mut state, &config.train, &data, config.train.iterations, &mut log)?;
    save_stage(config, out, &state, &log)
}

fn train_full(config: &RunConfig, out: &Path, spec: VariantSpec) -> Result<()> {
    let data = load_data(config)?;
    create_dir(out)?;
    let outcome = run_variant(spec, &config.train, &data)?;
    save_stage(config, out, &outcome.state, &outcome.log)
}

fn default_checkpoint(config: &RunConfig) -> PathBuf {
    config.run_dir.join("step2").join(STATE_FILE)
}

fn target_survey(config: &RunConfig, direction: Direction) -> &SurveySpec {
    match direction.target() {
        SurveyId::X => &config.dataset.survey_x,
        SurveyId::Y => &config.dataset.survey_y,
    }
}

fn noise_role(direction: Direction) -> Role {
    match direction {
        Direction::XToY => Role::NeY,
        Direction::YToX => Role::NeX,
    }
}

fn direction_label(direction: Direction) -> &'static str {
    match direction {
        Direction::XToY => "x_to_y",
        Direction::YToX => "y_to_x",
    }
}

/// Translate `sources` in order; noise seeds come from one stream so the
/// output is fixed by the seed.
fn translate_all(
    bundle: &ModelBundle,
    sources: &[&Cutout],
    direction: Direction,
    size: usize,
    noise: bool,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Cutout>> {
    let noise = noise && bundle.noise_emulator(noise_role(direction)).is_some();
    sources
        .iter()
        .map(|c| {
            let seeds = if noise {
                Some(NoiseSeeds::draw(rng, 1, c.num_bands(), size)?)
            } else {
                None
            };
            translate(bundle, c, direction, seeds.as_ref())
        })
        .collect()
}

fn translate_archive(
    config: &RunConfig,
    direction: DirectionArg,
    input: Option<&Path>,
    checkpoint: Option<&Path>,
    output: &Option<PathBuf>,
    noise: bool,
    out: &Path,
) -> Result<()> {
    let direction = Direction::from(direction);
    let source_name = match direction.source() {
        SurveyId::X => "x.gxc",
        SurveyId::Y => "y.gxc",
    };
    let input = input.map(Path::to_path_buf).unwrap_or_else(|| config.run_dir.join(DATA_DIR).join(source_name));
    let checkpoint = checkpoint.map(Path::to_path_buf).unwrap_or_else(|| default_checkpoint(config));
    let (cutouts, _) = read_archive(&input)?;
    let (bundle, _, _) = read_checkpoint(&checkpoint)?;
    let target = target_survey(config, direction);
    let mut rng = ChaCha8Rng::seed_from_u64(config.train.seed);
    rng.set_stream(TRANSLATE_STREAM);
    let sources: Vec<&Cutout> = cutouts.iter().collect();
    let translated = translate_all(&bundle, &sources, direction, target.image_size, noise, &mut rng)?;
    let path = match output {
        Some(p) => p.clone(),
        None => {
            create_dir(out)?;
            out.join(format!("{}.gxc", direction_label(direction)))
        }
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let manifest = ArchiveManifest::for_cutouts(direction.target(), target.clone(), &translated);
    write_archive(&translated, &manifest, &path)
}

#[derive(Serialize)]
struct BandSummary {
    band: String,
    median_sum_abs_diff: f64,
    sigma: Option<f64>,
    sqrt2_sigma: Option<f64>,
    fourier_relative_l1: f64,
    real_max_to_median: f64,
    translated_max_to_median: f64,
}

#[derive(Serialize)]
struct DirectionSummary {
    direction: &'static str,
    pairs: usize,
    with_noise: bool,
    bands: Vec<BandSummary>,
}

#[derive(Serialize)]
struct Summary {
    checkpoint: String,
    directions: Vec<DirectionSummary>,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn evaluate(config: &RunConfig, checkpoint: Option<&Path>, out: &Path) -> Result<()> {
    let data = load_data(config)?;
    if data.test_pairs.is_empty() {
        return Err(Error::EmptyInput("the data archives hold no test pairs".into()));
    }
    let checkpoint = checkpoint.map(Path::to_path_buf).unwrap_or_else(|| default_checkpoint(config));
    let (bundle, _, _) = read_checkpoint(&checkpoint)?;
    let opts = &config.evaluation;
    let mut rng = ChaCha8Rng::seed_from_u64(config.train.seed);
    rng.set_stream(EVALUATE_STREAM);
    create_dir(out)?;

    let mut directions = Vec::new();
    for direction in [Direction::XToY, Direction::YToX] {
        let gen_role = match direction {
            Direction::XToY => Role::GenXy,
            Direction::YToX => Role::GenYx,
        };
        if bundle.generator(gen_role).is_none() {
            continue;
        }
        let target = target_survey(config, direction);
        let (sources, reals): (Vec<&Cutout>, Vec<&Cutout>) = data
            .test_pairs
            .iter()
            .map(|(x, y)| match direction {
                Direction::XToY => (x, y),
                Direction::YToX => (y, x),
            })
            .unzip();
        let ne = bundle.noise_emulator(noise_role(direction));
        let with_noise = opts.with_noise && ne.is_some();
        let translated = translate_all(&bundle, &sources, direction, target.image_size, with_noise, &mut rng)?;

        let mut records: Vec<FluxDifferenceRecord> = Vec::new();
        for (real, fake) in reals.iter().zip(&translated) {
            records.extend(global_flux_difference(real, fake, &target.band_names)?);
        }
        let references: Vec<NoiseReference> = match ne {
            Some(ne) => noise_sigma_reference(
                ne,
                &target.band_names,
                opts.noise_samples,
                target.image_size,
                AmplitudeMode::Learned,
                config.train.seed ^ REFERENCE_STREAM,
            )?,
            None => Vec::new(),
        };
        let real_owned: Vec<Cutout> = reals.iter().map(|c| (*c).clone()).collect();
        let mut stacks: Vec<(String, FourierStack)> = Vec::new();
        let mut bands = Vec::new();
        for (p, band) in target.band_names.iter().enumerate() {
            let real = fourier_amplitude_stack(&band_planes(&real_owned, p), &opts.high_pass)?;
            let fake = fourier_amplitude_stack(&band_planes(&translated, p), &opts.high_pass)?;
            let mut diffs: Vec<f64> = records.iter().filter(|r| &r.band == band).map(|r| r.sum_abs_diff).collect();
            let reference = references.iter().find(|r| &r.band == band);
            bands.push(BandSummary {
                band: band.clone(),
                median_sum_abs_diff: median(&mut diffs),
                sigma: reference.map(|r| r.sigma),
                sqrt2_sigma: reference.map(|r| r.sqrt2_sigma),
                fourier_relative_l1: fake.relative_l1(&real)?,
                real_max_to_median: real.max_to_median(),
                translated_max_to_median: fake.max_to_median(),
            });
            stacks.push((format!("real_{band}"), real.labelled(format!("real {band}"))));
            stacks.push((format!("translated_{band}"), fake.labelled(format!("translated {band}"))));
        }
        let label = direction_label(direction);
        emit_report(&records, &stacks, &references, &out.join(label))?;
        directions.push(DirectionSummary {
            direction: label,
            pairs: translated.len(),
            with_noise,
            bands,
        });
    }
    if directions.is_empty() {
        return Err(Error::Config(format!("{} holds no generators", checkpoint.display())));
    }
    write_json(
        &out.join(SUMMARY_FILE),
        &Summary {
            checkpoint: checkpoint.display().to_string(),
            directions,
        },
    )?;
    write_json(&out.join(CONFIG_FILE), config)
}
