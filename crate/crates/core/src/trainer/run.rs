use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::data::{sample_batch, sample_pairs, TrainingData};
use super::log::LossRecord;
use super::optim::{clip_gradients, AdamState};
use super::state::{CheckpointState, Phase};
use super::variant::{Case, VariantSpec};
use super::{lr_at, TrainConfig};
use crate::autodiff::{Graph, Var};
use crate::error::{Error, Result};
use crate::image_core::{regrid_plane, Cutout, Plane, SurveyId};
use crate::losses::graph as lg;
use crate::networks::{
    AmplitudeMode, Direction, ModelBundle, NetworkConfig, NoiseSeeds, Role,
};
use crate::tensor::Tensor;

/// Final state of a run plus its loss log.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub state: CheckpointState,
    pub log: Vec<LossRecord>,
}

const STEP_ONE_ROLES: [Role; 6] = [Role::AeX, Role::AeY, Role::NeX, Role::NeY, Role::DiscX, Role::DiscY];
const STEP_TWO_ROLES: [Role; 2] = [Role::GenXy, Role::GenYx];

fn phase_stream(phase: &Phase) -> u64 {
    match phase {
        Phase::StepOne => 1,
        Phase::StepTwo => 2,
        Phase::Variant(_) => 3,
    }
}

fn fresh_state(phase: Phase, bundle: ModelBundle, trainable: &[Role], seed: u64) -> Result<CheckpointState> {
    let optimizers = trainable
        .iter()
        .map(|&r| Ok((r, AdamState::new(bundle.require(r)?.params()))))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(phase_stream(&phase));
    Ok(CheckpointState {
        phase,
        bundle,
        optimizers,
        iteration: 0,
        rng,
    })
}

/// Fresh Step-One state: autoencoders, noise emulators and discriminators.
pub fn init_step_one(config: &TrainConfig, data: &TrainingData) -> Result<CheckpointState> {
    config.validate()?;
    let bundle = ModelBundle::initialize(
        &config.network,
        &data.survey_x,
        &data.survey_y,
        &STEP_ONE_ROLES,
        config.seed,
    )?;
    fresh_state(Phase::StepOne, bundle, &STEP_ONE_ROLES, config.seed)
}

/// Fresh Step-Two state: new generators next to the trained noise emulators.
pub fn init_step_two(
    config: &TrainConfig,
    data: &TrainingData,
    step_one: &ModelBundle,
) -> Result<CheckpointState> {
    config.validate()?;
    let mut bundle = ModelBundle::initialize(
        &config.network,
        &data.survey_x,
        &data.survey_y,
        &STEP_TWO_ROLES,
        config.seed,
    )?;
    for role in [Role::NeX, Role::NeY] {
        bundle.insert(role, step_one.require(role)?.clone());
    }
    fresh_state(Phase::StepTwo, bundle, &STEP_TWO_ROLES, config.seed)
}

fn variant_roles(spec: &VariantSpec) -> Vec<Role> {
    let mut roles = vec![Role::GenXy, Role::GenYx, Role::DiscX, Role::DiscY];
    if spec.noise_emulator {
        roles.extend([Role::NeX, Role::NeY]);
    }
    roles.sort();
    roles
}

/// Fresh single-step variant state. The full model is two-step and has no
/// single-step state.
pub fn init_variant(spec: VariantSpec, config: &TrainConfig, data: &TrainingData) -> Result<CheckpointState> {
    spec.validate()?;
    config.validate()?;
    if spec.autoencoder_step {
        return Err(Error::Config("the full model trains in two steps".into()));
    }
    let network = NetworkConfig {
        upsampler: spec.upsampler,
        ..config.network.clone()
    };
    let roles = variant_roles(&spec);
    let bundle = ModelBundle::initialize(&network, &data.survey_x, &data.survey_y, &roles, config.seed)?;
    fresh_state(Phase::Variant(spec), bundle, &roles, config.seed)
}

/// Graph leaves of every bound network.
struct Bound(Vec<(Role, Vec<Var>)>);

impl Bound {
    fn get(&self, role: Role) -> &[Var] {
        &self
            .0
            .iter()
            .find(|(r, _)| *r == role)
            .unwrap_or_else(|| panic!("{role:?} not bound"))
            .1
    }
}

struct Objective {
    total: Var,
    parts: Vec<(&'static str, Var)>,
}

struct Update {
    grads: Vec<(Role, Vec<Tensor>)>,
    values: Vec<(&'static str, f64)>,
}

fn compute_update(
    bundle: &ModelBundle,
    trainable: &[Role],
    frozen: &[Role],
    build: impl FnOnce(&mut Graph, &Bound) -> Objective,
) -> Result<Update> {
    let mut g = Graph::new();
    let mut bound = Vec::new();
    for &r in trainable {
        bound.push((r, bundle.require(r)?.params().bind(&mut g, true)));
    }
    for &r in frozen {
        bound.push((r, bundle.require(r)?.params().bind(&mut g, false)));
    }
    let bound = Bound(bound);
    let obj = build(&mut g, &bound);
    let mut values = Vec::with_capacity(obj.parts.len());
    for (name, v) in &obj.parts {
        let x = g.value(*v).item();
        if !x.is_finite() {
            return Err(Error::Divergence(format!("loss {name} became {x}")));
        }
        values.push((*name, x));
    }
    if !g.value(obj.total).item().is_finite() {
        return Err(Error::Divergence("total objective is not finite".into()));
    }
    let grads = g.backward(obj.total);
    let grads = trainable
        .iter()
        .map(|&r| {
            let params = bundle.require(r).expect("bound above").params();
            (r, params.collect_grads(&grads, bound.get(r)))
        })
        .collect();
    Ok(Update { grads, values })
}

/// Clip (jointly, or per network) and take one Adam step on every role.
fn apply_update(
    state: &mut CheckpointState,
    update: Update,
    config: &TrainConfig,
    joint_clip: bool,
    log: &mut Vec<LossRecord>,
) -> Result<()> {
    let lr = lr_at(state.iteration, config);
    let mut grads = update.grads;
    if joint_clip {
        let mut all: Vec<&mut Tensor> = grads.iter_mut().flat_map(|(_, g)| g.iter_mut()).collect();
        clip_gradients(&mut all, config.clip_norm)?;
    } else {
        for (_, g) in grads.iter_mut() {
            let mut refs: Vec<&mut Tensor> = g.iter_mut().collect();
            clip_gradients(&mut refs, config.clip_norm)?;
        }
    }
    for (role, g) in grads {
        let mut opt = std::mem::replace(
            state.optimizer_mut(role),
            AdamState {
                steps: 0,
                first: Vec::new(),
                second: Vec::new(),
            },
        );
        let net = state.bundle.get_mut(role).expect("trainable role present");
        opt.step(net.params_mut(), &g, lr, &config.adam);
        *state.optimizer_mut(role) = opt;
    }
    for (name, value) in update.values {
        log.push(LossRecord {
            iteration: state.iteration,
            loss: name.to_owned(),
            value,
        });
    }
    Ok(())
}

fn ae_forward(g: &mut Graph, bundle: &ModelBundle, b: &Bound, role: Role, x: Var) -> Var {
    bundle.autoencoder(role).expect("autoencoder").forward(g, b.get(role), x)
}

fn gen_forward(g: &mut Graph, bundle: &ModelBundle, b: &Bound, role: Role, x: Var) -> Var {
    bundle.generator(role).expect("generator").forward(g, b.get(role), x)
}

fn disc_forward(g: &mut Graph, bundle: &ModelBundle, b: &Bound, role: Role, x: Var) -> Var {
    bundle.discriminator(role).expect("discriminator").forward(g, b.get(role), x)
}

fn ne_forward(g: &mut Graph, bundle: &ModelBundle, b: &Bound, role: Role, seeds: &NoiseSeeds) -> Var {
    bundle
        .noise_emulator(role)
        .expect("noise emulator")
        .forward(g, b.get(role), seeds, AmplitudeMode::Learned)
}

fn plain<F>(bundle: &ModelBundle, roles: &[Role], build: F) -> Tensor
where
    F: FnOnce(&mut Graph, &Bound) -> Var,
{
    let mut g = Graph::new();
    let bound = Bound(
        roles
            .iter()
            .map(|&r| (r, bundle.require(r).expect("present").params().bind(&mut g, false)))
            .collect(),
    );
    let out = build(&mut g, &bound);
    g.value(out).clone()
}

fn bands(data: &TrainingData) -> usize {
    data.survey_x.num_bands()
}

fn step_one_iteration(
    state: &mut CheckpointState,
    config: &TrainConfig,
    data: &TrainingData,
    log: &mut Vec<LossRecord>,
) -> Result<()> {
    let (px, py) = (data.pooled(SurveyId::X), data.pooled(SurveyId::Y));
    let xb = sample_batch(&mut state.rng, &px, config.batch.unpaired_x, config.augment)?;
    let yb = sample_batch(&mut state.rng, &py, config.batch.unpaired_y, config.augment)?;
    autoencoder_phase(state, config, &xb, &yb, log)?;
    adversarial_phase(state, config, data, &xb, &yb, log)
}

/// (i) autoencoders on the original images.
fn autoencoder_phase(
    state: &mut CheckpointState,
    config: &TrainConfig,
    xb: &Tensor,
    yb: &Tensor,
    log: &mut Vec<LossRecord>,
) -> Result<()> {
    let bundle = &state.bundle;
    let update = compute_update(bundle, &[Role::AeX, Role::AeY], &[], |g, b| {
        let (x, y) = (g.constant(xb.clone()), g.constant(yb.clone()));
        let ax = ae_forward(g, bundle, b, Role::AeX, x);
        let ay = ae_forward(g, bundle, b, Role::AeY, y);
        let total = lg::auto_loss(g, ax, x, ay, y);
        Objective {
            total,
            parts: vec![("auto", total)],
        }
    })?;
    apply_update(state, update, config, true, log)
}

/// (ii) autoencoders frozen; discriminators and noise emulators alternate.
fn adversarial_phase(
    state: &mut CheckpointState,
    config: &TrainConfig,
    data: &TrainingData,
    xb: &Tensor,
    yb: &Tensor,
    log: &mut Vec<LossRecord>,
) -> Result<()> {
    let bundle = &state.bundle;
    let ax = plain(bundle, &[Role::AeX], |g, b| {
        let x = g.constant(xb.clone());
        ae_forward(g, bundle, b, Role::AeX, x)
    });
    let ay = plain(bundle, &[Role::AeY], |g, b| {
        let y = g.constant(yb.clone());
        ae_forward(g, bundle, b, Role::AeY, y)
    });
    let (nx, ny, sx, sy) = (xb.shape()[0], yb.shape()[0], data.survey_x.image_size, data.survey_y.image_size);
    let p = bands(data);

    for _ in 0..config.discriminator_steps {
        let seeds_x = NoiseSeeds::draw(&mut state.rng, nx, p, sx)?;
        let seeds_y = NoiseSeeds::draw(&mut state.rng, ny, p, sy)?;
        let bundle = &state.bundle;
        let noise_x = plain(bundle, &[Role::NeX], |g, b| ne_forward(g, bundle, b, Role::NeX, &seeds_x));
        let noise_y = plain(bundle, &[Role::NeY], |g, b| ne_forward(g, bundle, b, Role::NeY, &seeds_y));
        let fake_x = ax.zip_map(&noise_x, |a, n| a + n);
        let fake_y = ay.zip_map(&noise_y, |a, n| a + n);
        let update = compute_update(bundle, &[Role::DiscX, Role::DiscY], &[], |g, b| {
            let (rx, fx) = (g.constant(xb.clone()), g.constant(fake_x));
            let (ry, fy) = (g.constant(yb.clone()), g.constant(fake_y));
            let drx = disc_forward(g, bundle, b, Role::DiscX, rx);
            let dfx = disc_forward(g, bundle, b, Role::DiscX, fx);
            let dry = disc_forward(g, bundle, b, Role::DiscY, ry);
            let dfy = disc_forward(g, bundle, b, Role::DiscY, fy);
            let total = lg::adv_d_loss(g, drx, dfx, dry, dfy);
            Objective {
                total,
                parts: vec![("adv_d", total)],
            }
        })?;
        apply_update(state, update, config, true, log)?;
    }

    for _ in 0..config.noise_steps {
        let seeds_x = NoiseSeeds::draw(&mut state.rng, nx, p, sx)?;
        let seeds_y = NoiseSeeds::draw(&mut state.rng, ny, p, sy)?;
        let bundle = &state.bundle;
        let update = compute_update(bundle, &[Role::NeX, Role::NeY], &[Role::DiscX, Role::DiscY], |g, b| {
            let (bx, by) = (g.constant(ax.clone()), g.constant(ay.clone()));
            let nxv = ne_forward(g, bundle, b, Role::NeX, &seeds_x);
            let nyv = ne_forward(g, bundle, b, Role::NeY, &seeds_y);
            let fx = g.add(bx, nxv);
            let fy = g.add(by, nyv);
            let dfx = disc_forward(g, bundle, b, Role::DiscX, fx);
            let dfy = disc_forward(g, bundle, b, Role::DiscY, fy);
            let total = lg::adv_ne_loss(g, dfx, dfy);
            Objective {
                total,
                parts: vec![("adv_ne", total)],
            }
        })?;
        apply_update(state, update, config, true, log)?;
    }
    Ok(())
}

fn step_two_iteration(
    state: &mut CheckpointState,
    config: &TrainConfig,
    data: &TrainingData,
    log: &mut Vec<LossRecord>,
) -> Result<()> {
    let (xp, yp) = sample_pairs(&mut state.rng, &data.pairs, config.batch.pairs, config.augment)?;
    let xu = sample_batch(&mut state.rng, &data.unpaired(SurveyId::X), config.batch.unpaired_x, config.augment)?;
    let yu = sample_batch(&mut state.rng, &data.unpaired(SurveyId::Y), config.batch.unpaired_y, config.augment)?;
    let p = bands(data);
    let seeds_y = NoiseSeeds::draw(&mut state.rng, xu.shape()[0], p, data.survey_y.image_size)?;
    let seeds_x = NoiseSeeds::draw(&mut state.rng, yu.shape()[0], p, data.survey_x.image_size)?;
    let bundle = &state.bundle;
    let update = compute_update(bundle, &STEP_TWO_ROLES, &[Role::NeX, Role::NeY], |g, b| {
        let (xpv, ypv) = (g.constant(xp), g.constant(yp));
        let gxy_p = gen_forward(g, bundle, b, Role::GenXy, xpv);
        let gyx_p = gen_forward(g, bundle, b, Role::GenYx, ypv);
        let id = lg::identity_loss(g, gxy_p, ypv, gyx_p, xpv);

        let (xuv, yuv) = (g.constant(xu), g.constant(yu));
        let ty = gen_forward(g, bundle, b, Role::GenXy, xuv);
        let ny = ne_forward(g, bundle, b, Role::NeY, &seeds_y);
        let fy = g.add(ty, ny);
        let x_cyc = gen_forward(g, bundle, b, Role::GenYx, fy);
        let tx = gen_forward(g, bundle, b, Role::GenYx, yuv);
        let nx = ne_forward(g, bundle, b, Role::NeX, &seeds_x);
        let fx = g.add(tx, nx);
        let y_cyc = gen_forward(g, bundle, b, Role::GenXy, fx);
        let cyc = lg::cycle_loss(g, x_cyc, xuv, y_cyc, yuv);
        let total = g.add(id, cyc);
        Objective {
            total,
            parts: vec![("identity", id), ("cycle", cyc), ("step2_total", total)],
        }
    })?;
    apply_update(state, update, config, true, log)
}

fn regrid_batch(t: &Tensor, size: usize) -> Result<Tensor> {
    let (n, c, h, w) = t.dims4();
    let mut data = Vec::with_capacity(n * c * size * size);
    for i in 0..n {
        for ch in 0..c {
            let plane = Plane::new(h, w, t.plane(i, ch).to_vec())?;
            data.extend(regrid_plane(&plane, size)?.into_data());
        }
    }
    Ok(Tensor::new(&[n, c, size, size], data))
}

fn variant_iteration(
    spec: &VariantSpec,
    state: &mut CheckpointState,
    config: &TrainConfig,
    data: &TrainingData,
    log: &mut Vec<LossRecord>,
) -> Result<()> {
    let pairs = if spec.identity {
        Some(sample_pairs(&mut state.rng, &data.pairs, config.batch.pairs, config.augment)?)
    } else {
        None
    };
    let xu = sample_batch(&mut state.rng, &data.unpaired(SurveyId::X), config.batch.unpaired_x, config.augment)?;
    let yu = sample_batch(&mut state.rng, &data.unpaired(SurveyId::Y), config.batch.unpaired_y, config.augment)?;
    let p = bands(data);
    let (sx, sy) = (data.survey_x.image_size, data.survey_y.image_size);
    let (nx, ny) = (xu.shape()[0], yu.shape()[0]);
    let draw = |rng: &mut ChaCha8Rng| -> Result<Option<(NoiseSeeds, NoiseSeeds)>> {
        if spec.noise_emulator {
            Ok(Some((NoiseSeeds::draw(rng, nx, p, sy)?, NoiseSeeds::draw(rng, ny, p, sx)?)))
        } else {
            Ok(None)
        }
    };
    let seeds = draw(&mut state.rng)?;
    let pid_targets = if spec.pseudo_identity {
        Some((regrid_batch(&xu, sy)?, regrid_batch(&yu, sx)?))
    } else {
        None
    };
    let ne_roles: &[Role] = if spec.noise_emulator { &[Role::NeX, Role::NeY] } else { &[] };
    let mut frozen = vec![Role::DiscX, Role::DiscY];
    frozen.extend_from_slice(ne_roles);

    // Generators.
    let bundle = &state.bundle;
    let update = compute_update(bundle, &STEP_TWO_ROLES, &frozen, |g, b| {
        let mut parts = Vec::new();
        let mut content: Option<Var> = None;
        let mut add_content = |g: &mut Graph, v: Var| {
            content = Some(match content {
                Some(c) => g.add(c, v),
                None => v,
            });
        };
        if let Some((xp, yp)) = pairs {
            let (xpv, ypv) = (g.constant(xp), g.constant(yp));
            let a = gen_forward(g, bundle, b, Role::GenXy, xpv);
            let c = gen_forward(g, bundle, b, Role::GenYx, ypv);
            let id = lg::identity_loss(g, a, ypv, c, xpv);
            parts.push(("identity", id));
            add_content(g, id);
        }
        let (xuv, yuv) = (g.constant(xu.clone()), g.constant(yu.clone()));
        let ty = gen_forward(g, bundle, b, Role::GenXy, xuv);
        let tx = gen_forward(g, bundle, b, Role::GenYx, yuv);
        if let Some((tx_ref, ty_ref)) = pid_targets {
            let (xr, yr) = (g.constant(tx_ref), g.constant(ty_ref));
            let pid = lg::pseudo_identity_loss(g, ty, xr, tx, yr);
            parts.push(("pseudo_identity", pid));
            add_content(g, pid);
        }
        let (fy, fx) = match &seeds {
            Some((sy_seeds, sx_seeds)) => {
                let ny_v = ne_forward(g, bundle, b, Role::NeY, sy_seeds);
                let nx_v = ne_forward(g, bundle, b, Role::NeX, sx_seeds);
                (g.add(ty, ny_v), g.add(tx, nx_v))
            }
            None => (ty, tx),
        };
        if spec.cycle {
            let x_cyc = gen_forward(g, bundle, b, Role::GenYx, fy);
            let y_cyc = gen_forward(g, bundle, b, Role::GenXy, fx);
            let cyc = lg::cycle_loss(g, x_cyc, xuv, y_cyc, yuv);
            parts.push(("cycle", cyc));
            add_content(g, cyc);
        }
        let content = content.expect("every case has a content loss");
        let total = if spec.case == Case::F {
            content
        } else {
            let dfy = disc_forward(g, bundle, b, Role::DiscY, fy);
            let dfx = disc_forward(g, bundle, b, Role::DiscX, fx);
            let a = lg::fooling_term(g, dfy);
            let c = lg::fooling_term(g, dfx);
            let adv = g.add(a, c);
            parts.push(("adv_g", adv));
            let weighted = g.scale(content, config.content_weight);
            g.add(weighted, adv)
        };
        parts.push(("generator_total", total));
        Objective { total, parts }
    })?;
    apply_update(state, update, config, spec.two_way, log)?;

    // Translations with the updated generators.
    let bundle = &state.bundle;
    let ty = plain(bundle, &[Role::GenXy], |g, b| {
        let x = g.constant(xu.clone());
        gen_forward(g, bundle, b, Role::GenXy, x)
    });
    let tx = plain(bundle, &[Role::GenYx], |g, b| {
        let y = g.constant(yu.clone());
        gen_forward(g, bundle, b, Role::GenYx, y)
    });

    for _ in 0..config.discriminator_steps {
        let seeds = draw(&mut state.rng)?;
        let bundle = &state.bundle;
        let (fy, fx) = match &seeds {
            Some((sy_seeds, sx_seeds)) => {
                let ny_v = plain(bundle, &[Role::NeY], |g, b| ne_forward(g, bundle, b, Role::NeY, sy_seeds));
                let nx_v = plain(bundle, &[Role::NeX], |g, b| ne_forward(g, bundle, b, Role::NeX, sx_seeds));
                (ty.zip_map(&ny_v, |a, n| a + n), tx.zip_map(&nx_v, |a, n| a + n))
            }
            None => (ty.clone(), tx.clone()),
        };
        let update = compute_update(bundle, &[Role::DiscX, Role::DiscY], &[], |g, b| {
            let (rx, fxv) = (g.constant(xu.clone()), g.constant(fx));
            let (ry, fyv) = (g.constant(yu.clone()), g.constant(fy));
            let drx = disc_forward(g, bundle, b, Role::DiscX, rx);
            let dfx = disc_forward(g, bundle, b, Role::DiscX, fxv);
            let dry = disc_forward(g, bundle, b, Role::DiscY, ry);
            let dfy = disc_forward(g, bundle, b, Role::DiscY, fyv);
            let total = lg::adv_d_loss(g, drx, dfx, dry, dfy);
            Objective {
                total,
                parts: vec![("adv_d", total)],
            }
        })?;
        apply_update(state, update, config, spec.two_way, log)?;
    }

    if spec.noise_emulator {
        for _ in 0..config.noise_steps {
            let (sy_seeds, sx_seeds) = draw(&mut state.rng)?.expect("noise emulator enabled");
            let bundle = &state.bundle;
            let update = compute_update(bundle, &[Role::NeX, Role::NeY], &[Role::DiscX, Role::DiscY], |g, b| {
                let (tyv, txv) = (g.constant(ty.clone()), g.constant(tx.clone()));
                let ny_v = ne_forward(g, bundle, b, Role::NeY, &sy_seeds);
                let nx_v = ne_forward(g, bundle, b, Role::NeX, &sx_seeds);
                let fy = g.add(tyv, ny_v);
                let fx = g.add(txv, nx_v);
                let dfx = disc_forward(g, bundle, b, Role::DiscX, fx);
                let dfy = disc_forward(g, bundle, b, Role::DiscY, fy);
                let total = lg::adv_ne_loss(g, dfx, dfy);
                Objective {
                    total,
                    parts: vec![("adv_ne", total)],
                }
            })?;
            apply_update(state, update, config, true, log)?;
        }
    }
    Ok(())
}

/// Continue training until `state.iteration == until`.
pub fn advance(
    state: &mut CheckpointState,
    config: &TrainConfig,
    data: &TrainingData,
    until: usize,
    log: &mut Vec<LossRecord>,
) -> Result<()> {
    config.validate()?;
    while state.iteration < until {
        match state.phase {
            Phase::StepOne => step_one_iteration(state, config, data, log)?,
            Phase::StepTwo => step_two_iteration(state, config, data, log)?,
            Phase::Variant(spec) => variant_iteration(&spec, state, config, data, log)?,
        }
        state.iteration += 1;
    }
    Ok(())
}

/// Step One: autoencoders, then discriminators and noise emulators.
pub fn train_step_one(config: &TrainConfig, data: &TrainingData) -> Result<TrainOutcome> {
    let mut state = init_step_one(config, data)?;
    let mut log = Vec::new();
    advance(&mut state, config, data, config.iterations, &mut log)?;
    Ok(TrainOutcome { state, log })
}

/// Step Two: generators with identity and cycle losses, noise emulators frozen.
pub fn train_step_two(config: &TrainConfig, data: &TrainingData, step_one: &ModelBundle) -> Result<TrainOutcome> {
    let mut state = init_step_two(config, data, step_one)?;
    let mut log = Vec::new();
    advance(&mut state, config, data, config.iterations, &mut log)?;
    Ok(TrainOutcome { state, log })
}

/// Train one case. The full model runs both steps and returns the Step-Two
/// state, whose log also carries the Step-One losses.
pub fn run_variant(spec: VariantSpec, config: &TrainConfig, data: &TrainingData) -> Result<TrainOutcome> {
    spec.validate()?;
    if spec.autoencoder_step {
        let one = train_step_one(config, data)?;
        let mut two = train_step_two(config, data, &one.state.bundle)?;
        let mut log = one.log;
        log.append(&mut two.log);
        return Ok(TrainOutcome { state: two.state, log });
    }
    let mut state = init_variant(spec, config, data)?;
    let mut log = Vec::new();
    advance(&mut state, config, data, config.iterations, &mut log)?;
    Ok(TrainOutcome { state, log })
}

/// Translate one cutout: generator output, plus a noise-emulator sample of
/// the target domain when `seeds` are given.
pub fn translate(
    bundle: &ModelBundle,
    c: &Cutout,
    direction: Direction,
    seeds: Option<&NoiseSeeds>,
) -> Result<Cutout> {
    if c.survey() != direction.source() {
        return Err(Error::ContractViolation(format!(
            "{} is a {:?} cutout but the direction is {direction:?}",
            c.object_id(),
            c.survey()
        )));
    }
    let (gen_role, ne_role) = match direction {
        Direction::XToY => (Role::GenXy, Role::NeY),
        Direction::YToX => (Role::GenYx, Role::NeX),
    };
    let generator = bundle
        .generator(gen_role)
        .ok_or_else(|| Error::Config(format!("checkpoint has no {gen_role:?} generator")))?;
    let out = generator.apply(c)?;
    let Some(seeds) = seeds else {
        return Ok(out);
    };
    let ne = bundle
        .noise_emulator(ne_role)
        .ok_or_else(|| Error::Config(format!("checkpoint has no {ne_role:?} noise emulator")))?;
    if seeds.count() != 1 || seeds.size() != out.size() {
        return Err(Error::Shape(format!(
            "translation needs one seed set of {}px, got {} of {}px",
            out.size(),
            seeds.count(),
            seeds.size()
        )));
    }
    let noise = ne.sample(seeds, AmplitudeMode::Learned)?;
    let bands = out
        .bands()
        .iter()
        .enumerate()
        .map(|(p, band)| {
            let data = band.data().iter().zip(noise.plane(0, p)).map(|(a, n)| a + n).collect();
            Plane::new(band.height(), band.width(), data)
        })
        .collect::<Result<Vec<_>>>()?;
    out.with_bands(bands, out.pixel_scale())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{build_dataset, DatasetConfig};
    use crate::trainer::BatchSizes;

    fn tiny() -> (TrainConfig, TrainingData) {
        let dataset = DatasetConfig {
            paired_train: 3,
            paired_test: 1,
            unpaired_x: 3,
            unpaired_y: 3,
            ..DatasetConfig::desk()
        };
        let data = TrainingData::from_dataset(&build_dataset(&dataset).unwrap()).unwrap();
        let config = TrainConfig {
            batch: BatchSizes {
                unpaired_x: 2,
                unpaired_y: 2,
                pairs: 2,
            },
            ..TrainConfig::desk()
        };
        (config, data)
    }

    #[test]
    fn adversarial_phase_leaves_autoencoders_alone() {
        let (config, data) = tiny();
        let mut state = init_step_one(&config, &data).unwrap();
        let before = state.bundle.clone();
        let px = data.pooled(SurveyId::X);
        let py = data.pooled(SurveyId::Y);
        let xb = sample_batch(&mut state.rng, &px, 2, false).unwrap();
        let yb = sample_batch(&mut state.rng, &py, 2, false).unwrap();
        let mut log = Vec::new();
        adversarial_phase(&mut state, &config, &data, &xb, &yb, &mut log).unwrap();
        for role in [Role::AeX, Role::AeY] {
            assert_eq!(state.bundle.get(role), before.get(role), "{role:?}");
        }
        for role in [Role::DiscX, Role::DiscY, Role::NeX, Role::NeY] {
            let a = state.bundle.get(role).unwrap().params();
            assert!(a.max_abs_diff(before.get(role).unwrap().params()) > 0.0, "{role:?} did not move");
        }
        let names: Vec<&str> = log.iter().map(|r| r.loss.as_str()).collect();
        let mut expected = vec!["adv_d"; config.discriminator_steps];
        expected.extend(std::iter::repeat("adv_ne").take(config.noise_steps));
        assert_eq!(names, expected);
    }

    #[test]
    fn step_two_touches_only_generators() {
        let (config, data) = tiny();
        let one = init_step_one(&config, &data).unwrap();
        let mut state = init_step_two(&config, &data, &one.bundle).unwrap();
        let before = state.bundle.clone();
        let mut log = Vec::new();
        advance(&mut state, &config, &data, 2, &mut log).unwrap();
        for role in [Role::NeX, Role::NeY] {
            assert_eq!(state.bundle.get(role), one.bundle.get(role));
        }
        assert!(state.bundle.get(Role::DiscX).is_none() && state.bundle.get(Role::AeX).is_none());
        for role in STEP_TWO_ROLES {
            let a = state.bundle.get(role).unwrap().params();
            assert!(a.max_abs_diff(before.get(role).unwrap().params()) > 0.0);
        }
    }
}
