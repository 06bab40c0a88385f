use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::discriminator::{Discriminator, DiscriminatorArch};
use super::noise_emulator::{NoiseEmulator, NoiseEmulatorArch};
use super::params::ParamSet;
use super::trunk::{Autoencoder, AutoencoderArch, Direction, Generator, GeneratorArch, Upsampler};
use crate::error::{Error, Result};
use crate::image_core::{SurveyId, SurveySpec};
use crate::tensor::Tensor;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"GXCKPT\0\0";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    AeX,
    AeY,
    GenXy,
    GenYx,
    NeX,
    NeY,
    DiscX,
    DiscY,
}

impl Role {
    pub const ALL: [Role; 8] = [
        Role::AeX,
        Role::AeY,
        Role::GenXy,
        Role::GenYx,
        Role::NeX,
        Role::NeY,
        Role::DiscX,
        Role::DiscY,
    ];

    fn code(self) -> u64 {
        Role::ALL.iter().position(|&r| r == self).expect("listed") as u64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Autoencoder(AutoencoderArch),
    Generator(GeneratorArch),
    NoiseEmulator(NoiseEmulatorArch),
    Discriminator(DiscriminatorArch),
}

/// Channel widths and head sizes of every network family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub autoencoder_widths: Vec<usize>,
    pub generator_widths: Vec<usize>,
    pub discriminator_widths: Vec<usize>,
    pub discriminator_hidden: usize,
    pub noise_hidden: usize,
    pub upsampler: Upsampler,
}

impl NetworkConfig {
    /// Small widths that train in minutes on one core.
    pub fn desk() -> Self {
        Self {
            autoencoder_widths: vec![8, 16, 32],
            generator_widths: vec![8, 16, 32],
            discriminator_widths: vec![8, 16, 16],
            discriminator_hidden: 32,
            noise_hidden: 16,
            upsampler: Upsampler::Nearest,
        }
    }

    pub fn full_width() -> Self {
        Self {
            autoencoder_widths: vec![32, 64, 128],
            generator_widths: vec![32, 64, 128],
            discriminator_widths: vec![16, 32, 64],
            discriminator_hidden: 64,
            noise_hidden: 16,
            upsampler: Upsampler::Nearest,
        }
    }

    pub fn architecture(&self, role: Role, x: &SurveySpec, y: &SurveySpec) -> Architecture {
        let bands = x.num_bands();
        let gen = |direction, scale| {
            Architecture::Generator(GeneratorArch::new(
                direction,
                x.image_size,
                y.image_size,
                scale,
                bands,
                self.generator_widths.clone(),
                self.upsampler,
            ))
        };
        let disc = |survey, s: &SurveySpec| {
            Architecture::Discriminator(DiscriminatorArch::new(
                survey,
                bands,
                s.image_size,
                self.discriminator_widths.clone(),
                self.discriminator_hidden,
            ))
        };
        let ne = || {
            let mut a = NoiseEmulatorArch::new(bands);
            a.hidden = self.noise_hidden;
            Architecture::NoiseEmulator(a)
        };
        match role {
            Role::AeX => Architecture::Autoencoder(AutoencoderArch::new(
                SurveyId::X,
                x.image_size,
                bands,
                self.autoencoder_widths.clone(),
            )),
            Role::AeY => Architecture::Autoencoder(AutoencoderArch::new(
                SurveyId::Y,
                y.image_size,
                bands,
                self.autoencoder_widths.clone(),
            )),
            Role::GenXy => gen(Direction::XToY, y.pixel_scale),
            Role::GenYx => gen(Direction::YToX, x.pixel_scale),
            Role::NeX | Role::NeY => ne(),
            Role::DiscX => disc(SurveyId::X, x),
            Role::DiscY => disc(SurveyId::Y, y),
        }
    }
}

/// Any member of the bundle.
#[derive(Clone, Debug, PartialEq)]
pub enum Network {
    Autoencoder(Autoencoder),
    Generator(Generator),
    NoiseEmulator(NoiseEmulator),
    Discriminator(Discriminator),
}

impl Network {
    pub fn initialize(arch: Architecture, rng: &mut ChaCha8Rng) -> Result<Self> {
        Ok(match arch {
            Architecture::Autoencoder(a) => Network::Autoencoder(Autoencoder::new(a, rng)?),
            Architecture::Generator(a) => Network::Generator(Generator::new(a, rng)?),
            Architecture::NoiseEmulator(a) => Network::NoiseEmulator(NoiseEmulator::new(a, rng)?),
            Architecture::Discriminator(a) => Network::Discriminator(Discriminator::new(a, rng)?),
        })
    }

    fn from_tensors(arch: Architecture, tensors: Vec<Tensor>) -> Result<Self> {
        Ok(match arch {
            Architecture::Autoencoder(a) => Network::Autoencoder(Autoencoder::from_tensors(a, tensors)?),
            Architecture::Generator(a) => Network::Generator(Generator::from_tensors(a, tensors)?),
            Architecture::NoiseEmulator(a) => {
                Network::NoiseEmulator(NoiseEmulator::from_tensors(a, tensors)?)
            }
            Architecture::Discriminator(a) => {
                Network::Discriminator(Discriminator::from_tensors(a, tensors)?)
            }
        })
    }

    pub fn architecture(&self) -> Architecture {
        match self {
            Network::Autoencoder(n) => Architecture::Autoencoder(n.arch.clone()),
            Network::Generator(n) => Architecture::Generator(n.arch.clone()),
            Network::NoiseEmulator(n) => Architecture::NoiseEmulator(n.arch.clone()),
            Network::Discriminator(n) => Architecture::Discriminator(n.arch.clone()),
        }
    }

    pub fn params(&self) -> &ParamSet {
        match self {
            Network::Autoencoder(n) => &n.params,
            Network::Generator(n) => &n.params,
            Network::NoiseEmulator(n) => &n.params,
            Network::Discriminator(n) => &n.params,
        }
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        match self {
            Network::Autoencoder(n) => &mut n.params,
            Network::Generator(n) => &mut n.params,
            Network::NoiseEmulator(n) => &mut n.params,
            Network::Discriminator(n) => &mut n.params,
        }
    }
}

/// The networks of a run, keyed by role; absent roles are simply missing.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelBundle {
    nets: Vec<(Role, Network)>,
}

macro_rules! typed_access {
    ($get:ident, $get_mut:ident, $variant:ident, $ty:ty) => {
        pub fn $get(&self, role: Role) -> Option<&$ty> {
            match self.get(role) {
                Some(Network::$variant(n)) => Some(n),
                _ => None,
            }
        }

        pub fn $get_mut(&mut self, role: Role) -> Option<&mut $ty> {
            match self.get_mut(role) {
                Some(Network::$variant(n)) => Some(n),
                _ => None,
            }
        }
    };
}

impl ModelBundle {
    /// Fresh networks for `roles`; each role draws from its own stream of
    /// `seed`.
    pub fn initialize(
        config: &NetworkConfig,
        x: &SurveySpec,
        y: &SurveySpec,
        roles: &[Role],
        seed: u64,
    ) -> Result<Self> {
        let mut bundle = ModelBundle::default();
        for &role in roles {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(0x1000 + role.code());
            bundle.insert(role, Network::initialize(config.architecture(role, x, y), &mut rng)?);
        }
        Ok(bundle)
    }

    pub fn insert(&mut self, role: Role, net: Network) {
        match self.nets.iter_mut().find(|(r, _)| *r == role) {
            Some(slot) => slot.1 = net,
            None => {
                self.nets.push((role, net));
                self.nets.sort_by_key(|(r, _)| *r);
            }
        }
    }

    pub fn remove(&mut self, role: Role) -> Option<Network> {
        let i = self.nets.iter().position(|(r, _)| *r == role)?;
        Some(self.nets.remove(i).1)
    }

    pub fn get(&self, role: Role) -> Option<&Network> {
        self.nets.iter().find(|(r, _)| *r == role).map(|(_, n)| n)
    }

    pub fn get_mut(&mut self, role: Role) -> Option<&mut Network> {
        self.nets.iter_mut().find(|(r, _)| *r == role).map(|(_, n)| n)
    }

    pub fn roles(&self) -> Vec<Role> {
        self.nets.iter().map(|(r, _)| *r).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Role, &Network)> {
        self.nets.iter().map(|(r, n)| (*r, n))
    }

    typed_access!(autoencoder, autoencoder_mut, Autoencoder, Autoencoder);
    typed_access!(generator, generator_mut, Generator, Generator);
    typed_access!(noise_emulator, noise_emulator_mut, NoiseEmulator, NoiseEmulator);
    typed_access!(discriminator, discriminator_mut, Discriminator, Discriminator);

    /// Look up a role that the caller requires.
    pub fn require(&self, role: Role) -> Result<&Network> {
        self.get(role)
            .ok_or_else(|| Error::Config(format!("checkpoint has no {role:?} network")))
    }

    pub fn all_finite(&self) -> bool {
        self.nets.iter().all(|(_, n)| n.params().all_finite())
    }

    /// Largest parameter difference; infinite when the role sets differ.
    pub fn max_abs_diff(&self, other: &ModelBundle) -> f64 {
        if self.roles() != other.roles() {
            return f64::INFINITY;
        }
        self.nets
            .iter()
            .zip(&other.nets)
            .map(|((_, a), (_, b))| {
                if a.architecture() != b.architecture() {
                    f64::INFINITY
                } else {
                    a.params().max_abs_diff(b.params())
                }
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    fn width(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct NetworkEntry {
    role: Role,
    architecture: Architecture,
    params: Vec<TensorEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    dtype: Dtype,
    networks: Vec<NetworkEntry>,
    #[serde(default)]
    extra: Vec<TensorEntry>,
    #[serde(default)]
    state: Option<serde_json::Value>,
}

/// Contents of a checkpoint beyond the networks themselves.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CheckpointExtras {
    pub tensors: Vec<(String, Tensor)>,
    pub state: Option<serde_json::Value>,
}

/// Write `bundle` (plus optional extras) atomically: the file is written
/// beside `path` and renamed into place.
///
/// Layout: 8-byte magic, `u32` version, `u64` header length, UTF-8 JSON
/// header, then every tensor little-endian in header order.
pub fn write_checkpoint(
    path: &Path,
    bundle: &ModelBundle,
    dtype: Dtype,
    extras: &CheckpointExtras,
) -> Result<()> {
    let header = Header {
        dtype,
        networks: bundle
            .iter()
            .map(|(role, net)| NetworkEntry {
                role,
                architecture: net.architecture(),
                params: net
                    .params()
                    .names()
                    .iter()
                    .zip(net.params().tensors())
                    .map(|(n, t)| TensorEntry {
                        name: n.clone(),
                        shape: t.shape().to_vec(),
                    })
                    .collect(),
            })
            .collect(),
        extra: extras
            .tensors
            .iter()
            .map(|(n, t)| TensorEntry {
                name: n.clone(),
                shape: t.shape().to_vec(),
            })
            .collect(),
        state: extras.state.clone(),
    };
    let json = serde_json::to_vec(&header)?;
    let tmp = path.with_extension("tmp");
    {
        let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        let mut w = BufWriter::new(file);
        let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(&tmp, e));
        put(CHECKPOINT_MAGIC)?;
        put(&CHECKPOINT_VERSION.to_le_bytes())?;
        put(&(json.len() as u64).to_le_bytes())?;
        put(&json)?;
        let tensors = bundle
            .iter()
            .flat_map(|(_, n)| n.params().tensors().iter())
            .chain(extras.tensors.iter().map(|(_, t)| t));
        for t in tensors {
            for &v in t.data() {
                match dtype {
                    Dtype::F32 => put(&(v as f32).to_le_bytes())?,
                    Dtype::F64 => put(&v.to_le_bytes())?,
                }
            }
        }
        w.flush().map_err(|e| Error::io(&tmp, e))?;
    }
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Read a checkpoint written by [`write_checkpoint`].
pub fn read_checkpoint(path: &Path) -> Result<(ModelBundle, CheckpointExtras, Dtype)> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let corrupt = |what: &str| Error::CorruptArchive(format!("{}: {what}", path.display()));
    if bytes.len() < 20 {
        return Err(corrupt("truncated header"));
    }
    if &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(Error::Format(format!("{}: not a checkpoint", path.display())));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let hlen = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
    let body = &bytes[20..];
    if body.len() < hlen {
        return Err(corrupt("truncated header"));
    }
    let header: Header = serde_json::from_slice(&body[..hlen])?;
    let mut payload = &body[hlen..];
    let width = header.dtype.width();
    let mut take = |shape: &[usize]| -> Result<Tensor> {
        let n: usize = shape.iter().product();
        if payload.len() < n * width {
            return Err(corrupt("truncated payload"));
        }
        let (head, rest) = payload.split_at(n * width);
        payload = rest;
        let data = head
            .chunks_exact(width)
            .map(|c| match header.dtype {
                Dtype::F32 => f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64,
                Dtype::F64 => f64::from_le_bytes(c.try_into().expect("8 bytes")),
            })
            .collect();
        Ok(Tensor::new(shape, data))
    };
    let mut bundle = ModelBundle::default();
    for entry in &header.networks {
        let tensors = entry
            .params
            .iter()
            .map(|p| take(&p.shape))
            .collect::<Result<Vec<_>>>()?;
        let net = Network::from_tensors(entry.architecture.clone(), tensors)?;
        if bundle.get(entry.role).is_some() {
            return Err(Error::Format(format!("duplicate role {:?}", entry.role)));
        }
        bundle.insert(entry.role, net);
    }
    let mut extras = CheckpointExtras {
        tensors: Vec::new(),
        state: header.state.clone(),
    };
    for e in &header.extra {
        extras.tensors.push((e.name.clone(), take(&e.shape)?));
    }
    if !payload.is_empty() {
        return Err(Error::Format(format!("{}: trailing bytes", path.display())));
    }
    Ok((bundle, extras, header.dtype))
}
