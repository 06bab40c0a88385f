//! The four network families: autoencoders, generators, noise emulators and
//! discriminators, plus their shared parameter handling and checkpoints.

mod bundle;
mod discriminator;
mod layers;
mod noise_emulator;
mod params;
mod symmetric;
mod trunk;

pub use bundle::{
    read_checkpoint, write_checkpoint, Architecture, CheckpointExtras, Dtype, ModelBundle, Network,
    NetworkConfig, Role, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use discriminator::{Discriminator, DiscriminatorArch};
pub use layers::{acm_forward, global_pool_trio, pixel_shuffle, LEAKY_SLOPE};
pub use noise_emulator::{AmplitudeMode, NoiseEmulator, NoiseEmulatorArch, NoiseSeeds};
pub use params::{Init, ParamSet, ParamSpec, INIT_STD};
pub use symmetric::{build_symmetric_kernel, SymmetricKernel};
pub use trunk::{
    Autoencoder, AutoencoderArch, Direction, Generator, GeneratorArch, TrunkArch, Upsampler,
};
