//! A two-survey galaxy corpus with known signal and noise, standing in for
//! real survey cutouts.

mod dataset;
mod noise;
mod sersic;

pub use dataset::{
    build_dataset, desk_survey_x, desk_survey_y, sample_entry_params, Dataset, DatasetConfig,
    GalaxyRanges, Split,
};
pub use noise::{synthesize_noise, NoiseAmplitude, NoiseTruth};
pub use sersic::{render_galaxy, sersic_bn, GalaxyParams, SersicProfile};
