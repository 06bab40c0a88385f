use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::noise::{synthesize_noise, NoiseAmplitude, NoiseTruth};
use super::sersic::{render_galaxy, GalaxyParams};
use crate::error::{Error, Result};
use crate::image_core::{
    check_survey_pair, write_archive, ArchiveManifest, Cutout, SurveyId, SurveySpec,
};
use crate::networks::SymmetricKernel;

/// Sampling ranges for synthetic galaxies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GalaxyRanges {
    pub sersic_index: (f64, f64),
    /// Arcseconds.
    pub half_light_radius: (f64, f64),
    pub axis_ratio: (f64, f64),
    /// Log-uniform range of the first band's total flux.
    pub flux: (f64, f64),
    /// Uniform range of each band's flux relative to the first band.
    pub band_flux_ratio: Vec<(f64, f64)>,
    /// Maximum absolute centre offset per axis, arcsec.
    pub max_center_offset: f64,
}

impl Default for GalaxyRanges {
    fn default() -> Self {
        Self {
            sersic_index: (0.5, 4.0),
            half_light_radius: (0.5, 1.5),
            axis_ratio: (0.4, 1.0),
            flux: (15.0, 60.0),
            band_flux_ratio: vec![(1.0, 1.0), (0.8, 1.6)],
            max_center_offset: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub paired_train: usize,
    pub paired_test: usize,
    pub unpaired_x: usize,
    pub unpaired_y: usize,
    pub survey_x: SurveySpec,
    pub survey_y: SurveySpec,
    #[serde(default)]
    pub galaxy: GalaxyRanges,
    pub seed: u64,
    #[serde(default = "default_true")]
    pub add_noise: bool,
}

fn default_true() -> bool {
    true
}

/// Desk-scale X survey: 32 px at 0.396"/px, two bands, delta-correlated noise.
pub fn desk_survey_x() -> SurveySpec {
    SurveySpec {
        name: "synthetic-x".into(),
        image_size: 32,
        pixel_scale: 0.396,
        band_names: vec!["r".into(), "z".into()],
        psf_fwhm: vec![1.4, 1.4],
        noise_truth: Some(NoiseTruth {
            kernels: vec![SymmetricKernel::delta(), SymmetricKernel::delta()],
            amplitude_lognormal: vec![(0.05f64.ln(), 0.25), (0.08f64.ln(), 0.25)],
        }),
    }
}

/// Desk-scale Y survey: 68 px over the same angular span, two bands,
/// Gaussian-correlated noise (sigma = 1 px).
pub fn desk_survey_y() -> SurveySpec {
    let x = desk_survey_x();
    SurveySpec {
        name: "synthetic-y".into(),
        image_size: 68,
        pixel_scale: x.angular_span() / 68.0,
        band_names: x.band_names.clone(),
        psf_fwhm: vec![0.7, 0.7],
        noise_truth: Some(NoiseTruth {
            kernels: vec![
                SymmetricKernel::gaussian_unit_norm(1.0),
                SymmetricKernel::gaussian_unit_norm(1.0),
            ],
            amplitude_lognormal: vec![(0.03f64.ln(), 0.25), (0.04f64.ln(), 0.25)],
        }),
    }
}

impl DatasetConfig {
    /// Desk-scale defaults: 1,000 galaxies split 100/100/400/400.
    pub fn desk() -> Self {
        Self {
            paired_train: 100,
            paired_test: 100,
            unpaired_x: 400,
            unpaired_y: 400,
            survey_x: desk_survey_x(),
            survey_y: desk_survey_y(),
            galaxy: GalaxyRanges::default(),
            seed: 0,
            add_noise: true,
        }
    }

    /// Full-scale entry counts (far beyond desk scale).
    pub fn full_counts(mut self) -> Self {
        self.paired_train = 2_557;
        self.paired_test = 2_500;
        self.unpaired_x = 654_764;
        self.unpaired_y = 125_036;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_survey_pair(&self.survey_x, &self.survey_y)?;
        for s in [&self.survey_x, &self.survey_y] {
            if s.psf_fwhm.len() != s.num_bands() {
                return Err(Error::Config(format!("survey {} needs psf_fwhm per band", s.name)));
            }
            if self.add_noise && s.noise_truth.is_none() {
                return Err(Error::Config(format!("survey {} needs noise_truth", s.name)));
            }
        }
        let g = &self.galaxy;
        if g.band_flux_ratio.len() != self.survey_x.num_bands() {
            return Err(Error::Config(format!(
                "galaxy.band_flux_ratio has {} entries for {} bands",
                g.band_flux_ratio.len(),
                self.survey_x.num_bands()
            )));
        }
        let ordered = |(a, b): (f64, f64)| a <= b;
        if !(ordered(g.sersic_index) && g.sersic_index.0 >= 0.5 && g.sersic_index.1 <= 4.0) {
            return Err(Error::Config("galaxy.sersic_index must lie in [0.5, 4]".into()));
        }
        if !(ordered(g.half_light_radius) && g.half_light_radius.0 > 0.0) {
            return Err(Error::Config("galaxy.half_light_radius".into()));
        }
        if !(ordered(g.axis_ratio) && g.axis_ratio.0 > 0.0 && g.axis_ratio.1 <= 1.0) {
            return Err(Error::Config("galaxy.axis_ratio must lie in (0, 1]".into()));
        }
        if !(ordered(g.flux) && g.flux.0 > 0.0) {
            return Err(Error::Config("galaxy.flux".into()));
        }
        Ok(())
    }
}

/// Which part of the corpus an entry belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Split {
    PairedTrain,
    PairedTest,
    Unpaired,
}

impl Split {
    fn code(self) -> u64 {
        match self {
            Split::PairedTrain => 1,
            Split::PairedTest => 2,
            Split::Unpaired => 3,
        }
    }

    fn key_prefix(self) -> &'static str {
        match self {
            Split::PairedTrain => "train",
            Split::PairedTest => "test",
            Split::Unpaired => "unpaired",
        }
    }

    /// Split of a cutout read back from an archive, from its pairing key.
    pub fn of(c: &Cutout) -> Split {
        match c.pairing_key() {
            Some(k) if k.starts_with("train-") => Split::PairedTrain,
            Some(k) if k.starts_with("test-") => Split::PairedTest,
            _ => Split::Unpaired,
        }
    }
}

/// Independent RNG stream per (split, domain, entry, purpose).
fn entry_rng(seed: u64, split: Split, domain: Option<SurveyId>, index: usize, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dom = match domain {
        None => 0,
        Some(SurveyId::X) => 1,
        Some(SurveyId::Y) => 2,
    };
    rng.set_stream((split.code() << 60) | (dom << 56) | ((index as u64) << 4) | purpose);
    rng
}

/// Galaxy parameters of entry `index` in `split`. Unpaired entries draw per
/// domain; paired entries share one draw.
pub fn sample_entry_params(
    config: &DatasetConfig,
    split: Split,
    domain: SurveyId,
    index: usize,
) -> GalaxyParams {
    let dom = (split == Split::Unpaired).then_some(domain);
    let mut rng = entry_rng(config.seed, split, dom, index, 0);
    let g = &config.galaxy;
    let uniform = |rng: &mut ChaCha8Rng, (a, b): (f64, f64)| {
        if a == b {
            a
        } else {
            rng.random_range(a..b)
        }
    };
    let sersic_index = uniform(&mut rng, g.sersic_index);
    let half_light_radius = uniform(&mut rng, g.half_light_radius);
    let axis_ratio = uniform(&mut rng, g.axis_ratio);
    let position_angle = rng.random_range(0.0..std::f64::consts::PI);
    let base = uniform(&mut rng, (g.flux.0.ln(), g.flux.1.ln())).exp();
    let band_fluxes = g
        .band_flux_ratio
        .iter()
        .map(|&r| base * uniform(&mut rng, r))
        .collect();
    let m = g.max_center_offset;
    let center_offset = (uniform(&mut rng, (-m, m)), uniform(&mut rng, (-m, m)));
    GalaxyParams {
        sersic_index,
        half_light_radius,
        axis_ratio,
        position_angle,
        band_fluxes,
        center_offset,
    }
}

fn make_entry(
    config: &DatasetConfig,
    split: Split,
    domain: SurveyId,
    index: usize,
) -> Result<Cutout> {
    let survey = match domain {
        SurveyId::X => &config.survey_x,
        SurveyId::Y => &config.survey_y,
    };
    let params = sample_entry_params(config, split, domain, index);
    let clean = render_galaxy(&params, survey, domain)?;
    let mut bands = clean.bands().to_vec();
    if config.add_noise {
        let truth = survey.noise_truth.as_ref().expect("validated");
        let mut rng = entry_rng(config.seed, split, Some(domain), index, 1);
        for (p, band) in bands.iter_mut().enumerate() {
            let noise = synthesize_noise(truth, p, survey.image_size, NoiseAmplitude::Random, &mut rng)?;
            for (v, n) in band.data_mut().iter_mut().zip(noise.data()) {
                *v += n;
            }
        }
    }
    // Stored as f32 on disk; keep the in-memory copy identical.
    for band in bands.iter_mut() {
        for v in band.data_mut() {
            *v = *v as f32 as f64;
        }
    }
    let tag = match domain {
        SurveyId::X => "x",
        SurveyId::Y => "y",
    };
    let key = (split != Split::Unpaired).then(|| format!("{}-{index:06}", split.key_prefix()));
    let id = format!("{tag}-{}-{index:06}", split.key_prefix());
    Ok(Cutout::new(id, domain, survey.pixel_scale, bands)?.with_pairing_key(key))
}

/// The two generated archives, in entry order paired-train, paired-test,
/// unpaired.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub x: Vec<Cutout>,
    pub y: Vec<Cutout>,
    pub manifest_x: ArchiveManifest,
    pub manifest_y: ArchiveManifest,
}

impl Dataset {
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let (px, py) = (dir.join("x.gxc"), dir.join("y.gxc"));
        write_archive(&self.x, &self.manifest_x, &px)?;
        write_archive(&self.y, &self.manifest_y, &py)?;
        Ok((px, py))
    }
}

/// Generate the paired/unpaired two-survey corpus. Deterministic in
/// `config.seed`; every entry owns its own RNG stream.
pub fn build_dataset(config: &DatasetConfig) -> Result<Dataset> {
    config.validate()?;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (split, count) in [(Split::PairedTrain, config.paired_train), (Split::PairedTest, config.paired_test)] {
        for i in 0..count {
            x.push(make_entry(config, split, SurveyId::X, i)?);
            y.push(make_entry(config, split, SurveyId::Y, i)?);
        }
    }
    for i in 0..config.unpaired_x {
        x.push(make_entry(config, Split::Unpaired, SurveyId::X, i)?);
    }
    for i in 0..config.unpaired_y {
        y.push(make_entry(config, Split::Unpaired, SurveyId::Y, i)?);
    }
    let manifest_x = ArchiveManifest::for_cutouts(SurveyId::X, config.survey_x.clone(), &x);
    let manifest_y = ArchiveManifest::for_cutouts(SurveyId::Y, config.survey_y.clone(), &y);
    Ok(Dataset {
        x,
        y,
        manifest_x,
        manifest_y,
    })
}
