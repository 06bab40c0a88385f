use rand::Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::autodiff::SYM_SIDE;
use crate::error::{Error, Result};
use crate::image_core::Plane;
use crate::networks::SymmetricKernel;

/// Ground-truth noise model of one survey: per band, a correlation kernel
/// and a lognormal amplitude distribution `(mu, sigma)` of `ln a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseTruth {
    pub kernels: Vec<SymmetricKernel>,
    pub amplitude_lognormal: Vec<(f64, f64)>,
}

impl NoiseTruth {
    pub fn validate(&self, bands: usize) -> Result<()> {
        if self.kernels.len() != bands || self.amplitude_lognormal.len() != bands {
            return Err(Error::Config(format!(
                "noise truth lists {} kernels and {} amplitude laws for {bands} bands",
                self.kernels.len(),
                self.amplitude_lognormal.len()
            )));
        }
        if self.amplitude_lognormal.iter().any(|(mu, s)| !mu.is_finite() || !(*s >= 0.0)) {
            return Err(Error::Config("amplitude lognormal sigma must be >= 0".into()));
        }
        Ok(())
    }

    /// Median of the band's amplitude distribution.
    pub fn median_amplitude(&self, band: usize) -> f64 {
        self.amplitude_lognormal[band].0.exp()
    }

    pub fn sample_amplitude<R: Rng + ?Sized>(&self, band: usize, rng: &mut R) -> f64 {
        let (mu, sigma) = self.amplitude_lognormal[band];
        if sigma == 0.0 {
            mu.exp()
        } else {
            LogNormal::new(mu, sigma).expect("validated lognormal").sample(rng)
        }
    }
}

/// How the amplitude of a synthesized noise field is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseAmplitude {
    Fixed(f64),
    Random,
}

/// Same-size correlation of `map` with a `7 x 7` kernel using edge-repeating
/// symmetric padding.
pub(crate) fn correlate_same(map: &Plane, kernel: &[f64]) -> Plane {
    let n = map.height();
    let half = (SYM_SIDE / 2) as isize;
    let mirror = crate::autodiff::spatial_mirror;
    Plane::from_fn(n, map.width(), |i, j| {
        let mut acc = 0.0;
        for a in 0..SYM_SIDE {
            let r = mirror(i as isize + a as isize - half, n);
            for b in 0..SYM_SIDE {
                let k = kernel[a * SYM_SIDE + b];
                if k != 0.0 {
                    let c = mirror(j as isize + b as isize - half, map.width());
                    acc += k * map.get(r, c);
                }
            }
        }
        acc
    })
}

/// Draw a correlated Gaussian noise field for one band: white unit noise
/// correlated with the band's kernel, times the amplitude.
pub fn synthesize_noise<R: Rng + ?Sized>(
    truth: &NoiseTruth,
    band: usize,
    size: usize,
    amplitude: NoiseAmplitude,
    rng: &mut R,
) -> Result<Plane> {
    if size < SYM_SIDE {
        return Err(Error::InvalidSize(format!(
            "noise field of {size}px is smaller than the {SYM_SIDE}px kernel"
        )));
    }
    if band >= truth.kernels.len() {
        return Err(Error::Parameter(format!("band {band} has no noise truth")));
    }
    let a = match amplitude {
        NoiseAmplitude::Fixed(a) => a,
        NoiseAmplitude::Random => truth.sample_amplitude(band, rng),
    };
    let white = Plane::from_fn(size, size, |_, _| rng.sample(StandardNormal));
    let mut field = correlate_same(&white, &truth.kernels[band].realize());
    for v in field.data_mut() {
        *v *= a;
    }
    Ok(field)
}
