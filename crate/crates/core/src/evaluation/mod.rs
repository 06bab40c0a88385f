//! Reconstruction and noise-pattern metrics and their report files.

mod plot;
mod report;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use report::{emit_report, ReportFiles};

use crate::error::{Error, Result};
use crate::image_core::{fft2, fftshift, fourier_amplitude, high_pass, Cutout, HighPassKernel, Plane};
use crate::networks::{AmplitudeMode, NoiseEmulator, NoiseSeeds};

/// Summed absolute flux of one band and its summed absolute residual.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxDifferenceRecord {
    pub object_id: String,
    pub band: String,
    pub sum_abs_orig: f64,
    pub sum_abs_diff: f64,
}

/// Per-band `sum |orig|` and `sum |recon - orig|`.
pub fn global_flux_difference(
    orig: &Cutout,
    recon: &Cutout,
    band_names: &[String],
) -> Result<Vec<FluxDifferenceRecord>> {
    if orig.size() != recon.size() || orig.num_bands() != recon.num_bands() {
        return Err(Error::Shape(format!(
            "cannot compare {} bands of {}px with {} bands of {}px",
            orig.num_bands(),
            orig.size(),
            recon.num_bands(),
            recon.size()
        )));
    }
    if band_names.len() != orig.num_bands() {
        return Err(Error::Shape(format!(
            "{} band names for {} bands",
            band_names.len(),
            orig.num_bands()
        )));
    }
    Ok(orig
        .bands()
        .iter()
        .zip(recon.bands())
        .zip(band_names)
        .map(|((o, r), name)| FluxDifferenceRecord {
            object_id: orig.object_id().to_owned(),
            band: name.clone(),
            sum_abs_orig: o.data().iter().map(|v| v.abs()).sum(),
            sum_abs_diff: o.data().iter().zip(r.data()).map(|(a, b)| (b - a).abs()).sum(),
        })
        .collect())
}

/// Reference levels of one band: the median summed absolute noise and
/// `sqrt(2)` times it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseReference {
    pub band: String,
    pub sigma: f64,
    pub sqrt2_sigma: f64,
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Median over `n_samples` emulator draws of `sum |noise|`, per band.
pub fn noise_sigma_reference(
    ne: &NoiseEmulator,
    band_names: &[String],
    n_samples: usize,
    size: usize,
    mode: AmplitudeMode,
    seed: u64,
) -> Result<Vec<NoiseReference>> {
    if n_samples == 0 {
        return Err(Error::EmptyInput("noise reference needs at least one sample".into()));
    }
    if band_names.len() != ne.arch.bands {
        return Err(Error::Shape(format!(
            "{} band names for {} emulator bands",
            band_names.len(),
            ne.arch.bands
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bands = ne.arch.bands;
    let mut sums = vec![Vec::with_capacity(n_samples); bands];
    let chunk = 64;
    let mut done = 0;
    while done < n_samples {
        let n = chunk.min(n_samples - done);
        let seeds = NoiseSeeds::draw(&mut rng, n, bands, size)?;
        let noise = ne.sample(&seeds, mode)?;
        for i in 0..n {
            for (p, s) in sums.iter_mut().enumerate() {
                s.push(noise.plane(i, p).iter().map(|v| v.abs()).sum());
            }
        }
        done += n;
    }
    Ok(sums
        .into_iter()
        .zip(band_names)
        .map(|(mut s, name)| {
            let sigma = median(&mut s);
            NoiseReference {
                band: name.clone(),
                sigma,
                sqrt2_sigma: std::f64::consts::SQRT_2 * sigma,
            }
        })
        .collect())
}

/// Mean Fourier amplitude map of high-passed images, zero frequency at the
/// centre.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierStack {
    pub label: String,
    pub count: usize,
    pub amplitude: Plane,
}

impl FourierStack {
    pub fn labelled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Count-weighted combination of two stacks of the same geometry.
    pub fn merge(&self, other: &FourierStack) -> Result<FourierStack> {
        let (a, b) = (&self.amplitude, &other.amplitude);
        if a.height() != b.height() || a.width() != b.width() {
            return Err(Error::Shape("stacks differ in size".into()));
        }
        let n = (self.count + other.count) as f64;
        let (wa, wb) = (self.count as f64 / n, other.count as f64 / n);
        let data = a.data().iter().zip(b.data()).map(|(x, y)| wa * x + wb * y).collect();
        Ok(FourierStack {
            label: self.label.clone(),
            count: self.count + other.count,
            amplitude: Plane::new(a.height(), a.width(), data)?,
        })
    }

    /// Largest bin over the median bin.
    pub fn max_to_median(&self) -> f64 {
        let mut v = self.amplitude.data().to_vec();
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        max / median(&mut v)
    }

    /// `sum |self - reference| / sum |reference|`.
    pub fn relative_l1(&self, reference: &FourierStack) -> Result<f64> {
        let (a, b) = (&self.amplitude, &reference.amplitude);
        if a.height() != b.height() || a.width() != b.width() {
            return Err(Error::Shape("stacks differ in size".into()));
        }
        let num: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).sum();
        let den: f64 = b.data().iter().map(|y| y.abs()).sum();
        Ok(num / den)
    }
}

pub fn fourier_amplitude_stack(images: &[Plane], kernel: &HighPassKernel) -> Result<FourierStack> {
    let filtered: Vec<Plane> = images.iter().map(|img| high_pass(img, kernel)).collect();
    mean_amplitude_spectrum(&filtered)
}

/// Mean Fourier amplitude of unfiltered maps, zero frequency at the centre.
pub fn mean_amplitude_spectrum(images: &[Plane]) -> Result<FourierStack> {
    let first = images
        .first()
        .ok_or_else(|| Error::EmptyInput("no images to stack".into()))?;
    let (h, w) = (first.height(), first.width());
    let mut acc = vec![0.0; h * w];
    for img in images {
        if img.height() != h || img.width() != w {
            return Err(Error::Shape(format!(
                "stack of {h}x{w} maps got a {}x{} map",
                img.height(),
                img.width()
            )));
        }
        let (re, im) = fft2(img);
        for (a, v) in acc.iter_mut().zip(fourier_amplitude(&re, &im).data()) {
            *a += v;
        }
    }
    let n = images.len() as f64;
    acc.iter_mut().for_each(|v| *v /= n);
    Ok(FourierStack {
        label: String::new(),
        count: images.len(),
        amplitude: fftshift(&Plane::new(h, w, acc)?),
    })
}

/// Band `p` of every cutout.
pub fn band_planes(cutouts: &[Cutout], p: usize) -> Vec<Plane> {
    cutouts.iter().map(|c| c.band(p).clone()).collect()
}
