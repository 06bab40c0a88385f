//! Multi-band cutouts and the pixel-level primitives shared by training and
//! evaluation.

mod archive;
mod augment;
mod filter;
mod fourier;
mod regrid;

use serde::{Deserialize, Serialize};

pub use archive::{read_archive, sidecar_path, write_archive, ArchiveManifest, ManifestEntry, MAGIC};
pub use augment::{augment, Augmentation};
pub use filter::{high_pass, HighPassKernel};
pub use fourier::{fft2, fftshift, fourier_amplitude};
pub use regrid::{regrid_bilinear, regrid_plane};

use crate::error::{Error, Result};
use crate::synthetic::NoiseTruth;
use crate::tensor::Tensor;

/// Which side of the translation a cutout belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SurveyId {
    X,
    Y,
}

impl SurveyId {
    pub fn other(self) -> Self {
        match self {
            SurveyId::X => SurveyId::Y,
            SurveyId::Y => SurveyId::X,
        }
    }
}

/// A single 2-D map, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::Shape(format!(
                "{} values for a {height}x{width} plane",
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, 0.0)
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for i in 0..height {
            for j in 0..width {
                data.push(f(i, j));
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.width + j] = v;
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A multi-band flux image of one object.
#[derive(Clone, Debug, PartialEq)]
pub struct Cutout {
    object_id: String,
    survey: SurveyId,
    pixel_scale: f64,
    pairing_key: Option<String>,
    bands: Vec<Plane>,
}

impl Cutout {
    /// Build a cutout, checking that bands are square, equally sized and
    /// finite.
    pub fn new(
        object_id: impl Into<String>,
        survey: SurveyId,
        pixel_scale: f64,
        bands: Vec<Plane>,
    ) -> Result<Self> {
        let Some(first) = bands.first() else {
            return Err(Error::Shape("cutout needs at least one band".into()));
        };
        let size = first.height;
        for (p, band) in bands.iter().enumerate() {
            if band.height != size || band.width != size {
                return Err(Error::Shape(format!(
                    "band {p} is {}x{}, expected {size}x{size}",
                    band.height, band.width
                )));
            }
            if !band.data.iter().all(|v| v.is_finite()) {
                return Err(Error::Parameter(format!("band {p} contains non-finite flux")));
            }
        }
        if !(pixel_scale.is_finite() && pixel_scale > 0.0) {
            return Err(Error::Parameter(format!("pixel scale {pixel_scale}")));
        }
        Ok(Self {
            object_id: object_id.into(),
            survey,
            pixel_scale,
            pairing_key: None,
            bands,
        })
    }

    pub fn with_pairing_key(mut self, key: Option<String>) -> Self {
        self.pairing_key = key;
        self
    }

    pub fn object_id(&self) -> &str {
        &self.object_id
    }

    pub fn survey(&self) -> SurveyId {
        self.survey
    }

    pub fn pixel_scale(&self) -> f64 {
        self.pixel_scale
    }

    pub fn pairing_key(&self) -> Option<&str> {
        self.pairing_key.as_deref()
    }

    pub fn bands(&self) -> &[Plane] {
        &self.bands
    }

    pub fn band(&self, p: usize) -> &Plane {
        &self.bands[p]
    }

    pub fn num_bands(&self) -> usize {
        self.bands.len()
    }

    /// Side length in pixels.
    pub fn size(&self) -> usize {
        self.bands[0].height
    }

    /// Same metadata, new pixel content.
    pub fn with_bands(&self, bands: Vec<Plane>, pixel_scale: f64) -> Result<Self> {
        Ok(Cutout::new(self.object_id.clone(), self.survey, pixel_scale, bands)?
            .with_pairing_key(self.pairing_key.clone()))
    }

    /// `(1, C, H, W)` tensor of the flux values.
    pub fn to_tensor(&self) -> Tensor {
        stack_batch(std::slice::from_ref(self))
    }

    /// Rebuild a cutout from plane `n` of an `(N, C, H, W)` tensor.
    pub fn from_tensor(
        t: &Tensor,
        n: usize,
        object_id: impl Into<String>,
        survey: SurveyId,
        pixel_scale: f64,
    ) -> Result<Self> {
        let (_, c, h, w) = t.dims4();
        let bands = (0..c)
            .map(|p| Plane::new(h, w, t.plane(n, p).to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Cutout::new(object_id, survey, pixel_scale, bands)
    }
}

/// Stack equally shaped cutouts into an `(N, C, H, W)` tensor.
pub fn stack_batch(cutouts: &[Cutout]) -> Tensor {
    assert!(!cutouts.is_empty(), "stack_batch of nothing");
    let c = cutouts[0].num_bands();
    let s = cutouts[0].size();
    let mut data = Vec::with_capacity(cutouts.len() * c * s * s);
    for cut in cutouts {
        assert_eq!(cut.num_bands(), c, "band count differs within batch");
        assert_eq!(cut.size(), s, "size differs within batch");
        for band in &cut.bands {
            data.extend_from_slice(&band.data);
        }
    }
    Tensor::new(&[cutouts.len(), c, s, s], data)
}

/// Geometry and per-band properties of one survey.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurveySpec {
    pub name: String,
    pub image_size: usize,
    /// Arcseconds per pixel.
    pub pixel_scale: f64,
    pub band_names: Vec<String>,
    /// Gaussian PSF full width at half maximum per band, arcseconds.
    #[serde(default)]
    pub psf_fwhm: Vec<f64>,
    #[serde(default)]
    pub noise_truth: Option<NoiseTruth>,
}

impl SurveySpec {
    pub fn num_bands(&self) -> usize {
        self.band_names.len()
    }

    /// Angular side length in arcseconds.
    pub fn angular_span(&self) -> f64 {
        self.image_size as f64 * self.pixel_scale
    }

    pub fn validate(&self) -> Result<()> {
        if self.image_size == 0 || self.band_names.is_empty() {
            return Err(Error::Config(format!(
                "survey {}: image_size and band_names must be non-empty",
                self.name
            )));
        }
        if !(self.pixel_scale > 0.0 && self.pixel_scale.is_finite()) {
            return Err(Error::Config(format!("survey {}: pixel_scale", self.name)));
        }
        if !self.psf_fwhm.is_empty() && self.psf_fwhm.len() != self.num_bands() {
            return Err(Error::Config(format!(
                "survey {}: psf_fwhm has {} entries for {} bands",
                self.name,
                self.psf_fwhm.len(),
                self.num_bands()
            )));
        }
        if let Some(truth) = &self.noise_truth {
            truth.validate(self.num_bands())?;
        }
        Ok(())
    }

    /// Check that a cutout matches this survey's geometry.
    pub fn check_cutout(&self, c: &Cutout) -> Result<()> {
        if c.num_bands() != self.num_bands() || c.size() != self.image_size {
            return Err(Error::Shape(format!(
                "cutout {} is {} bands of {}px; survey {} expects {} bands of {}px",
                c.object_id(),
                c.num_bands(),
                c.size(),
                self.name,
                self.num_bands(),
                self.image_size
            )));
        }
        Ok(())
    }
}

/// Validate a configured `(X, Y)` pair: same band count and the same angular
/// span within 0.5%.
pub fn check_survey_pair(x: &SurveySpec, y: &SurveySpec) -> Result<()> {
    x.validate()?;
    y.validate()?;
    if x.num_bands() != y.num_bands() {
        return Err(Error::Config(format!(
            "band counts differ: {} vs {}",
            x.num_bands(),
            y.num_bands()
        )));
    }
    let (sx, sy) = (x.angular_span(), y.angular_span());
    if ((sx - sy) / sx).abs() > 0.005 {
        return Err(Error::Config(format!(
            "angular spans differ by more than 0.5%: {sx:.3}\" vs {sy:.3}\""
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_square_and_non_finite() {
        let rect = Plane::zeros(2, 3);
        assert!(matches!(
            Cutout::new("a", SurveyId::X, 1.0, vec![rect]),
            Err(Error::Shape(_))
        ));
        let bad = Plane::new(1, 1, vec![f64::NAN]).unwrap();
        assert!(matches!(
            Cutout::new("a", SurveyId::X, 1.0, vec![bad]),
            Err(Error::Parameter(_))
        ));
        assert!(Cutout::new("a", SurveyId::X, 1.0, vec![]).is_err());
    }

    #[test]
    fn negative_flux_is_allowed() {
        let p = Plane::new(1, 1, vec![-3.5]).unwrap();
        assert!(Cutout::new("a", SurveyId::Y, 0.2, vec![p]).is_ok());
    }

    #[test]
    fn survey_pair_span_check() {
        let mk = |size, scale| SurveySpec {
            name: "s".into(),
            image_size: size,
            pixel_scale: scale,
            band_names: vec!["r".into()],
            psf_fwhm: vec![],
            noise_truth: None,
        };
        assert!(check_survey_pair(&mk(64, 0.396), &mk(136, 0.186)).is_ok());
        assert!(check_survey_pair(&mk(64, 0.396), &mk(136, 0.2)).is_err());
    }

    #[test]
    fn tensor_round_trip() {
        let bands = vec![
            Plane::from_fn(3, 3, |i, j| (i * 3 + j) as f64),
            Plane::from_fn(3, 3, |i, j| -((i + j) as f64)),
        ];
        let c = Cutout::new("o", SurveyId::X, 0.4, bands).unwrap();
        let t = c.to_tensor();
        assert_eq!(t.shape(), &[1, 2, 3, 3]);
        let back = Cutout::from_tensor(&t, 0, "o", SurveyId::X, 0.4).unwrap();
        assert_eq!(back, c);
    }
}
