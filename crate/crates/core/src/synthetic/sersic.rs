use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_lr;

use crate::error::{Error, Result};
use crate::image_core::{Cutout, Plane, SurveyId, SurveySpec};

const SUBSAMPLES: usize = 4;

/// Structural parameters of one synthetic galaxy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GalaxyParams {
    pub sersic_index: f64,
    /// Half-light radius along the major axis, arcsec.
    pub half_light_radius: f64,
    pub axis_ratio: f64,
    /// Radians, counter-clockwise from the +x axis.
    pub position_angle: f64,
    /// Total flux per band inside the cutout.
    pub band_fluxes: Vec<f64>,
    /// Offset of the galaxy centre from the cutout centre, arcsec `(dx, dy)`.
    pub center_offset: (f64, f64),
}

impl GalaxyParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.5..=4.0).contains(&self.sersic_index) {
            return Err(Error::Parameter(format!(
                "Sersic index {} outside [0.5, 4]",
                self.sersic_index
            )));
        }
        if !(self.half_light_radius > 0.0 && self.half_light_radius.is_finite()) {
            return Err(Error::Parameter(format!(
                "half-light radius {} must be positive",
                self.half_light_radius
            )));
        }
        if !(self.axis_ratio > 0.0 && self.axis_ratio <= 1.0) {
            return Err(Error::Parameter(format!("axis ratio {} outside (0, 1]", self.axis_ratio)));
        }
        if self.band_fluxes.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(Error::Parameter("band fluxes must be finite and positive".into()));
        }
        Ok(())
    }
}

/// The constant `b_n` for which `r_e` encloses half the light:
/// the root of `P(2n, b) = 1/2`, with `P` the regularised lower incomplete
/// gamma function.
pub fn sersic_bn(n: f64) -> f64 {
    let a = 2.0 * n;
    let (mut lo, mut hi) = (0.0f64, 4.0 * n + 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gamma_lr(a, mid) < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Radial Sérsic law `exp(-b_n ((r / r_e)^(1/n) - 1))`, unit intensity at `r_e`.
#[derive(Clone, Copy, Debug)]
pub struct SersicProfile {
    pub n: f64,
    pub r_e: f64,
    pub b_n: f64,
}

impl SersicProfile {
    pub fn new(n: f64, r_e: f64) -> Self {
        Self {
            n,
            r_e,
            b_n: sersic_bn(n),
        }
    }

    pub fn intensity(&self, r: f64) -> f64 {
        (-self.b_n * ((r / self.r_e).powf(1.0 / self.n) - 1.0)).exp()
    }
}

fn gaussian_taps(sigma_px: f64) -> Vec<f64> {
    let radius = (4.0 * sigma_px).ceil().max(1.0) as isize;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|t| (-(t * t) as f64 / (2.0 * sigma_px * sigma_px)).exp())
        .collect();
    let s: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / s).collect()
}

/// Separable zero-padded convolution with a symmetric 1-D kernel.
fn blur(plane: &Plane, taps: &[f64]) -> Plane {
    let n = plane.height();
    let r = (taps.len() / 2) as isize;
    let pass = |src: &Plane, horizontal: bool| {
        Plane::from_fn(n, n, |i, j| {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                let off = k as isize - r;
                let (a, b) = if horizontal {
                    (i as isize, j as isize + off)
                } else {
                    (i as isize + off, j as isize)
                };
                if (0..n as isize).contains(&a) && (0..n as isize).contains(&b) {
                    acc += t * src.get(a as usize, b as usize);
                }
            }
            acc
        })
    };
    pass(&pass(plane, true), false)
}

/// Noiseless render of `params` on the survey's pixel grid: the elliptical
/// Sérsic profile averaged over `4 x 4` sub-pixel samples, blurred by each
/// band's Gaussian PSF, then scaled so each band sums to its flux.
pub fn render_galaxy(params: &GalaxyParams, survey: &SurveySpec, domain: SurveyId) -> Result<Cutout> {
    params.validate()?;
    if params.band_fluxes.len() != survey.num_bands() {
        return Err(Error::Parameter(format!(
            "{} band fluxes for a {}-band survey",
            params.band_fluxes.len(),
            survey.num_bands()
        )));
    }
    if survey.psf_fwhm.len() != survey.num_bands() {
        return Err(Error::Parameter(format!("survey {} has no PSF per band", survey.name)));
    }
    let n = survey.image_size;
    let scale = survey.pixel_scale;
    let profile = SersicProfile::new(params.sersic_index, params.half_light_radius);
    let (sin_pa, cos_pa) = params.position_angle.sin_cos();
    let half = n as f64 / 2.0;
    let offsets: Vec<f64> = (0..SUBSAMPLES)
        .map(|k| (k as f64 + 0.5) / SUBSAMPLES as f64 - 0.5)
        .collect();
    let shape = Plane::from_fn(n, n, |i, j| {
        let mut acc = 0.0;
        for oy in &offsets {
            for ox in &offsets {
                // y grows upward so that a positive angle turns counter-clockwise.
                let x = (j as f64 + 0.5 + ox - half) * scale - params.center_offset.0;
                let y = (half - (i as f64 + 0.5 + oy)) * scale - params.center_offset.1;
                let major = x * cos_pa + y * sin_pa;
                let minor = -x * sin_pa + y * cos_pa;
                let r = (major * major + (minor / params.axis_ratio).powi(2)).sqrt();
                acc += profile.intensity(r);
            }
        }
        acc / (SUBSAMPLES * SUBSAMPLES) as f64
    });

    let mut bands = Vec::with_capacity(survey.num_bands());
    for (flux, fwhm) in params.band_fluxes.iter().zip(&survey.psf_fwhm) {
        let sigma_px = fwhm / (8.0 * 2f64.ln()).sqrt() / scale;
        let mut band = blur(&shape, &gaussian_taps(sigma_px));
        let factor = flux / band.sum();
        for v in band.data_mut() {
            *v *= factor;
        }
        bands.push(band);
    }
    Cutout::new("render", domain, scale, bands)
}
