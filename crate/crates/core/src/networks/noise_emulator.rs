use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::layers::LEAKY_SLOPE;
use super::params::{ParamSet, ParamSpec};
use super::symmetric::SymmetricKernel;
use crate::autodiff::{Graph, Var, SYM_FREE, SYM_SIDE};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Gaussian seeds for a batch of noise fields: `z1 (N, bands)` drives the
/// amplitudes, `z2 (N, bands, S, S)` is the white field.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSeeds {
    pub z1: Tensor,
    pub z2: Tensor,
}

impl NoiseSeeds {
    /// Fresh seeds per image: all of `z1` for an image, then its `z2` maps.
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, count: usize, bands: usize, size: usize) -> Result<Self> {
        if size < SYM_SIDE {
            return Err(Error::InvalidSize(format!(
                "noise field of {size}px is smaller than the {SYM_SIDE}px kernel"
            )));
        }
        let mut z1 = Vec::with_capacity(count * bands);
        let mut z2 = Vec::with_capacity(count * bands * size * size);
        for _ in 0..count {
            z1.extend((0..bands).map(|_| rng.sample::<f64, _>(StandardNormal)));
            z2.extend((0..bands * size * size).map(|_| rng.sample::<f64, _>(StandardNormal)));
        }
        Ok(Self {
            z1: Tensor::new(&[count, bands], z1),
            z2: Tensor::new(&[count, bands, size, size], z2),
        })
    }

    pub fn count(&self) -> usize {
        self.z1.shape()[0]
    }

    pub fn size(&self) -> usize {
        self.z2.shape()[2]
    }

    fn validate(&self, bands: usize) -> Result<()> {
        let (n, p) = self.z1.dims2();
        if self.z2.rank() != 4 {
            return Err(Error::Shape("z2 must be (N, bands, S, S)".into()));
        }
        let (n2, p2, h, w) = self.z2.dims4();
        if n != n2 || p != bands || p2 != bands || h != w {
            return Err(Error::Shape(format!(
                "seeds {:?}/{:?} do not fit {bands} bands",
                self.z1.shape(),
                self.z2.shape()
            )));
        }
        if h < SYM_SIDE {
            return Err(Error::InvalidSize(format!(
                "noise field of {h}px is smaller than the {SYM_SIDE}px kernel"
            )));
        }
        Ok(())
    }
}

/// How the per-band amplitude is obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AmplitudeMode {
    /// From the learned map of `z1`.
    Learned,
    /// Every band and image uses this value.
    Frozen(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseEmulatorArch {
    pub bands: usize,
    pub hidden: usize,
    pub slope: f64,
}

impl NoiseEmulatorArch {
    pub fn new(bands: usize) -> Self {
        Self {
            bands,
            hidden: 16,
            slope: LEAKY_SLOPE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bands == 0 || self.hidden == 0 {
            return Err(Error::Config("noise emulator needs bands and hidden units".into()));
        }
        Ok(())
    }

    pub fn layout(&self) -> Vec<ParamSpec> {
        let h = self.hidden;
        (0..self.bands)
            .flat_map(|p| {
                [
                    ParamSpec::weight(format!("band{p}.fc1.w"), &[h, 1]),
                    ParamSpec::zero(format!("band{p}.fc1.b"), &[h]),
                    ParamSpec::weight(format!("band{p}.fc2.w"), &[1, h]),
                    ParamSpec::zero(format!("band{p}.fc2.b"), &[1]),
                    ParamSpec::zero(format!("band{p}.kernel"), &[1, SYM_FREE]),
                ]
            })
            .collect()
    }
}

const PER_BAND: usize = 5;

/// Per-band stochastic noise generator: a positive amplitude from `z1`
/// scales `z2`, which is then correlated with a symmetric 7x7 kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseEmulator {
    pub arch: NoiseEmulatorArch,
    pub params: ParamSet,
}

impl NoiseEmulator {
    pub fn new<R: Rng + ?Sized>(arch: NoiseEmulatorArch, rng: &mut R) -> Result<Self> {
        arch.validate()?;
        let params = ParamSet::initialize(&arch.layout(), rng);
        Ok(Self { arch, params })
    }

    pub fn from_tensors(arch: NoiseEmulatorArch, tensors: Vec<Tensor>) -> Result<Self> {
        arch.validate()?;
        let params = ParamSet::from_tensors(&arch.layout(), tensors)?;
        Ok(Self { arch, params })
    }

    /// Realised kernel of band `p`.
    pub fn kernel(&self, p: usize) -> SymmetricKernel {
        let t = &self.params.tensors()[p * PER_BAND + 4];
        SymmetricKernel::from_free(t.data()).expect("layout fixes the arity")
    }

    pub fn set_kernel(&mut self, p: usize, kernel: &SymmetricKernel) {
        let t = &mut self.params.tensors_mut()[p * PER_BAND + 4];
        t.data_mut().copy_from_slice(kernel.free());
    }

    fn amplitude_var(&self, g: &mut Graph, p: &[Var], band: usize, z1: &Tensor) -> Var {
        let n = z1.shape()[0];
        let col: Vec<f64> = (0..n).map(|i| z1.data()[i * self.arch.bands + band]).collect();
        let z = g.constant(Tensor::new(&[n, 1], col));
        let q = &p[band * PER_BAND..];
        let h = g.linear(z, q[0], q[1]);
        let h = g.leaky_relu(h, self.arch.slope);
        let a = g.linear(h, q[2], q[3]);
        g.softplus(a)
    }

    /// `(N, bands, S, S)` noise fields for the given seeds.
    pub fn forward(&self, g: &mut Graph, p: &[Var], seeds: &NoiseSeeds, mode: AmplitudeMode) -> Var {
        let (n, bands, s, _) = seeds.z2.dims4();
        let half = SYM_SIDE / 2;
        let parts: Vec<Var> = (0..bands)
            .map(|band| {
                let amp = match mode {
                    AmplitudeMode::Learned => self.amplitude_var(g, p, band, &seeds.z1),
                    AmplitudeMode::Frozen(a) => g.constant(Tensor::full(&[n, 1], a)),
                };
                let mut z2 = Vec::with_capacity(n * s * s);
                for i in 0..n {
                    z2.extend_from_slice(seeds.z2.plane(i, band));
                }
                let z2 = g.constant(Tensor::new(&[n, 1, s, s], z2));
                let scaled = g.channel_gate(z2, amp);
                let padded = g.pad_symmetric(scaled, [half; 4]);
                let kernel = g.symmetric_kernel(p[band * PER_BAND + 4]);
                g.depthwise_conv(padded, kernel)
            })
            .collect();
        if parts.len() == 1 {
            parts[0]
        } else {
            g.concat(&parts)
        }
    }

    pub fn sample(&self, seeds: &NoiseSeeds, mode: AmplitudeMode) -> Result<Tensor> {
        seeds.validate(self.arch.bands)?;
        let mut g = Graph::new();
        let p = self.params.bind(&mut g, false);
        let out = self.forward(&mut g, &p, seeds, mode);
        Ok(g.value(out).clone())
    }

    /// Amplitude-head outputs `(N, bands)` for `z1 (N, bands)`.
    pub fn amplitudes(&self, z1: &Tensor) -> Result<Tensor> {
        let (n, bands) = z1.dims2();
        if bands != self.arch.bands {
            return Err(Error::Shape(format!("z1 has {bands} bands, emulator has {}", self.arch.bands)));
        }
        let mut g = Graph::new();
        let p = self.params.bind(&mut g, false);
        let mut out = vec![0.0; n * bands];
        for band in 0..bands {
            let a = self.amplitude_var(&mut g, &p, band, z1);
            for (i, v) in g.value(a).data().iter().enumerate() {
                out[i * bands + band] = *v;
            }
        }
        Ok(Tensor::new(&[n, bands], out))
    }

    /// Per-pixel standard deviation of band `p`'s output for amplitude `a`
    /// away from the borders: `a` times the kernel's L2 norm.
    pub fn effective_std(&self, p: usize, amplitude: f64) -> f64 {
        amplitude * self.kernel(p).l2_norm()
    }
}
