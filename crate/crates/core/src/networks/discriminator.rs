use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layers::{acm, conv3, LEAKY_SLOPE};
use super::params::{ParamSet, ParamSpec};
use crate::autodiff::{Graph, Var};
use crate::error::{Error, Result};
use crate::image_core::{stack_batch, Cutout, HighPassKernel, SurveyId};
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscriminatorArch {
    pub survey: SurveyId,
    pub bands: usize,
    pub image_size: usize,
    /// Channel widths of the stride-2 stages, shared by both branches.
    pub widths: Vec<usize>,
    pub hidden: usize,
    pub slope: f64,
    #[serde(default = "HighPassKernel::laplacian")]
    pub high_pass: HighPassKernel,
}

impl DiscriminatorArch {
    pub fn new(survey: SurveyId, bands: usize, image_size: usize, widths: Vec<usize>, hidden: usize) -> Self {
        Self {
            survey,
            bands,
            image_size,
            widths,
            hidden,
            slope: LEAKY_SLOPE,
            high_pass: HighPassKernel::laplacian(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bands == 0 || self.hidden == 0 || self.widths.is_empty() || self.widths.contains(&0) {
            return Err(Error::Config("discriminator needs bands, widths and hidden units".into()));
        }
        if self.image_size < self.high_pass.side() {
            return Err(Error::InvalidSize(format!(
                "discriminator input {} smaller than the high-pass kernel",
                self.image_size
            )));
        }
        Ok(())
    }

    fn band_layout(&self, p: usize) -> Vec<ParamSpec> {
        let mut out = Vec::new();
        for (branch, cin) in [("pix", 1), ("fou", 2)] {
            let mut c = cin;
            for (i, &w) in self.widths.iter().enumerate() {
                out.push(ParamSpec::weight(format!("band{p}.{branch}{i}.w"), &[w, c, 3, 3]));
                out.push(ParamSpec::zero(format!("band{p}.{branch}{i}.b"), &[w]));
                out.push(ParamSpec::weight(format!("band{p}.{branch}{i}.acm.w"), &[w, w]));
                out.push(ParamSpec::zero(format!("band{p}.{branch}{i}.acm.b"), &[w]));
                c = w;
            }
        }
        let feat = 6 * self.widths[self.widths.len() - 1];
        out.push(ParamSpec::weight(format!("band{p}.fc1.w"), &[self.hidden, feat]));
        out.push(ParamSpec::zero(format!("band{p}.fc1.b"), &[self.hidden]));
        out.push(ParamSpec::weight(format!("band{p}.fc2.w"), &[1, self.hidden]));
        out.push(ParamSpec::zero(format!("band{p}.fc2.b"), &[1]));
        out
    }

    pub fn layout(&self) -> Vec<ParamSpec> {
        (0..self.bands).flat_map(|p| self.band_layout(p)).collect()
    }

    fn per_band(&self) -> usize {
        8 * self.widths.len() + 4
    }
}

/// One sub-discriminator per band; each returns the probability that its
/// band is real.
#[derive(Clone, Debug, PartialEq)]
pub struct Discriminator {
    pub arch: DiscriminatorArch,
    pub params: ParamSet,
}

impl Discriminator {
    pub fn new<R: Rng + ?Sized>(arch: DiscriminatorArch, rng: &mut R) -> Result<Self> {
        arch.validate()?;
        let params = ParamSet::initialize(&arch.layout(), rng);
        Ok(Self { arch, params })
    }

    pub fn from_tensors(arch: DiscriminatorArch, tensors: Vec<Tensor>) -> Result<Self> {
        arch.validate()?;
        let params = ParamSet::from_tensors(&arch.layout(), tensors)?;
        Ok(Self { arch, params })
    }

    fn stages(&self, g: &mut Graph, p: &[Var], mut h: Var) -> Var {
        for q in p.chunks(4).take(self.arch.widths.len()) {
            h = conv3(g, h, q[0], q[1], 2);
            h = g.leaky_relu(h, self.arch.slope);
            h = acm(g, h, q[2], q[3]);
        }
        g.global_pool_trio(h)
    }

    /// `x (N, bands, S, S) -> (N, bands)` probabilities.
    pub fn forward(&self, g: &mut Graph, p: &[Var], x: Var) -> Var {
        let (_, bands, s, _) = g.value(x).dims4();
        let k = self.arch.high_pass.side();
        let kernel = g.constant(Tensor::new(&[1, k, k], self.arch.high_pass.coeffs().to_vec()));
        let stage_params = 4 * self.arch.widths.len();
        let outs: Vec<Var> = (0..bands)
            .map(|band| {
                let q = &p[band * self.arch.per_band()..(band + 1) * self.arch.per_band()];
                let plane = g.slice_channels(x, band, 1);
                let padded = g.pad_symmetric(plane, [k / 2; 4]);
                let hp = g.depthwise_conv(padded, kernel);
                let pix = self.stages(g, &q[..stage_params], hp);
                let spectrum = g.dft2(hp, 1.0 / s as f64);
                let fou = self.stages(g, &q[stage_params..2 * stage_params], spectrum);
                let feat = g.concat(&[pix, fou]);
                let head = &q[2 * stage_params..];
                let h = g.linear(feat, head[0], head[1]);
                let h = g.leaky_relu(h, self.arch.slope);
                let logit = g.linear(h, head[2], head[3]);
                g.sigmoid(logit)
            })
            .collect();
        if outs.len() == 1 {
            outs[0]
        } else {
            g.concat(&outs)
        }
    }

    /// Probabilities `(N, bands)` for a batch of cutouts.
    pub fn probabilities(&self, batch: &[Cutout]) -> Result<Tensor> {
        if batch.is_empty() {
            return Err(Error::EmptyInput("discriminator batch is empty".into()));
        }
        for c in batch {
            if c.size() != self.arch.image_size || c.num_bands() != self.arch.bands {
                return Err(Error::Shape(format!(
                    "discriminator expects {} bands of {}px, got {} of {}px",
                    self.arch.bands,
                    self.arch.image_size,
                    c.num_bands(),
                    c.size()
                )));
            }
        }
        self.probabilities_tensor(&stack_batch(batch))
    }

    pub fn probabilities_tensor(&self, x: &Tensor) -> Result<Tensor> {
        if x.rank() != 4 || x.shape()[1] != self.arch.bands || x.shape()[2] != self.arch.image_size {
            return Err(Error::Shape(format!("discriminator input {:?}", x.shape())));
        }
        let mut g = Graph::new();
        let p = self.params.bind(&mut g, false);
        let xv = g.constant(x.clone());
        let out = self.forward(&mut g, &p, xv);
        Ok(g.value(out).clone())
    }
}
