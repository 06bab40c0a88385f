use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layers::{conv3, LEAKY_SLOPE};
use super::params::{ParamSet, ParamSpec};
use crate::autodiff::{Graph, Var};
use crate::error::{Error, Result};
use crate::image_core::{Cutout, SurveyId};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Upsampler {
    Nearest,
    PixelShuffle,
}

/// Encoder/decoder stack: each encoder stage is conv 3x3, leaky ReLU and a
/// 2x2 average pool; each decoder stage upsamples by two then applies
/// conv 3x3 and leaky ReLU; a final linear conv 3x3 maps back to the bands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrunkArch {
    pub bands: usize,
    pub widths: Vec<usize>,
    pub upsamples: usize,
    pub upsampler: Upsampler,
    pub slope: f64,
}

impl TrunkArch {
    pub fn new(bands: usize, widths: Vec<usize>, upsamples: usize, upsampler: Upsampler) -> Self {
        Self {
            bands,
            widths,
            upsamples,
            upsampler,
            slope: LEAKY_SLOPE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bands == 0 || self.widths.is_empty() || self.widths.contains(&0) {
            return Err(Error::Config("trunk needs bands and non-zero widths".into()));
        }
        Ok(())
    }

    fn downsamples(&self) -> usize {
        self.widths.len()
    }

    /// Output channels of each decoder stage.
    fn decoder_widths(&self) -> Vec<usize> {
        let rev: Vec<usize> = self.widths.iter().rev().skip(1).copied().collect();
        (0..self.upsamples)
            .map(|k| rev.get(k).copied().unwrap_or(self.widths[0]))
            .collect()
    }

    pub fn layout(&self) -> Vec<ParamSpec> {
        let mut out = Vec::new();
        let mut c = self.bands;
        for (i, &w) in self.widths.iter().enumerate() {
            out.push(ParamSpec::weight(format!("enc{i}.w"), &[w, c, 3, 3]));
            out.push(ParamSpec::zero(format!("enc{i}.b"), &[w]));
            c = w;
        }
        for (k, w) in self.decoder_widths().into_iter().enumerate() {
            if self.upsampler == Upsampler::PixelShuffle {
                out.push(ParamSpec::weight(format!("dec{k}.ps.w"), &[4 * c, c, 3, 3]));
                out.push(ParamSpec::zero(format!("dec{k}.ps.b"), &[4 * c]));
            }
            out.push(ParamSpec::weight(format!("dec{k}.w"), &[w, c, 3, 3]));
            out.push(ParamSpec::zero(format!("dec{k}.b"), &[w]));
            c = w;
        }
        out.push(ParamSpec::weight("out.w", &[self.bands, c, 3, 3]));
        out.push(ParamSpec::zero("out.b", &[self.bands]));
        out
    }

    /// Spatial scale factor of the stack as a power of two (may be negative).
    fn scale_log2(&self) -> isize {
        self.upsamples as isize - self.downsamples() as isize
    }

    pub(crate) fn forward(&self, g: &mut Graph, p: &[Var], x: Var) -> Var {
        let mut it = p.iter().copied();
        let mut next = || it.next().expect("parameter count matches layout");
        let mut h = x;
        for _ in 0..self.downsamples() {
            let (w, b) = (next(), next());
            h = conv3(g, h, w, b, 1);
            h = g.leaky_relu(h, self.slope);
            h = g.avg_pool2(h);
        }
        for _ in 0..self.upsamples {
            h = match self.upsampler {
                Upsampler::Nearest => g.upsample_nearest2(h),
                Upsampler::PixelShuffle => {
                    let (w, b) = (next(), next());
                    let expanded = conv3(g, h, w, b, 1);
                    g.pixel_shuffle(expanded, 2)
                }
            };
            let (w, b) = (next(), next());
            h = conv3(g, h, w, b, 1);
            h = g.leaky_relu(h, self.slope);
        }
        let (w, b) = (next(), next());
        conv3(g, h, w, b, 1)
    }
}

fn check_input(c: &Cutout, size: usize, bands: usize, survey: SurveyId) -> Result<()> {
    if c.survey() != survey {
        return Err(Error::ContractViolation(format!(
            "network expects a {survey:?} cutout, got {:?}",
            c.survey()
        )));
    }
    if c.size() != size || c.num_bands() != bands {
        return Err(Error::Shape(format!(
            "network expects {bands} bands of {size}x{size}, got {} of {}x{}",
            c.num_bands(),
            c.size(),
            c.size()
        )));
    }
    Ok(())
}

fn run_plain(
    params: &ParamSet,
    c: &Cutout,
    build: impl FnOnce(&mut Graph, &[Var], Var) -> Var,
) -> Tensor {
    let mut g = Graph::new();
    let vars = params.bind(&mut g, false);
    let x = g.constant(c.to_tensor());
    let out = build(&mut g, &vars, x);
    g.value(out).clone()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutoencoderArch {
    pub survey: SurveyId,
    pub image_size: usize,
    pub trunk: TrunkArch,
}

impl AutoencoderArch {
    pub fn new(survey: SurveyId, image_size: usize, bands: usize, widths: Vec<usize>) -> Self {
        let n = widths.len();
        Self {
            survey,
            image_size,
            trunk: TrunkArch::new(bands, widths, n, Upsampler::Nearest),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.trunk.validate()?;
        if self.trunk.upsamples != self.trunk.downsamples() {
            return Err(Error::Config("autoencoder needs as many upsamples as pools".into()));
        }
        if self.image_size == 0 {
            return Err(Error::InvalidSize("autoencoder image size must be positive".into()));
        }
        Ok(())
    }

    /// Symmetric padding `(before, after)` that makes the side divisible by
    /// the pooling factor.
    fn padding(&self) -> (usize, usize) {
        let m = 1usize << self.trunk.downsamples();
        let total = self.image_size.div_ceil(m) * m - self.image_size;
        (total / 2, total - total / 2)
    }
}

/// Same-size reconstruction network.
#[derive(Clone, Debug, PartialEq)]
pub struct Autoencoder {
    pub arch: AutoencoderArch,
    pub params: ParamSet,
}

impl Autoencoder {
    pub fn new<R: Rng + ?Sized>(arch: AutoencoderArch, rng: &mut R) -> Result<Self> {
        arch.validate()?;
        let params = ParamSet::initialize(&arch.trunk.layout(), rng);
        Ok(Self { arch, params })
    }

    pub fn from_tensors(arch: AutoencoderArch, tensors: Vec<Tensor>) -> Result<Self> {
        arch.validate()?;
        let params = ParamSet::from_tensors(&arch.trunk.layout(), tensors)?;
        Ok(Self { arch, params })
    }

    /// `x (N, bands, S, S) -> (N, bands, S, S)`.
    pub fn forward(&self, g: &mut Graph, p: &[Var], x: Var) -> Var {
        let (a, b) = self.arch.padding();
        let padded = if a + b > 0 { g.pad_symmetric(x, [a, b, a, b]) } else { x };
        let out = self.arch.trunk.forward(g, p, padded);
        if a + b > 0 {
            g.crop(out, [a, b, a, b])
        } else {
            out
        }
    }

    pub fn apply(&self, c: &Cutout) -> Result<Cutout> {
        check_input(c, self.arch.image_size, self.arch.trunk.bands, self.arch.survey)?;
        let out = run_plain(&self.params, c, |g, p, x| self.forward(g, p, x));
        Ok(Cutout::from_tensor(&out, 0, c.object_id(), c.survey(), c.pixel_scale())?
            .with_pairing_key(c.pairing_key().map(str::to_owned)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    XToY,
    YToX,
}

impl Direction {
    pub fn source(self) -> SurveyId {
        match self {
            Direction::XToY => SurveyId::X,
            Direction::YToX => SurveyId::Y,
        }
    }

    pub fn target(self) -> SurveyId {
        self.source().other()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorArch {
    pub direction: Direction,
    pub x_size: usize,
    pub y_size: usize,
    pub target_pixel_scale: f64,
    pub trunk: TrunkArch,
}

impl GeneratorArch {
    /// X to Y: the trunk doubles the side, then symmetric padding reaches the
    /// Y side. Y to X: symmetric cropping to twice the X side, then the trunk
    /// halves it.
    pub fn new(
        direction: Direction,
        x_size: usize,
        y_size: usize,
        target_pixel_scale: f64,
        bands: usize,
        widths: Vec<usize>,
        upsampler: Upsampler,
    ) -> Self {
        let n = widths.len();
        let ups = match direction {
            Direction::XToY => n + 1,
            Direction::YToX => n.saturating_sub(1),
        };
        Self {
            direction,
            x_size,
            y_size,
            target_pixel_scale,
            trunk: TrunkArch::new(bands, widths, ups, upsampler),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.trunk.validate()?;
        let want = match self.direction {
            Direction::XToY => 1,
            Direction::YToX => -1,
        };
        if self.trunk.scale_log2() != want {
            return Err(Error::Config("generator trunk must scale by exactly two".into()));
        }
        let m = 1usize << self.trunk.downsamples();
        let inner = 2 * self.x_size;
        if self.y_size < inner || (self.y_size - inner) % 2 != 0 {
            return Err(Error::InvalidSize(format!(
                "Y side {} must exceed twice the X side {} by an even margin",
                self.y_size, self.x_size
            )));
        }
        let trunk_input = match self.direction {
            Direction::XToY => self.x_size,
            Direction::YToX => inner,
        };
        if trunk_input % m != 0 || trunk_input == 0 {
            return Err(Error::InvalidSize(format!(
                "trunk input side {trunk_input} not divisible by {m}"
            )));
        }
        if !(self.target_pixel_scale > 0.0) {
            return Err(Error::Config("target pixel scale must be positive".into()));
        }
        Ok(())
    }

    pub fn input_size(&self) -> usize {
        match self.direction {
            Direction::XToY => self.x_size,
            Direction::YToX => self.y_size,
        }
    }

    pub fn output_size(&self) -> usize {
        match self.direction {
            Direction::XToY => self.y_size,
            Direction::YToX => self.x_size,
        }
    }

    fn margin(&self) -> usize {
        (self.y_size - 2 * self.x_size) / 2
    }
}

/// Cross-survey translation network producing the noiseless target image.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pub arch: GeneratorArch,
    pub params: ParamSet,
}

impl Generator {
    pub fn new<R: Rng + ?Sized>(arch: GeneratorArch, rng: &mut R) -> Result<Self> {
        arch.validate()?;
        let params = ParamSet::initialize(&arch.trunk.layout(), rng);
        Ok(Self { arch, params })
    }

    pub fn from_tensors(arch: GeneratorArch, tensors: Vec<Tensor>) -> Result<Self> {
        arch.validate()?;
        let params = ParamSet::from_tensors(&arch.trunk.layout(), tensors)?;
        Ok(Self { arch, params })
    }

    pub fn forward(&self, g: &mut Graph, p: &[Var], x: Var) -> Var {
        let m = self.arch.margin();
        match self.arch.direction {
            Direction::XToY => {
                let out = self.arch.trunk.forward(g, p, x);
                if m > 0 {
                    g.pad_symmetric(out, [m, m, m, m])
                } else {
                    out
                }
            }
            Direction::YToX => {
                let inner = if m > 0 { g.crop(x, [m, m, m, m]) } else { x };
                self.arch.trunk.forward(g, p, inner)
            }
        }
    }

    pub fn apply(&self, c: &Cutout) -> Result<Cutout> {
        check_input(c, self.arch.input_size(), self.arch.trunk.bands, self.arch.direction.source())?;
        let out = run_plain(&self.params, c, |g, p, x| self.forward(g, p, x));
        Ok(Cutout::from_tensor(
            &out,
            0,
            c.object_id(),
            self.arch.direction.target(),
            self.arch.target_pixel_scale,
        )?
        .with_pairing_key(c.pairing_key().map(str::to_owned)))
    }
}
