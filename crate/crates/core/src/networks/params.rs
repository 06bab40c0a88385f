use rand::Rng;
use rand_distr::StandardNormal;

use crate::autodiff::{Gradients, Graph, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Standard deviation of the truncated-normal weight initialisation.
pub const INIT_STD: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Init {
    /// Truncated normal, std [`INIT_STD`], resampled beyond two deviations.
    Weight,
    Zero,
}

/// Name, shape and initialiser of one parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: Init,
}

impl ParamSpec {
    pub fn weight(name: impl Into<String>, shape: &[usize]) -> Self {
        Self {
            name: name.into(),
            shape: shape.to_vec(),
            init: Init::Weight,
        }
    }

    pub fn zero(name: impl Into<String>, shape: &[usize]) -> Self {
        Self {
            name: name.into(),
            shape: shape.to_vec(),
            init: Init::Zero,
        }
    }
}

fn truncated_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let z: f64 = rng.sample(StandardNormal);
        if z.abs() <= 2.0 {
            return z * INIT_STD;
        }
    }
}

/// Named parameter tensors of one network, in declaration order.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParamSet {
    pub fn initialize<R: Rng + ?Sized>(layout: &[ParamSpec], rng: &mut R) -> Self {
        let mut names = Vec::with_capacity(layout.len());
        let mut tensors = Vec::with_capacity(layout.len());
        for spec in layout {
            let n: usize = spec.shape.iter().product();
            let data = match spec.init {
                Init::Zero => vec![0.0; n],
                Init::Weight => (0..n).map(|_| truncated_normal(rng)).collect(),
            };
            names.push(spec.name.clone());
            tensors.push(Tensor::new(&spec.shape, data));
        }
        Self { names, tensors }
    }

    /// Assemble from loaded tensors, checking names and shapes against `layout`.
    pub fn from_tensors(layout: &[ParamSpec], tensors: Vec<Tensor>) -> Result<Self> {
        if layout.len() != tensors.len() {
            return Err(Error::Format(format!(
                "expected {} parameter tensors, found {}",
                layout.len(),
                tensors.len()
            )));
        }
        for (spec, t) in layout.iter().zip(&tensors) {
            if spec.shape != t.shape() {
                return Err(Error::Format(format!(
                    "parameter {} has shape {:?}, architecture needs {:?}",
                    spec.name,
                    t.shape(),
                    spec.shape
                )));
            }
            if !t.all_finite() {
                return Err(Error::Format(format!("parameter {} is not finite", spec.name)));
            }
        }
        Ok(Self {
            names: layout.iter().map(|s| s.name.clone()).collect(),
            tensors,
        })
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.names.iter().position(|n| n == name).map(|i| &self.tensors[i])
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::all_finite)
    }

    /// Largest elementwise difference to another set with the same layout.
    pub fn max_abs_diff(&self, other: &ParamSet) -> f64 {
        assert_eq!(self.names, other.names, "parameter layouts differ");
        self.tensors
            .iter()
            .zip(&other.tensors)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    /// Place every tensor on the graph, as variables when `trainable`.
    pub fn bind(&self, graph: &mut Graph, trainable: bool) -> Vec<Var> {
        self.tensors
            .iter()
            .map(|t| graph.leaf(t.clone(), trainable))
            .collect()
    }

    /// Gradients of bound parameters, zeros where unreachable.
    pub fn collect_grads(&self, grads: &Gradients, vars: &[Var]) -> Vec<Tensor> {
        self.tensors
            .iter()
            .zip(vars)
            .map(|(t, &v)| grads.get_or_zeros(v, t))
            .collect()
    }
}
