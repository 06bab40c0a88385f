use super::{Graph, Var};
use crate::tensor::Tensor;

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

impl Graph {
    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).zip_map(self.value(b), |x, y| x + y);
        self.push(
            value,
            &[a, b],
            Box::new(|g, needs| {
                vec![needs[0].then(|| g.clone()), needs[1].then(|| g.clone())]
            }),
        )
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).zip_map(self.value(b), |x, y| x - y);
        self.push(
            value,
            &[a, b],
            Box::new(|g, needs| vec![needs[0].then(|| g.clone()), needs[1].then(|| g.map(|v| -v))]),
        )
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let av = self.value(a).clone();
        let bv = self.value(b).clone();
        let value = av.zip_map(&bv, |x, y| x * y);
        self.push(
            value,
            &[a, b],
            Box::new(move |g, needs| {
                vec![
                    needs[0].then(|| g.zip_map(&bv, |u, y| u * y)),
                    needs[1].then(|| g.zip_map(&av, |u, x| u * x)),
                ]
            }),
        )
    }

    /// `scale * a + shift`, elementwise.
    pub fn affine(&mut self, a: Var, scale: f64, shift: f64) -> Var {
        let value = self.value(a).map(|x| scale * x + shift);
        self.push(
            value,
            &[a],
            Box::new(move |g, _| vec![Some(g.map(|u| u * scale))]),
        )
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        self.affine(a, s, 0.0)
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        let av = self.value(a).clone();
        let value = av.map(|x| if x > 0.0 { x } else { slope * x });
        self.push(
            value,
            &[a],
            Box::new(move |g, _| {
                vec![Some(g.zip_map(&av, |u, x| if x > 0.0 { u } else { slope * u }))]
            }),
        )
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).map(sigmoid);
        let out = value.clone();
        self.push(
            value,
            &[a],
            Box::new(move |g, _| vec![Some(g.zip_map(&out, |u, s| u * s * (1.0 - s)))]),
        )
    }

    pub fn softplus(&mut self, a: Var) -> Var {
        let av = self.value(a).clone();
        let value = av.map(softplus);
        self.push(
            value,
            &[a],
            Box::new(move |g, _| vec![Some(g.zip_map(&av, |u, x| u * sigmoid(x)))]),
        )
    }

    /// `ln(clamp(a, lo, hi))`; the gradient vanishes where the clamp is active.
    pub fn log_clamped(&mut self, a: Var, lo: f64, hi: f64) -> Var {
        let av = self.value(a).clone();
        let value = av.map(|p| p.clamp(lo, hi).ln());
        self.push(
            value,
            &[a],
            Box::new(move |g, _| {
                vec![Some(g.zip_map(&av, |u, p| {
                    if p >= lo && p <= hi {
                        u / p
                    } else {
                        0.0
                    }
                }))]
            }),
        )
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let shape = self.shape(a).to_vec();
        let value = Tensor::scalar(self.value(a).sum());
        self.push(
            value,
            &[a],
            Box::new(move |g, _| vec![Some(Tensor::full(&shape, g.item()))]),
        )
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let n = self.value(a).len() as f64;
        let s = self.sum(a);
        self.scale(s, 1.0 / n)
    }

    /// Mean squared difference over every element.
    pub fn mse(&mut self, a: Var, b: Var) -> Var {
        let av = self.value(a);
        let bv = self.value(b);
        assert_eq!(av.shape(), bv.shape(), "mse shape mismatch");
        let diff = av.zip_map(bv, |x, y| x - y);
        let n = diff.len() as f64;
        let value = Tensor::scalar(diff.sum_sq() / n);
        self.push(
            value,
            &[a, b],
            Box::new(move |g, needs| {
                let k = 2.0 * g.item() / n;
                vec![
                    needs[0].then(|| diff.map(|d| k * d)),
                    needs[1].then(|| diff.map(|d| -k * d)),
                ]
            }),
        )
    }
}
