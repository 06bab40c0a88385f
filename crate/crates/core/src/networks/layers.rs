//! Graph building blocks shared by the network families, plus plain-tensor
//! entry points for the stand-alone operations.

use crate::autodiff::{Graph, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Leaky ReLU slope used throughout.
pub const LEAKY_SLOPE: f64 = 0.2;

/// 3x3 convolution with one pixel of symmetric padding.
pub(crate) fn conv3(g: &mut Graph, x: Var, w: Var, b: Var, stride: usize) -> Var {
    let padded = g.pad_symmetric(x, [1, 1, 1, 1]);
    g.conv2d(padded, w, b, stride)
}

/// Attention complementary module: channel gate from global mean, a 1x1
/// linear map and a sigmoid.
pub(crate) fn acm(g: &mut Graph, x: Var, w: Var, b: Var) -> Var {
    let pooled = g.global_mean(x);
    let logits = g.linear(pooled, w, b);
    let gate = g.sigmoid(logits);
    g.channel_gate(x, gate)
}

fn check_rank4(t: &Tensor, what: &str) -> Result<()> {
    if t.rank() != 4 {
        return Err(Error::Shape(format!("{what} expects (N, C, H, W), got {:?}", t.shape())));
    }
    if t.shape()[1] == 0 {
        return Err(Error::Shape(format!("{what} needs at least one channel")));
    }
    Ok(())
}

/// Per-channel mean, max and min of `(N, C, H, W)` as `(N, 3C)`.
pub fn global_pool_trio(map: &Tensor) -> Result<Tensor> {
    check_rank4(map, "global_pool_trio")?;
    let mut g = Graph::new();
    let x = g.constant(map.clone());
    let out = g.global_pool_trio(x);
    Ok(g.value(out).clone())
}

/// Apply an attention gate with weights `w (C, C)` and bias `b (C)`.
pub fn acm_forward(map: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    check_rank4(map, "acm_forward")?;
    let c = map.shape()[1];
    if w.shape() != [c, c] || b.shape() != [c] {
        return Err(Error::Shape(format!(
            "attention weights {:?}/{:?} do not fit {c} channels",
            w.shape(),
            b.shape()
        )));
    }
    let mut g = Graph::new();
    let x = g.constant(map.clone());
    let (wv, bv) = (g.constant(w.clone()), g.constant(b.clone()));
    let out = acm(&mut g, x, wv, bv);
    Ok(g.value(out).clone())
}

/// Sub-pixel rearrangement `(N, C r^2, H, W) -> (N, C, rH, rW)`.
pub fn pixel_shuffle(map: &Tensor, r: usize) -> Result<Tensor> {
    check_rank4(map, "pixel_shuffle")?;
    if r == 0 || map.shape()[1] % (r * r) != 0 {
        return Err(Error::Shape(format!(
            "{} channels are not divisible by r^2 = {}",
            map.shape()[1],
            r * r
        )));
    }
    let mut g = Graph::new();
    let x = g.constant(map.clone());
    let out = g.pixel_shuffle(x, r);
    Ok(g.value(out).clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pool_trio_of_constant_map() {
        let t = global_pool_trio(&Tensor::full(&[1, 2, 3, 3], 1.5)).unwrap();
        assert_eq!(t.data(), &[1.5; 6]);
    }

    #[test]
    fn acm_gates_never_amplify() {
        let map = Tensor::from_fn(&[2, 3, 4, 4], |i| (i as f64 * 0.37).sin() * 5.0);
        let w = Tensor::from_fn(&[3, 3], |i| i as f64 - 4.0);
        let b = Tensor::from_fn(&[3], |i| i as f64);
        let out = acm_forward(&map, &w, &b).unwrap();
        assert_eq!(out.shape(), map.shape());
        for (o, i) in out.data().iter().zip(map.data()) {
            assert!(o.abs() <= i.abs());
        }
        let zero = acm_forward(&Tensor::zeros(&[1, 3, 2, 2]), &w, &b).unwrap();
        assert!(zero.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pixel_shuffle_identity_and_errors() {
        let t = Tensor::from_fn(&[1, 3, 2, 2], |i| i as f64);
        assert_eq!(pixel_shuffle(&t, 1).unwrap(), t);
        assert!(matches!(pixel_shuffle(&t, 2), Err(Error::Shape(_))));
        let s = pixel_shuffle(&Tensor::new(&[1, 4, 1, 1], vec![1., 2., 3., 4.]), 2).unwrap();
        assert_eq!(s.shape(), &[1, 1, 2, 2]);
        assert_eq!(s.data(), &[1., 2., 3., 4.]);
    }
}
