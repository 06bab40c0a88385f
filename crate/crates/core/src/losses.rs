//! Training objectives. Reconstruction-type losses are per-pixel mean
//! squared errors summed over the two domains or directions; adversarial
//! losses sum log-probabilities over bands and average over the batch.
//!
//! [`graph`] holds the differentiable versions used by the trainer; the
//! free functions here evaluate the same expressions on plain tensors.

use crate::autodiff::Graph;
use crate::error::{Error, Result};
use crate::image_core::Cutout;
use crate::image_core::stack_batch;
use crate::tensor::Tensor;

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before logs.
pub const PROB_CLAMP: f64 = 1e-7;

pub mod graph {
    use super::PROB_CLAMP;
    use crate::autodiff::{Graph, Var};

    fn log_prob(g: &mut Graph, p: Var) -> Var {
        g.log_clamped(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    }

    /// `-sum_p log D` over one domain's `(N, bands)` probabilities, divided by N.
    pub fn fooling_term(g: &mut Graph, fake: Var) -> Var {
        let n = g.shape(fake)[0] as f64;
        let l = log_prob(g, fake);
        let s = g.sum(l);
        g.scale(s, -1.0 / n)
    }

    /// `-sum_p [log D(real) + log(1 - D(fake))]` for one domain, divided by N.
    pub fn discriminator_term(g: &mut Graph, real: Var, fake: Var) -> Var {
        let n = g.shape(real)[0] as f64;
        let lr = log_prob(g, real);
        let not_fake = g.affine(fake, -1.0, 1.0);
        let lf = log_prob(g, not_fake);
        let both = g.add(lr, lf);
        let s = g.sum(both);
        g.scale(s, -1.0 / n)
    }

    fn mse_pair(g: &mut Graph, a: Var, b: Var, c: Var, d: Var) -> Var {
        let first = g.mse(a, b);
        let second = g.mse(c, d);
        g.add(first, second)
    }

    pub fn auto_loss(g: &mut Graph, ax_out: Var, x: Var, ay_out: Var, y: Var) -> Var {
        mse_pair(g, ax_out, x, ay_out, y)
    }

    pub fn adv_d_loss(g: &mut Graph, dx_real: Var, dx_fake: Var, dy_real: Var, dy_fake: Var) -> Var {
        let a = discriminator_term(g, dx_real, dx_fake);
        let b = discriminator_term(g, dy_real, dy_fake);
        g.add(a, b)
    }

    pub fn adv_ne_loss(g: &mut Graph, dx_fake: Var, dy_fake: Var) -> Var {
        let a = fooling_term(g, dx_fake);
        let b = fooling_term(g, dy_fake);
        g.add(a, b)
    }

    pub fn identity_loss(g: &mut Graph, gxy_out: Var, y: Var, gyx_out: Var, x: Var) -> Var {
        mse_pair(g, gxy_out, y, gyx_out, x)
    }

    pub fn cycle_loss(g: &mut Graph, x_cycled: Var, x: Var, y_cycled: Var, y: Var) -> Var {
        mse_pair(g, x_cycled, x, y_cycled, y)
    }

    pub fn pseudo_identity_loss(
        g: &mut Graph,
        gxy_out: Var,
        x_regridded: Var,
        gyx_out: Var,
        y_regridded: Var,
    ) -> Var {
        mse_pair(g, gxy_out, x_regridded, gyx_out, y_regridded)
    }
}

fn same_shape(a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Shape(format!("loss operands {:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

fn probs(t: &Tensor) -> Result<()> {
    if t.rank() != 2 || t.shape()[0] == 0 {
        return Err(Error::Shape(format!("probabilities must be (N, bands), got {:?}", t.shape())));
    }
    Ok(())
}

fn eval(inputs: &[&Tensor], build: impl FnOnce(&mut Graph, &[crate::autodiff::Var]) -> crate::autodiff::Var) -> f64 {
    let mut g = Graph::new();
    let vars: Vec<_> = inputs.iter().map(|t| g.constant((*t).clone())).collect();
    let out = build(&mut g, &vars);
    g.value(out).item()
}

fn mse_pair(a: &Tensor, b: &Tensor, c: &Tensor, d: &Tensor) -> Result<f64> {
    same_shape(a, b)?;
    same_shape(c, d)?;
    Ok(eval(&[a, b, c, d], |g, v| graph::auto_loss(g, v[0], v[1], v[2], v[3])))
}

/// Reconstruction loss of both autoencoders.
pub fn auto_loss(ax_out: &Tensor, x: &Tensor, ay_out: &Tensor, y: &Tensor) -> Result<f64> {
    mse_pair(ax_out, x, ay_out, y)
}

/// Discriminator loss over both domains.
pub fn adv_d_loss(dx_real: &Tensor, dx_fake: &Tensor, dy_real: &Tensor, dy_fake: &Tensor) -> Result<f64> {
    for t in [dx_real, dx_fake, dy_real, dy_fake] {
        probs(t)?;
    }
    same_shape(dx_real, dx_fake)?;
    same_shape(dy_real, dy_fake)?;
    Ok(eval(&[dx_real, dx_fake, dy_real, dy_fake], |g, v| {
        graph::adv_d_loss(g, v[0], v[1], v[2], v[3])
    }))
}

/// Loss of the noise emulators (and adversarially trained generators).
pub fn adv_ne_loss(dx_fake: &Tensor, dy_fake: &Tensor) -> Result<f64> {
    probs(dx_fake)?;
    probs(dy_fake)?;
    Ok(eval(&[dx_fake, dy_fake], |g, v| graph::adv_ne_loss(g, v[0], v[1])))
}

pub fn identity_loss(gxy_out: &Tensor, y: &Tensor, gyx_out: &Tensor, x: &Tensor) -> Result<f64> {
    mse_pair(gxy_out, y, gyx_out, x)
}

pub fn cycle_loss(x_cycled: &Tensor, x: &Tensor, y_cycled: &Tensor, y: &Tensor) -> Result<f64> {
    mse_pair(x_cycled, x, y_cycled, y)
}

pub fn pseudo_identity_loss(
    gxy_out: &Tensor,
    x_regridded: &Tensor,
    gyx_out: &Tensor,
    y_regridded: &Tensor,
) -> Result<f64> {
    mse_pair(gxy_out, x_regridded, gyx_out, y_regridded)
}

/// Check that `x[i]` and `y[i]` are the two views of one paired object.
pub fn check_pairs(x: &[Cutout], y: &[Cutout]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::ContractViolation(format!(
            "{} X cutouts against {} Y cutouts",
            x.len(),
            y.len()
        )));
    }
    for (a, b) in x.iter().zip(y) {
        match (a.pairing_key(), b.pairing_key()) {
            (Some(ka), Some(kb)) if ka == kb => {}
            (ka, kb) => {
                return Err(Error::ContractViolation(format!(
                    "identity loss needs paired entries, got {} ({ka:?}) and {} ({kb:?})",
                    a.object_id(),
                    b.object_id()
                )))
            }
        }
    }
    Ok(())
}

/// Identity loss on cutouts, refusing anything that is not a matched pair.
pub fn identity_loss_checked(
    gxy_out: &[Cutout],
    y: &[Cutout],
    gyx_out: &[Cutout],
    x: &[Cutout],
) -> Result<f64> {
    check_pairs(x, y)?;
    check_pairs(x, gxy_out)?;
    check_pairs(gyx_out, y)?;
    if x.is_empty() {
        return Err(Error::EmptyInput("identity loss over no pairs".into()));
    }
    identity_loss(&stack_batch(gxy_out), &stack_batch(y), &stack_batch(gyx_out), &stack_batch(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t2(v: [f64; 4]) -> Tensor {
        Tensor::new(&[1, 1, 2, 2], v.to_vec())
    }

    #[test]
    fn auto_loss_constant_offset() {
        let x = t2([1., 2., 3., 4.]);
        let shifted = x.map(|v| v + 1.0);
        assert_eq!(auto_loss(&x, &x, &x, &x).unwrap(), 0.0);
        assert_eq!(auto_loss(&shifted, &x, &x, &x).unwrap(), 1.0);
    }

    #[test]
    fn identity_loss_hand_value() {
        let out = t2([1., 2., 3., 4.]);
        let y = t2([1., 2., 3., 0.]);
        let x = t2([5., 6., 7., 8.]);
        assert_eq!(identity_loss(&out, &y, &x, &x).unwrap(), 4.0);
        let out2 = t2([1., 2., 3., 8.]);
        assert_eq!(identity_loss(&out2, &y, &x, &x).unwrap(), 16.0);
    }

    #[test]
    fn adversarial_hand_values() {
        let half = Tensor::full(&[1, 1], 0.5);
        let d = adv_d_loss(&half, &half, &half, &half).unwrap();
        assert!((d - 4.0 * 2f64.ln()).abs() < 1e-12);
        let real = Tensor::full(&[1, 1], 0.9);
        let fake = Tensor::full(&[1, 1], 0.1);
        let d = adv_d_loss(&real, &fake, &real, &fake).unwrap();
        assert!((d - 4.0 * -(0.9f64.ln())).abs() < 1e-12);
        assert!((d - 0.4214).abs() < 5e-5);
        let ne = adv_ne_loss(&Tensor::full(&[1, 1], 0.25), &half).unwrap();
        assert!((ne - (4f64.ln() + 2f64.ln())).abs() < 1e-12);
        let saturated = adv_ne_loss(&Tensor::full(&[1, 1], 1.0), &Tensor::full(&[1, 1], 1.0)).unwrap();
        assert!(saturated < 1e-6);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = Tensor::zeros(&[1, 1, 2, 2]);
        let b = Tensor::zeros(&[1, 1, 3, 3]);
        assert!(matches!(cycle_loss(&a, &b, &a, &a), Err(Error::Shape(_))));
    }
}
