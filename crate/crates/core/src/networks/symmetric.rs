use serde::{Deserialize, Serialize};

use crate::autodiff::{symmetric_slot, SYM_FREE, SYM_SIDE};
use crate::error::{Error, Result};
use crate::image_core::Plane;

/// A zero-bias `7 x 7` kernel with `k[i][j] == k[6 - i][6 - j]`, stored as
/// its 25 free parameters (24 mirrored pairs plus the centre).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SymmetricKernel {
    free: [f64; SYM_FREE],
}

impl SymmetricKernel {
    pub fn from_free(free: &[f64]) -> Result<Self> {
        let free: [f64; SYM_FREE] = free.try_into().map_err(|_| {
            Error::Parameter(format!(
                "symmetric kernel takes {SYM_FREE} free parameters, got {}",
                free.len()
            ))
        })?;
        Ok(Self { free })
    }

    /// Unit centre tap: convolution with it is the identity.
    pub fn delta() -> Self {
        let mut free = [0.0; SYM_FREE];
        free[SYM_FREE - 1] = 1.0;
        Self { free }
    }

    /// Truncated isotropic Gaussian with standard deviation `sigma` pixels,
    /// scaled to unit L2 norm so that white noise keeps unit pixel variance.
    pub fn gaussian_unit_norm(sigma: f64) -> Self {
        let c = (SYM_SIDE / 2) as f64;
        let realized: Vec<f64> = (0..SYM_SIDE * SYM_SIDE)
            .map(|p| {
                let (i, j) = ((p / SYM_SIDE) as f64, (p % SYM_SIDE) as f64);
                (-((i - c).powi(2) + (j - c).powi(2)) / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        let norm = realized.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut free = [0.0; SYM_FREE];
        for (p, v) in realized.iter().enumerate() {
            free[symmetric_slot(p / SYM_SIDE, p % SYM_SIDE)] = v / norm;
        }
        Self { free }
    }

    pub fn free(&self) -> &[f64; SYM_FREE] {
        &self.free
    }

    /// The full kernel, row-major.
    pub fn realize(&self) -> [f64; SYM_SIDE * SYM_SIDE] {
        let mut out = [0.0; SYM_SIDE * SYM_SIDE];
        for i in 0..SYM_SIDE {
            for j in 0..SYM_SIDE {
                out[i * SYM_SIDE + j] = self.free[symmetric_slot(i, j)];
            }
        }
        out
    }

    pub fn to_plane(&self) -> Plane {
        Plane::new(SYM_SIDE, SYM_SIDE, self.realize().to_vec()).unwrap()
    }

    pub fn l2_norm(&self) -> f64 {
        self.realize().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Kernel autocorrelation `(k * k)(dy, dx) = sum k[i][j] k[i+dy][j+dx]`.
    pub fn autocorrelation(&self, dy: isize, dx: isize) -> f64 {
        let k = self.realize();
        let n = SYM_SIDE as isize;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (i + dy, j + dx);
                if (0..n).contains(&a) && (0..n).contains(&b) {
                    acc += k[(i * n + j) as usize] * k[(a * n + b) as usize];
                }
            }
        }
        acc
    }
}

impl TryFrom<Vec<f64>> for SymmetricKernel {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        SymmetricKernel::from_free(&v)
    }
}

impl From<SymmetricKernel> for Vec<f64> {
    fn from(k: SymmetricKernel) -> Self {
        k.free.to_vec()
    }
}

/// Realise a `7 x 7` centrally symmetric kernel from 25 free parameters.
pub fn build_symmetric_kernel(free: &[f64]) -> Result<Plane> {
    Ok(SymmetricKernel::from_free(free)?.to_plane())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orbit_count_is_25() {
        // Enumerate orbits of the 180-degree rotation on the 7x7 grid.
        let mut seen = [false; 49];
        let mut orbits = 0;
        for i in 0..7 {
            for j in 0..7 {
                if !seen[i * 7 + j] {
                    orbits += 1;
                    seen[i * 7 + j] = true;
                    seen[(6 - i) * 7 + (6 - j)] = true;
                }
            }
        }
        assert_eq!(orbits, 25);
        assert_eq!(SYM_FREE, orbits);
        let slots: std::collections::HashSet<usize> =
            (0..49).map(|p| symmetric_slot(p / 7, p % 7)).collect();
        assert_eq!(slots.len(), 25);
    }

    #[test]
    fn zero_free_vector_gives_zero_kernel() {
        let k = build_symmetric_kernel(&[0.0; 25]).unwrap();
        assert!(k.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn realised_kernel_is_centrally_symmetric() {
        let free: Vec<f64> = (0..25).map(|i| (i as f64 * 1.37).sin()).collect();
        let k = build_symmetric_kernel(&free).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(k.get(i, j), k.get(6 - i, 6 - j));
            }
        }
    }

    #[test]
    fn wrong_arity_rejected() {
        assert!(matches!(build_symmetric_kernel(&[0.0; 24]), Err(Error::Parameter(_))));
        assert!(serde_json::from_str::<SymmetricKernel>("[1.0, 2.0]").is_err());
    }

    #[test]
    fn gaussian_kernel_has_unit_norm() {
        let k = SymmetricKernel::gaussian_unit_norm(1.0);
        assert!((k.l2_norm() - 1.0).abs() < 1e-12);
        assert!((k.autocorrelation(0, 0) - 1.0).abs() < 1e-12);
        assert_eq!(SymmetricKernel::delta().autocorrelation(0, 1), 0.0);
    }
}
