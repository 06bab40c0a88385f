use serde::{Deserialize, Serialize};

use super::Plane;
use crate::autodiff::spatial_mirror;
use crate::error::{Error, Result};

/// A square, odd-sided convolution kernel whose coefficients sum to zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct HighPassKernel {
    side: usize,
    coeffs: Vec<f64>,
}

impl HighPassKernel {
    pub fn new(side: usize, coeffs: Vec<f64>) -> Result<Self> {
        if side % 2 == 0 || coeffs.len() != side * side {
            return Err(Error::ContractViolation(format!(
                "high-pass kernel must be odd-sided and square, got side {side} with {} values",
                coeffs.len()
            )));
        }
        let sum: f64 = coeffs.iter().sum();
        let scale: f64 = coeffs.iter().map(|v| v.abs()).sum();
        if sum.abs() > 1e-12 * scale.max(1.0) {
            return Err(Error::ContractViolation(format!(
                "high-pass kernel coefficients sum to {sum}, not zero"
            )));
        }
        Ok(Self { side, coeffs })
    }

    /// 8-neighbour Laplacian scaled by `1/8`.
    pub fn laplacian() -> Self {
        let mut coeffs = vec![-1.0 / 8.0; 9];
        coeffs[4] = 1.0;
        Self { side: 3, coeffs }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

impl Default for HighPassKernel {
    fn default() -> Self {
        Self::laplacian()
    }
}

impl TryFrom<Vec<Vec<f64>>> for HighPassKernel {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        let side = rows.len();
        if rows.iter().any(|r| r.len() != side) {
            return Err(Error::ContractViolation("high-pass kernel rows must be square".into()));
        }
        HighPassKernel::new(side, rows.into_iter().flatten().collect())
    }
}

impl From<HighPassKernel> for Vec<Vec<f64>> {
    fn from(k: HighPassKernel) -> Self {
        k.coeffs.chunks(k.side).map(<[f64]>::to_vec).collect()
    }
}

/// Same-size cross-correlation of `map` with a zero-DC `kernel`, using
/// edge-repeating symmetric padding.
///
/// Taps act on differences from the centre pixel, so constant regions map
/// to exactly zero.
pub fn high_pass(map: &Plane, kernel: &HighPassKernel) -> Plane {
    let (h, w) = (map.height(), map.width());
    let k = kernel.side;
    let half = (k / 2) as isize;
    let mut out = Plane::zeros(h, w);
    for i in 0..h {
        for j in 0..w {
            let centre = map.get(i, j);
            let mut acc = 0.0;
            for a in 0..k {
                let r = spatial_mirror(i as isize + a as isize - half, h);
                for b in 0..k {
                    let c = spatial_mirror(j as isize + b as isize - half, w);
                    acc += kernel.coeffs[a * k + b] * (map.get(r, c) - centre);
                }
            }
            out.set(i, j, acc);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonzero_dc_and_even_side() {
        assert!(matches!(
            HighPassKernel::new(3, vec![1.0; 9]),
            Err(Error::ContractViolation(_))
        ));
        assert!(HighPassKernel::new(2, vec![1.0, -1.0, 1.0, -1.0]).is_err());
    }

    #[test]
    fn constant_map_goes_to_zero() {
        let m = Plane::filled(6, 5, 3.25);
        let out = high_pass(&m, &HighPassKernel::laplacian());
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn centred_impulse_gives_rotated_kernel() {
        let coeffs = vec![1.0, 2.0, -3.0, 4.0, -5.0, 0.5, -0.25, 0.75, 0.0];
        let k = HighPassKernel::new(3, coeffs.clone()).unwrap();
        let mut m = Plane::zeros(5, 5);
        m.set(2, 2, 1.0);
        let out = high_pass(&m, &k);
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(out.get(1 + a, 1 + b), coeffs[(2 - a) * 3 + (2 - b)]);
            }
        }
    }

    #[test]
    fn kernel_json_is_nested_rows() {
        let json = serde_json::to_string(&HighPassKernel::laplacian()).unwrap();
        assert!(json.starts_with("[[-0.125,-0.125,-0.125],[-0.125,1.0"));
        let back: HighPassKernel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, HighPassKernel::laplacian());
        assert!(serde_json::from_str::<HighPassKernel>("[[1,1],[1,1]]").is_err());
    }
}
