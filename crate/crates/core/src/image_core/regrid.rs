use super::{Cutout, Plane};
use crate::error::{Error, Result};

/// Bilinear resampling of a square plane onto `new_size x new_size`
/// (align-corners: the outer pixel centres map onto each other).
pub fn regrid_plane(p: &Plane, new_size: usize) -> Result<Plane> {
    if new_size < 2 {
        return Err(Error::InvalidSize(format!("regrid target {new_size} < 2")));
    }
    let n = p.height();
    if n == new_size {
        return Ok(p.clone());
    }
    if n == 1 {
        return Ok(Plane::filled(new_size, new_size, p.get(0, 0)));
    }
    let ratio = (n - 1) as f64 / (new_size - 1) as f64;
    let coords: Vec<(usize, usize, f64)> = (0..new_size)
        .map(|i| {
            let s = i as f64 * ratio;
            let lo = (s.floor() as usize).min(n - 1);
            let hi = (lo + 1).min(n - 1);
            (lo, hi, s - lo as f64)
        })
        .collect();
    Ok(Plane::from_fn(new_size, new_size, |i, j| {
        let (r0, r1, fr) = coords[i];
        let (c0, c1, fc) = coords[j];
        let top = p.get(r0, c0) * (1.0 - fc) + p.get(r0, c1) * fc;
        let bottom = p.get(r1, c0) * (1.0 - fc) + p.get(r1, c1) * fc;
        top * (1.0 - fr) + bottom * fr
    }))
}

/// Resample every band of `c` to `new_size` pixels per side, rescaling the
/// pixel scale so the angular span is unchanged.
pub fn regrid_bilinear(c: &Cutout, new_size: usize) -> Result<Cutout> {
    let bands = c
        .bands()
        .iter()
        .map(|b| regrid_plane(b, new_size))
        .collect::<Result<Vec<_>>>()?;
    let scale = c.pixel_scale() * c.size() as f64 / new_size as f64;
    c.with_bands(bands, scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image_core::SurveyId;

    #[test]
    fn two_by_two_to_three_by_three() {
        let p = Plane::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let q = regrid_plane(&p, 3).unwrap();
        assert_eq!(q.get(0, 0), 1.0);
        assert_eq!(q.get(0, 2), 2.0);
        assert_eq!(q.get(2, 0), 3.0);
        assert_eq!(q.get(2, 2), 4.0);
        assert!((q.get(1, 1) - 2.5).abs() < 1e-15);
        assert!((q.get(0, 1) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn too_small_target_rejected() {
        let p = Plane::zeros(4, 4);
        assert!(matches!(regrid_plane(&p, 1), Err(Error::InvalidSize(_))));
    }

    #[test]
    fn preserves_angular_span() {
        let c = Cutout::new("o", SurveyId::Y, 0.186, vec![Plane::filled(136, 136, 2.0)]).unwrap();
        let r = regrid_bilinear(&c, 64).unwrap();
        assert!((r.pixel_scale() * 64.0 - 0.186 * 136.0).abs() < 1e-12);
        assert!(r.band(0).data().iter().all(|&v| v == 2.0));
    }
}
