//! Randomised invariants of the image primitives and the losses.

use galtrans::image_core::{
    fft2, high_pass, read_archive, regrid_plane, write_archive, ArchiveManifest, Augmentation, Cutout, HighPassKernel,
    Plane, SurveyId, SurveySpec,
};
use galtrans::losses::{adv_d_loss, auto_loss};
use galtrans::Tensor;
use proptest::prelude::*;

fn plane(n: usize) -> impl Strategy<Value = Plane> {
    prop::collection::vec(-100.0f64..100.0, n * n).prop_map(move |v| Plane::new(n, n, v).unwrap())
}

fn sized_plane() -> impl Strategy<Value = Plane> {
    (3usize..12).prop_flat_map(plane)
}

fn spec(size: usize) -> SurveySpec {
    SurveySpec {
        name: "p".into(),
        image_size: size,
        pixel_scale: 0.5,
        band_names: vec!["a".into(), "b".into()],
        psf_fwhm: vec![1.0, 1.0],
        noise_truth: None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn archive_round_trip(size in 1usize..6, values in prop::collection::vec(-1e3f32..1e3, 0..60)) {
        let per = 2 * size * size;
        let count = values.len() / per;
        let cutouts: Vec<Cutout> = (0..count)
            .map(|i| {
                let bands = (0..2)
                    .map(|b| {
                        let s = &values[i * per + b * size * size..i * per + (b + 1) * size * size];
                        Plane::new(size, size, s.iter().map(|&v| v as f64).collect()).unwrap()
                    })
                    .collect();
                let key = (i % 2 == 0).then(|| format!("k{i}"));
                Cutout::new(format!("o{i}"), SurveyId::X, 0.5, bands).unwrap().with_pairing_key(key)
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.gxc");
        let manifest = ArchiveManifest::for_cutouts(SurveyId::X, spec(size), &cutouts);
        write_archive(&cutouts, &manifest, &path).unwrap();
        let (back, m) = read_archive(&path).unwrap();
        prop_assert_eq!(back, cutouts);
        prop_assert_eq!(m, manifest);
    }

    #[test]
    fn dihedral_group_is_closed(p in plane(5), a in 0u8..16, b in 0u8..16) {
        let all: Vec<Augmentation> = Augmentation::all().collect();
        let (fa, fb) = (all[a as usize], all[b as usize]);
        let composed = fb.apply_plane(&fa.apply_plane(&p));
        prop_assert!(all.iter().any(|g| g.apply_plane(&p) == composed));
        // Every element has an inverse.
        prop_assert!(all.iter().any(|g| g.apply_plane(&fa.apply_plane(&p)) == p));
    }

    #[test]
    fn high_pass_is_linear(
        m1 in plane(7),
        m2 in plane(7),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        c in -50.0f64..50.0,
    ) {
        let k = HighPassKernel::laplacian();
        let mix = Plane::from_fn(7, 7, |i, j| a * m1.get(i, j) + b * m2.get(i, j));
        let lhs = high_pass(&mix, &k);
        let (h1, h2) = (high_pass(&m1, &k), high_pass(&m2, &k));
        for i in 0..7 {
            for j in 0..7 {
                let rhs = a * h1.get(i, j) + b * h2.get(i, j);
                let scale = (a.abs() * h1.get(i, j).abs() + b.abs() * h2.get(i, j).abs()).max(1.0);
                prop_assert!((lhs.get(i, j) - rhs).abs() <= 1e-10 * scale);
            }
        }
        prop_assert!(high_pass(&Plane::filled(7, 7, c), &k).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn parseval(p in sized_plane()) {
        let (re, im) = fft2(&p);
        let n = p.data().len() as f64;
        let space: f64 = p.data().iter().map(|v| v * v).sum();
        let freq: f64 = re.data().iter().zip(im.data()).map(|(a, b)| a * a + b * b).sum::<f64>() / n;
        prop_assert!((space - freq).abs() <= 1e-9 * space.max(1.0));
    }

    #[test]
    fn regrid_stays_within_input_range(p in sized_plane(), size in 2usize..20, c in -10.0f64..10.0) {
        let out = regrid_plane(&p, size).unwrap();
        let (lo, hi) = (p.min(), p.max());
        prop_assert!(out.data().iter().all(|&v| v >= lo - 1e-9 && v <= hi + 1e-9));
        let flat = regrid_plane(&Plane::filled(p.height(), p.width(), c), size).unwrap();
        prop_assert!(flat.data().iter().all(|&v| (v - c).abs() <= 1e-12 * c.abs().max(1.0)));
    }

    #[test]
    fn batch_losses_ignore_order(
        values in prop::collection::vec(-2.0f64..2.0, 4 * 2 * 9 * 4),
        probs in prop::collection::vec(0.01f64..0.99, 4 * 2 * 4),
        shift in 1usize..4,
    ) {
        let chunk = 2 * 9;
        let t = |k: usize| Tensor::new(&[4, 2, 3, 3], values[k * 72..(k + 1) * 72].to_vec());
        let rotate = |x: &Tensor, per: usize| {
            let mut d = x.data().to_vec();
            d.rotate_left(shift * per);
            Tensor::new(x.shape(), d)
        };
        let (a, b, c, d) = (t(0), t(1), t(2), t(3));
        let base = auto_loss(&a, &b, &c, &d).unwrap();
        let perm = auto_loss(&rotate(&a, chunk), &rotate(&b, chunk), &rotate(&c, chunk), &rotate(&d, chunk)).unwrap();
        prop_assert!((base - perm).abs() <= 1e-12 * base.max(1.0));

        let p = |k: usize| Tensor::new(&[4, 2], probs[k * 8..(k + 1) * 8].to_vec());
        let base = adv_d_loss(&p(0), &p(1), &p(2), &p(3)).unwrap();
        let perm = adv_d_loss(&rotate(&p(0), 2), &rotate(&p(1), 2), &rotate(&p(2), 2), &rotate(&p(3), 2)).unwrap();
        prop_assert!((base - perm).abs() <= 1e-12 * base.abs().max(1.0));
    }
}
