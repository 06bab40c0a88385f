//! Monte-Carlo and closed-form oracles for the evaluation metrics and the
//! report files.

use std::f64::consts::{PI, SQRT_2};

use galtrans::evaluation::{
    emit_report, fourier_amplitude_stack, global_flux_difference, mean_amplitude_spectrum, noise_sigma_reference,
    FluxDifferenceRecord, NoiseReference,
};
use galtrans::image_core::{high_pass, Cutout, HighPassKernel, Plane, SurveyId};
use galtrans::networks::{AmplitudeMode, NoiseEmulator, NoiseEmulatorArch, SymmetricKernel};
use galtrans::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gaussian_plane(rng: &mut ChaCha8Rng, n: usize, std: f64) -> Plane {
    Plane::from_fn(n, n, |_, _| std * rng.sample::<f64, _>(StandardNormal))
}

fn one_band(id: &str, plane: Plane) -> Cutout {
    Cutout::new(id, SurveyId::Y, 0.2, vec![plane]).unwrap()
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn flux_difference_of_two_noise_draws() {
    // |N(0, sqrt(2) s)| has mean 2 s / sqrt(pi).
    let (n, s) = (16, 0.3);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let signal = Plane::from_fn(n, n, |i, j| (i * j) as f64 / 10.0);
    let noisy = |rng: &mut ChaCha8Rng| {
        let noise = gaussian_plane(rng, n, s);
        Plane::from_fn(n, n, |i, j| signal.get(i, j) + noise.get(i, j))
    };
    let diffs: Vec<f64> = (0..1000)
        .map(|_| {
            let a = one_band("a", noisy(&mut rng));
            let b = one_band("b", noisy(&mut rng));
            global_flux_difference(&a, &b, &["r".into()]).unwrap()[0].sum_abs_diff
        })
        .collect();
    let expected = (n * n) as f64 * s * 2.0 / PI.sqrt();
    let (mean, se) = mean_and_se(&diffs);
    assert!((mean - expected).abs() < 3.0 * se, "{mean} vs {expected} (se {se})");
}

#[test]
fn flux_difference_symmetry_and_shape_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = one_band("a", gaussian_plane(&mut rng, 8, 1.0));
    let b = one_band("b", gaussian_plane(&mut rng, 8, 1.0));
    let ab = global_flux_difference(&a, &b, &["r".into()]).unwrap();
    let ba = global_flux_difference(&b, &a, &["r".into()]).unwrap();
    assert_eq!(ab[0].sum_abs_diff, ba[0].sum_abs_diff);
    let c = one_band("c", gaussian_plane(&mut rng, 9, 1.0));
    assert!(matches!(global_flux_difference(&a, &c, &["r".into()]), Err(Error::Shape(_))));
}

fn delta_emulator() -> NoiseEmulator {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut ne = NoiseEmulator::new(NoiseEmulatorArch::new(1), &mut rng).unwrap();
    ne.set_kernel(0, &SymmetricKernel::delta());
    ne
}

#[test]
fn noise_reference_of_a_delta_emulator() {
    let ne = delta_emulator();
    let band = ["r".to_string()];
    let zero = noise_sigma_reference(&ne, &band, 10, 8, AmplitudeMode::Frozen(0.0), 1).unwrap();
    assert_eq!(zero[0].sigma, 0.0);

    // Sum of S^2 half-normals: mean S^2 a sqrt(2/pi), variance S^2 a^2 (1 - 2/pi).
    let (a, s, n) = (0.5, 16usize, 10_000usize);
    let r = noise_sigma_reference(&ne, &band, n, s, AmplitudeMode::Frozen(a), 7).unwrap();
    let expected = (s * s) as f64 * a * (2.0 / PI).sqrt();
    let sd = (s as f64) * a * (1.0 - 2.0 / PI).sqrt();
    // Standard error of a sample median: sqrt(pi/2) sd / sqrt(n).
    let se = (PI / 2.0).sqrt() * sd / (n as f64).sqrt();
    assert!((r[0].sigma - expected).abs() < 3.0 * se, "{} vs {expected}", r[0].sigma);
    assert_eq!(r[0].sqrt2_sigma, SQRT_2 * r[0].sigma);

    let doubled = noise_sigma_reference(&ne, &band, n, s, AmplitudeMode::Frozen(2.0 * a), 7).unwrap();
    assert!((doubled[0].sigma / r[0].sigma - 2.0).abs() < 1e-12);
}

#[test]
fn single_sample_reference_is_that_draw() {
    let ne = delta_emulator();
    let r = noise_sigma_reference(&ne, &["r".into()], 1, 9, AmplitudeMode::Frozen(1.3), 42).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    // One draw: the amplitude seed, then the field.
    let _z1: f64 = rng.sample(StandardNormal);
    let expected: f64 = (0..81).map(|_| 1.3 * rng.sample::<f64, _>(StandardNormal).abs()).sum();
    assert!((r[0].sigma - expected).abs() < 1e-12 * expected);
    assert!(matches!(
        noise_sigma_reference(&ne, &["r".into()], 0, 9, AmplitudeMode::Learned, 0),
        Err(Error::EmptyInput(_))
    ));
}

/// Direct O(n^4) DFT magnitude with the zero frequency moved to the centre.
fn naive_shifted_amplitude(p: &Plane) -> Plane {
    let n = p.height();
    let mut out = Plane::zeros(n, n);
    for u in 0..n {
        for v in 0..n {
            let (mut re, mut im) = (0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    let ang = -2.0 * PI * ((u * i + v * j) as f64) / n as f64;
                    re += p.get(i, j) * ang.cos();
                    im += p.get(i, j) * ang.sin();
                }
            }
            out.set((u + n / 2) % n, (v + n / 2) % n, (re * re + im * im).sqrt());
        }
    }
    out
}

#[test]
fn stack_of_one_is_its_amplitude_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let img = gaussian_plane(&mut rng, 10, 1.0);
    let k = HighPassKernel::laplacian();
    let stack = fourier_amplitude_stack(&[img.clone()], &k).unwrap();
    let oracle = naive_shifted_amplitude(&high_pass(&img, &k));
    for (a, b) in stack.amplitude.data().iter().zip(oracle.data()) {
        assert!((a - b).abs() < 1e-10);
    }
    assert_eq!(stack.count, 1);
    assert!(matches!(fourier_amplitude_stack(&[], &k), Err(Error::EmptyInput(_))));
}

#[test]
fn white_noise_spectrum_is_flat() {
    // The delta filter is not zero-DC, so the unfiltered spectrum stands in
    // for a delta high-pass.
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let maps: Vec<Plane> = (0..1000).map(|_| gaussian_plane(&mut rng, 16, 1.0)).collect();
    let stack = mean_amplitude_spectrum(&maps).unwrap();
    let (mean, se) = mean_and_se(stack.amplitude.data());
    let spread = se * (stack.amplitude.data().len() as f64).sqrt() / mean;
    assert!(spread < 0.05, "relative spread {spread}");
}

#[test]
fn stacks_are_order_free_and_merge_by_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let maps: Vec<Plane> = (0..5).map(|_| gaussian_plane(&mut rng, 8, 1.0)).collect();
    let k = HighPassKernel::laplacian();
    let all = fourier_amplitude_stack(&maps, &k).unwrap();
    let mut rev = maps.clone();
    rev.reverse();
    assert!(all.amplitude.data().iter().zip(fourier_amplitude_stack(&rev, &k).unwrap().amplitude.data()).all(|(a, b)| (a - b).abs() < 1e-12));
    let merged = fourier_amplitude_stack(&maps[..2], &k)
        .unwrap()
        .merge(&fourier_amplitude_stack(&maps[2..], &k).unwrap())
        .unwrap();
    assert_eq!(merged.count, 5);
    for (a, b) in merged.amplitude.data().iter().zip(all.amplitude.data()) {
        assert!((a - b).abs() < 1e-12);
    }
}

fn record(id: &str, band: &str, orig: f64, diff: f64) -> FluxDifferenceRecord {
    FluxDifferenceRecord {
        object_id: id.into(),
        band: band.into(),
        sum_abs_orig: orig,
        sum_abs_diff: diff,
    }
}

fn read_csv(path: &std::path::Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(str::to_owned).collect()).collect()
}

#[test]
fn empty_report_has_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(&[], &[], &[], dir.path()).unwrap();
    let text = std::fs::read_to_string(&files.records_csv).unwrap();
    assert_eq!(text, "object_id,band,sum_abs_orig,sum_abs_diff\n");
    assert!(files.scatter_plots.is_empty());
}

#[test]
fn report_rows_and_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let records = [record("g2", "r", 100.0, 10.0), record("g1", "r", 1000.0, 20.0), record("g0", "z", 10.0, 1.0)];
    let refs = [NoiseReference {
        band: "r".into(),
        sigma: 5.0,
        sqrt2_sigma: 5.0 * SQRT_2,
    }];
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let stack = fourier_amplitude_stack(&[gaussian_plane(&mut rng, 8, 1.0)], &HighPassKernel::laplacian()).unwrap();
    let files = emit_report(&records, &[("real_r".into(), stack.clone())], &refs, dir.path()).unwrap();

    let rows = read_csv(&files.records_csv);
    let ids: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(ids, ["g2", "g1", "g0"]);

    assert_eq!(files.scatter_plots.len(), 2);
    assert!(files.scatter_plots.iter().all(|p| p.is_file()));
    let points = read_csv(&dir.path().join("scatter_r_points.csv"));
    assert_eq!(points.len(), 2);
    for (row, rec) in points.iter().zip(&records[..2]) {
        assert_eq!(row[0], rec.object_id);
        assert_eq!(row[1].parse::<f64>().unwrap(), rec.sum_abs_orig.log10());
        assert_eq!(row[2].parse::<f64>().unwrap(), rec.sum_abs_diff.log10());
    }
    let levels = read_csv(&dir.path().join("scatter_r_reference.csv"));
    assert_eq!(levels.len(), 2);
    assert_eq!(levels[1][3].parse::<f64>().unwrap(), (5.0 * SQRT_2).log10());
    assert!(read_csv(&dir.path().join("scatter_z_reference.csv")).is_empty());

    let bins = read_csv(&dir.path().join("fourier_real_r.csv"));
    assert_eq!(bins.len(), 64);
    assert_eq!(bins[9][2].parse::<f64>().unwrap(), stack.amplitude.get(1, 1));
    assert!(dir.path().join("fourier_real_r.png").is_file());
}

#[test]
fn unwritable_report_directory_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("occupied");
    std::fs::write(&file, b"x").unwrap();
    assert!(matches!(emit_report(&[], &[], &[], &file), Err(Error::Io { .. })));
}
