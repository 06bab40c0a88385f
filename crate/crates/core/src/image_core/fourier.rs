use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::Plane;

/// Unnormalised forward 2-D DFT; returns `(real, imaginary)` planes in
/// natural (unshifted) frequency order.
pub fn fft2(map: &Plane) -> (Plane, Plane) {
    let (h, w) = (map.height(), map.width());
    let mut buf: Vec<Complex<f64>> = map.data().iter().map(|&v| Complex::new(v, 0.0)).collect();
    let mut planner = FftPlanner::<f64>::new();
    let row_fft = planner.plan_fft_forward(w);
    for row in buf.chunks_mut(w) {
        row_fft.process(row);
    }
    let col_fft = planner.plan_fft_forward(h);
    let mut col = vec![Complex::new(0.0, 0.0); h];
    for j in 0..w {
        for i in 0..h {
            col[i] = buf[i * w + j];
        }
        col_fft.process(&mut col);
        for i in 0..h {
            buf[i * w + j] = col[i];
        }
    }
    let re = Plane::new(h, w, buf.iter().map(|c| c.re).collect()).unwrap();
    let im = Plane::new(h, w, buf.iter().map(|c| c.im).collect()).unwrap();
    (re, im)
}

/// `sqrt(re^2 + im^2)` per bin.
pub fn fourier_amplitude(re: &Plane, im: &Plane) -> Plane {
    assert_eq!((re.height(), re.width()), (im.height(), im.width()));
    let data = re
        .data()
        .iter()
        .zip(im.data())
        .map(|(a, b)| a.hypot(*b))
        .collect();
    Plane::new(re.height(), re.width(), data).unwrap()
}

/// Move the zero-frequency bin to the centre, for display.
pub fn fftshift(p: &Plane) -> Plane {
    let (h, w) = (p.height(), p.width());
    Plane::from_fn(h, w, |i, j| p.get((i + h - h / 2) % h, (j + w - w / 2) % w))
}
