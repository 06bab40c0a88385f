use std::f64::consts::PI;

use super::{Graph, Var};
use crate::tensor::{gemm, Tensor};

/// Source index of a half-sample symmetric (edge-repeating) mirror.
#[inline]
pub(crate) fn mirror(i: isize, n: usize) -> usize {
    let n = n as isize;
    let mut i = i;
    // Repeated reflection handles pads wider than the input.
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - i - 1;
        } else {
            return i as usize;
        }
    }
}

/// `cos` and `sin` DFT matrices of order `n` (both symmetric).
fn dft_matrices(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut c = vec![0.0; n * n];
    let mut s = vec![0.0; n * n];
    for u in 0..n {
        for y in 0..n {
            // Reduce the phase index first so large products stay exact.
            let phase = 2.0 * PI * ((u * y) % n) as f64 / n as f64;
            c[u * n + y] = phase.cos();
            s[u * n + y] = phase.sin();
        }
    }
    (c, s)
}

impl Graph {
    /// Mirror padding `[top, bottom, left, right]` that repeats the edge pixel.
    pub fn pad_symmetric(&mut self, x: Var, pad: [usize; 4]) -> Var {
        let (n, c, h, w) = self.value(x).dims4();
        let [top, bottom, left, right] = pad;
        let (oh, ow) = (h + top + bottom, w + left + right);
        let rows: Vec<usize> = (0..oh).map(|i| mirror(i as isize - top as isize, h)).collect();
        let cols: Vec<usize> = (0..ow).map(|j| mirror(j as isize - left as isize, w)).collect();
        let xd = self.value(x).data();
        let mut data = Vec::with_capacity(n * c * oh * ow);
        for plane in xd.chunks(h * w) {
            for &r in &rows {
                for &cc in &cols {
                    data.push(plane[r * w + cc]);
                }
            }
        }
        let value = Tensor::new(&[n, c, oh, ow], data);
        self.push(
            value,
            &[x],
            Box::new(move |g, _| {
                let mut d = vec![0.0; n * c * h * w];
                for (dst, src) in d.chunks_mut(h * w).zip(g.data().chunks(oh * ow)) {
                    for (i, &r) in rows.iter().enumerate() {
                        for (j, &cc) in cols.iter().enumerate() {
                            dst[r * w + cc] += src[i * ow + j];
                        }
                    }
                }
                vec![Some(Tensor::new(&[n, c, h, w], d))]
            }),
        )
    }

    /// Remove `[top, bottom, left, right]` border pixels.
    pub fn crop(&mut self, x: Var, crop: [usize; 4]) -> Var {
        let (n, c, h, w) = self.value(x).dims4();
        let [top, bottom, left, right] = crop;
        assert!(top + bottom < h && left + right < w, "crop larger than input");
        let (oh, ow) = (h - top - bottom, w - left - right);
        let xd = self.value(x).data();
        let mut data = Vec::with_capacity(n * c * oh * ow);
        for plane in xd.chunks(h * w) {
            for i in 0..oh {
                let start = (i + top) * w + left;
                data.extend_from_slice(&plane[start..start + ow]);
            }
        }
        let value = Tensor::new(&[n, c, oh, ow], data);
        self.push(
            value,
            &[x],
            Box::new(move |g, _| {
                let mut d = vec![0.0; n * c * h * w];
                for (dst, src) in d.chunks_mut(h * w).zip(g.data().chunks(oh * ow)) {
                    for i in 0..oh {
                        let start = (i + top) * w + left;
                        dst[start..start + ow].copy_from_slice(&src[i * ow..(i + 1) * ow]);
                    }
                }
                vec![Some(Tensor::new(&[n, c, h, w], d))]
            }),
        )
    }

    /// `2 x 2` average pooling with stride 2 (odd trailing rows/cols dropped).
    pub fn avg_pool2(&mut self, x: Var) -> Var {
        let (n, c, h, w) = self.value(x).dims4();
        let (oh, ow) = (h / 2, w / 2);
        assert!(oh > 0 && ow > 0, "avg_pool2 on {h}x{w} input");
        let xd = self.value(x).data();
        let mut data = Vec::with_capacity(n * c * oh * ow);
        for plane in xd.chunks(h * w) {
            for i in 0..oh {
                for j in 0..ow {
                    let a = 2 * i * w + 2 * j;
                    data.push(0.25 * (plane[a] + plane[a + 1] + plane[a + w] + plane[a + w + 1]));
                }
            }
        }
        let value = Tensor::new(&[n, c, oh, ow], data);
        self.push(
            value,
            &[x],
            Box::new(move |g, _| {
                let mut d = vec![0.0; n * c * h * w];
                for (dst, src) in d.chunks_mut(h * w).zip(g.data().chunks(oh * ow)) {
                    for i in 0..oh {
                        for j in 0..ow {
                            let v = 0.25 * src[i * ow + j];
                            let a = 2 * i * w + 2 * j;
                            dst[a] += v;
                            dst[a + 1] += v;
                            dst[a + w] += v;
                            dst[a + w + 1] += v;
                        }
                    }
                }
                vec![Some(Tensor::new(&[n, c, h, w], d))]
            }),
        )
    }

    /// Nearest-neighbour `x2` upsampling.
    pub fn upsample_nearest2(&mut self, x: Var) -> Var {
        let (n, c, h, w) = self.value(x).dims4();
        let (oh, ow) = (2 * h, 2 * w);
        let xd = self.value(x).data();
        let mut data = Vec::with_capacity(n * c * oh * ow);
        for plane in xd.chunks(h * w) {
            for i in 0..oh {
                for j in 0..ow {
                    data.push(plane[(i / 2) * w + j / 2]);
                }
            }
        }
        let value = Tensor::new(&[n, c, oh, ow], data);
        self.push(
            value,
            &[x],
            Box::new(move |g, _| {
                let mut d = vec![0.0; n * c * h * w];
                for (dst, src) in d.chunks_mut(h * w).zip(g.data().chunks(oh * ow)) {
                    for i in 0..oh {
                        for j in 0..ow {
                            dst[(i / 2) * w + j / 2] += src[i * ow + j];
                        }
                    }
                }
                vec![Some(Tensor::new(&[n, c, h, w], d))]
            }),
        )
    }

    /// Sub-pixel rearrangement `(N, C r^2, H, W) -> (N, C, rH, rW)`.
    ///
    /// Output pixel `(c, h r + i, w r + j)` reads input channel `c r^2 + i r + j`.
    pub fn pixel_shuffle(&mut self, x: Var, r: usize) -> Var {
        let (n, cin, h, w) = self.value(x).dims4();
        assert!(r > 0 && cin % (r * r) == 0, "pixel_shuffle channel count");
        let c = cin / (r * r);
        let (oh, ow) = (h * r, w * r);
        let index = move |b: usize, ch: usize, y: usize, xx: usize| {
            let src_c = ch * r * r + (y % r) * r + xx % r;
            ((b * cin + src_c) * h + y / r) * w + xx / r
        };
        let xd = self.value(x).data();
        let mut data = Vec::with_capacity(n * cin * h * w);
        for b in 0..n {
            for ch in 0..c {
                for y in 0..oh {
                    for xx in 0..ow {
                        data.push(xd[index(b, ch, y, xx)]);
                    }
                }
            }
        }
        let value = Tensor::new(&[n, c, oh, ow], data);
        self.push(
            value,
            &[x],
            Box::new(move |g, _| {
                let gd = g.data();
                let mut d = vec![0.0; n * cin * h * w];
                let mut k = 0;
                for b in 0..n {
                    for ch in 0..c {
                        for y in 0..oh {
                            for xx in 0..ow {
                                d[index(b, ch, y, xx)] = gd[k];
                                k += 1;
                            }
                        }
                    }
                }
                vec![Some(Tensor::new(&[n, cin, h, w], d))]
            }),
        )
    }

    /// 2-D discrete Fourier transform of every plane, scaled by `scale`.
    ///
    /// `(N, C, H, W) -> (N, 2C, H, W)`; channel `2c` holds the real part and
    /// `2c + 1` the imaginary part of input channel `c`. Realised as dense
    /// cosine/sine matrix products.
    pub fn dft2(&mut self, x: Var, scale: f64) -> Var {
        let (n, c, h, w) = self.value(x).dims4();
        let (ch_, sh) = dft_matrices(h);
        let (cw, sw) = dft_matrices(w);
        let hw = h * w;
        let xd = self.value(x).data();
        let mut data = vec![0.0; n * 2 * c * hw];
        let mut p = vec![0.0; hw];
        let mut q = vec![0.0; hw];
        for (idx, plane) in xd.chunks(hw).enumerate() {
            gemm(h, w, w, plane, false, &cw, false, &mut p, 0.0);
            gemm(h, w, w, plane, false, &sw, false, &mut q, 0.0);
            let (re_start, im_start) = (2 * idx * hw, (2 * idx + 1) * hw);
            let (head, tail) = data.split_at_mut(im_start);
            let re = &mut head[re_start..re_start + hw];
            let im = &mut tail[..hw];
            let mut t = vec![0.0; hw];
            gemm(h, h, w, &ch_, false, &p, false, re, 0.0);
            gemm(h, h, w, &sh, false, &q, false, &mut t, 0.0);
            for (r, tv) in re.iter_mut().zip(&t) {
                *r = scale * (*r - tv);
            }
            gemm(h, h, w, &sh, false, &p, false, im, 0.0);
            gemm(h, h, w, &ch_, false, &q, false, im, 1.0);
            for v in im.iter_mut() {
                *v *= -scale;
            }
        }
        let value = Tensor::new(&[n, 2 * c, h, w], data);
        self.push(
            value,
            &[x],
            Box::new(move |g, _| {
                let gd = g.data();
                let mut d = vec![0.0; n * c * hw];
                let mut a = vec![0.0; hw];
                let mut b = vec![0.0; hw];
                let mut t = vec![0.0; hw];
                for (idx, dst) in d.chunks_mut(hw).enumerate() {
                    let gre = &gd[2 * idx * hw..(2 * idx + 1) * hw];
                    let gim = &gd[(2 * idx + 1) * hw..(2 * idx + 2) * hw];
                    // a = C_h gRe - S_h gIm ; b = -(S_h gRe + C_h gIm)
                    gemm(h, h, w, &ch_, false, gre, false, &mut a, 0.0);
                    gemm(h, h, w, &sh, false, gim, false, &mut t, 0.0);
                    for (av, tv) in a.iter_mut().zip(&t) {
                        *av -= tv;
                    }
                    gemm(h, h, w, &sh, false, gre, false, &mut b, 0.0);
                    gemm(h, h, w, &ch_, false, gim, false, &mut b, 1.0);
                    for v in b.iter_mut() {
                        *v = -*v;
                    }
                    // dst = scale * (a C_w + b S_w)
                    gemm(h, w, w, &a, false, &cw, false, dst, 0.0);
                    gemm(h, w, w, &b, false, &sw, false, dst, 1.0);
                    for v in dst.iter_mut() {
                        *v *= scale;
                    }
                }
                vec![Some(Tensor::new(&[n, c, h, w], d))]
            }),
        )
    }
}
