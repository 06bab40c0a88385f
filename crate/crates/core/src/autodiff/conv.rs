use super::{Graph, Var};
use crate::tensor::{gemm, Tensor};

#[derive(Clone, Copy)]
struct ConvGeom {
    cin: usize,
    h: usize,
    w: usize,
    k: usize,
    stride: usize,
    oh: usize,
    ow: usize,
}

impl ConvGeom {
    fn rows(&self) -> usize {
        self.cin * self.k * self.k
    }

    fn cols(&self) -> usize {
        self.oh * self.ow
    }
}

fn im2col(plane: &[f64], g: &ConvGeom, cols: &mut [f64]) {
    let l = g.cols();
    for ci in 0..g.cin {
        let src = &plane[ci * g.h * g.w..(ci + 1) * g.h * g.w];
        for ky in 0..g.k {
            for kx in 0..g.k {
                let row = (ci * g.k + ky) * g.k + kx;
                let dst = &mut cols[row * l..(row + 1) * l];
                for oy in 0..g.oh {
                    let sy = oy * g.stride + ky;
                    let line = &src[sy * g.w..(sy + 1) * g.w];
                    let out = &mut dst[oy * g.ow..(oy + 1) * g.ow];
                    if g.stride == 1 {
                        out.copy_from_slice(&line[kx..kx + g.ow]);
                    } else {
                        for (ox, o) in out.iter_mut().enumerate() {
                            *o = line[ox * g.stride + kx];
                        }
                    }
                }
            }
        }
    }
}

fn col2im(cols: &[f64], g: &ConvGeom, plane: &mut [f64]) {
    let l = g.cols();
    for ci in 0..g.cin {
        let dst = &mut plane[ci * g.h * g.w..(ci + 1) * g.h * g.w];
        for ky in 0..g.k {
            for kx in 0..g.k {
                let row = (ci * g.k + ky) * g.k + kx;
                let src = &cols[row * l..(row + 1) * l];
                for oy in 0..g.oh {
                    let sy = oy * g.stride + ky;
                    for ox in 0..g.ow {
                        dst[sy * g.w + ox * g.stride + kx] += src[oy * g.ow + ox];
                    }
                }
            }
        }
    }
}

impl Graph {
    /// Valid (unpadded) 2-D cross-correlation.
    ///
    /// `x (N, Cin, H, W)`, `weight (Cout, Cin, k, k)`, `bias (Cout)`; output
    /// `(N, Cout, (H - k) / stride + 1, (W - k) / stride + 1)`.
    pub fn conv2d(&mut self, x: Var, weight: Var, bias: Var, stride: usize) -> Var {
        let (n, cin, h, w) = self.value(x).dims4();
        let (cout, cin2, k, k2) = self.value(weight).dims4();
        assert_eq!(cin, cin2, "conv2d channel mismatch");
        assert_eq!(k, k2, "conv2d needs square kernels");
        assert!(h >= k && w >= k, "conv2d input {h}x{w} smaller than kernel {k}");
        assert_eq!(self.shape(bias), &[cout], "conv2d bias shape");
        let geom = ConvGeom {
            cin,
            h,
            w,
            k,
            stride,
            oh: (h - k) / stride + 1,
            ow: (w - k) / stride + 1,
        };
        let (kk, l) = (geom.rows(), geom.cols());
        let xv = self.value(x).clone();
        let wv = self.value(weight).clone();
        let bd = self.value(bias).data().to_vec();
        let mut out = vec![0.0; n * cout * l];
        let mut cols = vec![0.0; kk * l];
        for b in 0..n {
            im2col(&xv.data()[b * cin * h * w..(b + 1) * cin * h * w], &geom, &mut cols);
            let dst = &mut out[b * cout * l..(b + 1) * cout * l];
            for (row, &bb) in dst.chunks_mut(l).zip(&bd) {
                row.fill(bb);
            }
            gemm(cout, kk, l, wv.data(), false, &cols, false, dst, 1.0);
        }
        let value = Tensor::new(&[n, cout, geom.oh, geom.ow], out);
        self.push(
            value,
            &[x, weight, bias],
            Box::new(move |g, needs| {
                let gd = g.data();
                let mut gx = needs[0].then(|| vec![0.0; n * cin * h * w]);
                let mut gw = needs[1].then(|| vec![0.0; cout * kk]);
                let gb = needs[2].then(|| {
                    let mut d = vec![0.0; cout];
                    for b in 0..n {
                        for (co, acc) in d.iter_mut().enumerate() {
                            let start = (b * cout + co) * l;
                            *acc += gd[start..start + l].iter().sum::<f64>();
                        }
                    }
                    Tensor::new(&[cout], d)
                });
                let mut cols = vec![0.0; kk * l];
                let mut dcols = vec![0.0; kk * l];
                for b in 0..n {
                    let gout = &gd[b * cout * l..(b + 1) * cout * l];
                    if let Some(gw) = gw.as_mut() {
                        im2col(&xv.data()[b * cin * h * w..(b + 1) * cin * h * w], &geom, &mut cols);
                        gemm(cout, l, kk, gout, false, &cols, true, gw, 1.0);
                    }
                    if let Some(gx) = gx.as_mut() {
                        gemm(kk, cout, l, wv.data(), true, gout, false, &mut dcols, 0.0);
                        col2im(&dcols, &geom, &mut gx[b * cin * h * w..(b + 1) * cin * h * w]);
                    }
                }
                vec![
                    gx.map(|d| Tensor::new(&[n, cin, h, w], d)),
                    gw.map(|d| Tensor::new(&[cout, cin, k, k], d)),
                    gb,
                ]
            }),
        )
    }

    /// Valid per-channel cross-correlation: `x (N, C, H, W)` with
    /// `kernel (C, kh, kw)` gives `(N, C, H - kh + 1, W - kw + 1)`; channels
    /// never mix.
    pub fn depthwise_conv(&mut self, x: Var, kernel: Var) -> Var {
        let (n, c, h, w) = self.value(x).dims4();
        let ks = self.shape(kernel).to_vec();
        assert_eq!(ks.len(), 3, "depthwise kernel must be (C, kh, kw)");
        assert_eq!(ks[0], c, "depthwise channel mismatch");
        let (kh, kw) = (ks[1], ks[2]);
        assert!(h >= kh && w >= kw, "depthwise input smaller than kernel");
        let (oh, ow) = (h - kh + 1, w - kw + 1);
        let xv = self.value(x).clone();
        let kv = self.value(kernel).clone();
        let mut data = vec![0.0; n * c * oh * ow];
        for b in 0..n {
            for ch in 0..c {
                let src = xv.plane(b, ch);
                let ker = &kv.data()[ch * kh * kw..(ch + 1) * kh * kw];
                let dst = &mut data[(b * c + ch) * oh * ow..(b * c + ch + 1) * oh * ow];
                for ky in 0..kh {
                    for kx in 0..kw {
                        let kval = ker[ky * kw + kx];
                        if kval == 0.0 {
                            continue;
                        }
                        for oy in 0..oh {
                            let line = &src[(oy + ky) * w + kx..(oy + ky) * w + kx + ow];
                            for (o, s) in dst[oy * ow..(oy + 1) * ow].iter_mut().zip(line) {
                                *o += kval * s;
                            }
                        }
                    }
                }
            }
        }
        let value = Tensor::new(&[n, c, oh, ow], data);
        self.push(
            value,
            &[x, kernel],
            Box::new(move |g, needs| {
                let gd = g.data();
                let mut gx = needs[0].then(|| vec![0.0; n * c * h * w]);
                let mut gk = needs[1].then(|| vec![0.0; c * kh * kw]);
                for b in 0..n {
                    for ch in 0..c {
                        let gout = &gd[(b * c + ch) * oh * ow..(b * c + ch + 1) * oh * ow];
                        let src = xv.plane(b, ch);
                        let ker = &kv.data()[ch * kh * kw..(ch + 1) * kh * kw];
                        for ky in 0..kh {
                            for kx in 0..kw {
                                if let Some(gk) = gk.as_mut() {
                                    let mut acc = 0.0;
                                    for oy in 0..oh {
                                        let line = &src[(oy + ky) * w + kx..(oy + ky) * w + kx + ow];
                                        acc += gout[oy * ow..(oy + 1) * ow]
                                            .iter()
                                            .zip(line)
                                            .map(|(a, b)| a * b)
                                            .sum::<f64>();
                                    }
                                    gk[(ch * kh + ky) * kw + kx] += acc;
                                }
                                if let Some(gx) = gx.as_mut() {
                                    let kval = ker[ky * kw + kx];
                                    let dst = &mut gx[(b * c + ch) * h * w..(b * c + ch + 1) * h * w];
                                    for oy in 0..oh {
                                        let row = &mut dst[(oy + ky) * w + kx..(oy + ky) * w + kx + ow];
                                        for (d, gv) in row.iter_mut().zip(&gout[oy * ow..(oy + 1) * ow]) {
                                            *d += kval * gv;
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                vec![
                    gx.map(|d| Tensor::new(&[n, c, h, w], d)),
                    gk.map(|d| Tensor::new(&[c, kh, kw], d)),
                ]
            }),
        )
    }
}
