use super::{Graph, Var};
use crate::tensor::{gemm, Tensor};

/// Side of the tied noise-correlation kernel.
pub const SYM_SIDE: usize = 7;
/// Free parameters of a centrally symmetric `7 x 7` kernel.
pub const SYM_FREE: usize = 25;

/// Free-parameter slot of kernel position `(i, j)`.
///
/// Row-major positions `0..24` own slots `0..24`, the centre owns slot 24,
/// and every position after the centre shares the slot of its mirror image.
pub fn symmetric_slot(i: usize, j: usize) -> usize {
    let p = i * SYM_SIDE + j;
    let center = SYM_SIDE * SYM_SIDE / 2;
    if p <= center {
        p
    } else {
        2 * center - p
    }
}

impl Graph {
    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Var {
        let old = self.shape(a).to_vec();
        let value = self.value(a).clone().reshape(shape);
        self.push(
            value,
            &[a],
            Box::new(move |g, _| vec![Some(g.clone().reshape(&old))]),
        )
    }

    /// Concatenate along dimension 1; all other dimensions must agree.
    pub fn concat(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let first = self.shape(parts[0]).to_vec();
        let outer = first[0];
        let tail: Vec<usize> = first[2..].to_vec();
        let inner: usize = tail.iter().product();
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let s = self.shape(p);
            assert_eq!(s[0], outer, "concat batch mismatch");
            assert_eq!(&s[2..], &tail[..], "concat trailing dims mismatch");
            widths.push(s[1]);
        }
        let total: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(outer * total * inner);
        for n in 0..outer {
            for (&p, &c) in parts.iter().zip(&widths) {
                let src = self.value(p).data();
                data.extend_from_slice(&src[n * c * inner..(n + 1) * c * inner]);
            }
        }
        let mut shape = vec![outer, total];
        shape.extend_from_slice(&tail);
        let value = Tensor::new(&shape, data);
        let shapes: Vec<Vec<usize>> = parts.iter().map(|&p| self.shape(p).to_vec()).collect();
        self.push(
            value,
            parts,
            Box::new(move |g, needs| {
                let gd = g.data();
                let mut offset = 0;
                let mut out = Vec::with_capacity(widths.len());
                for ((&c, shape), &need) in widths.iter().zip(&shapes).zip(needs) {
                    if need {
                        let mut d = Vec::with_capacity(outer * c * inner);
                        for n in 0..outer {
                            let base = n * total * inner + offset * inner;
                            d.extend_from_slice(&gd[base..base + c * inner]);
                        }
                        out.push(Some(Tensor::new(shape, d)));
                    } else {
                        out.push(None);
                    }
                    offset += c;
                }
                out
            }),
        )
    }

    /// Channels `start..start + len` along dimension 1.
    pub fn slice_channels(&mut self, a: Var, start: usize, len: usize) -> Var {
        let shape = self.shape(a).to_vec();
        let outer = shape[0];
        let c = shape[1];
        assert!(start + len <= c, "slice out of range");
        let inner: usize = shape[2..].iter().product();
        let src = self.value(a).data();
        let mut data = Vec::with_capacity(outer * len * inner);
        for n in 0..outer {
            let base = (n * c + start) * inner;
            data.extend_from_slice(&src[base..base + len * inner]);
        }
        let mut out_shape = shape.clone();
        out_shape[1] = len;
        let value = Tensor::new(&out_shape, data);
        self.push(
            value,
            &[a],
            Box::new(move |g, _| {
                let mut full = Tensor::zeros(&shape);
                let fd = full.data_mut();
                let gd = g.data();
                for n in 0..outer {
                    let base = (n * c + start) * inner;
                    fd[base..base + len * inner]
                        .copy_from_slice(&gd[n * len * inner..(n + 1) * len * inner]);
                }
                vec![Some(full)]
            }),
        )
    }

    /// Fully connected layer: `x (N, F) -> x W^T + b`, with `W (O, F)`, `b (O)`.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Var {
        let (n, f) = self.value(x).dims2();
        let (o, f2) = self.value(w).dims2();
        assert_eq!(f, f2, "linear input width mismatch");
        assert_eq!(self.shape(b), &[o], "linear bias shape");
        let xv = self.value(x).clone();
        let wv = self.value(w).clone();
        let mut out = vec![0.0; n * o];
        gemm(n, f, o, xv.data(), false, wv.data(), true, &mut out, 0.0);
        let bd = self.value(b).data();
        for row in out.chunks_mut(o) {
            for (v, bb) in row.iter_mut().zip(bd) {
                *v += bb;
            }
        }
        let value = Tensor::new(&[n, o], out);
        self.push(
            value,
            &[x, w, b],
            Box::new(move |g, needs| {
                let gd = g.data();
                let gx = needs[0].then(|| {
                    let mut d = vec![0.0; n * f];
                    gemm(n, o, f, gd, false, wv.data(), false, &mut d, 0.0);
                    Tensor::new(&[n, f], d)
                });
                let gw = needs[1].then(|| {
                    let mut d = vec![0.0; o * f];
                    gemm(o, n, f, gd, true, xv.data(), false, &mut d, 0.0);
                    Tensor::new(&[o, f], d)
                });
                let gb = needs[2].then(|| {
                    let mut d = vec![0.0; o];
                    for row in gd.chunks(o) {
                        for (acc, v) in d.iter_mut().zip(row) {
                            *acc += v;
                        }
                    }
                    Tensor::new(&[o], d)
                });
                vec![gx, gw, gb]
            }),
        )
    }

    /// Per-channel spatial mean: `(N, C, H, W) -> (N, C)`.
    pub fn global_mean(&mut self, x: Var) -> Var {
        let (n, c, h, w) = self.value(x).dims4();
        let hw = h * w;
        let data: Vec<f64> = self
            .value(x)
            .data()
            .chunks(hw)
            .map(|p| p.iter().sum::<f64>() / hw as f64)
            .collect();
        let value = Tensor::new(&[n, c], data);
        self.push(
            value,
            &[x],
            Box::new(move |g, _| {
                let mut d = Vec::with_capacity(n * c * hw);
                for &gv in g.data() {
                    d.extend(std::iter::repeat_n(gv / hw as f64, hw));
                }
                vec![Some(Tensor::new(&[n, c, h, w], d))]
            }),
        )
    }

    /// Per-channel mean, max and min: `(N, C, H, W) -> (N, 3C)` laid out as
    /// `[means | maxes | mins]`.
    pub fn global_pool_trio(&mut self, x: Var) -> Var {
        let (n, c, h, w) = self.value(x).dims4();
        let hw = h * w;
        let xd = self.value(x).data();
        let mut data = vec![0.0; n * 3 * c];
        let mut arg_max = vec![0usize; n * c];
        let mut arg_min = vec![0usize; n * c];
        for b in 0..n {
            for ch in 0..c {
                let plane = &xd[(b * c + ch) * hw..(b * c + ch + 1) * hw];
                let (mut imax, mut imin) = (0, 0);
                for (i, &v) in plane.iter().enumerate() {
                    if v > plane[imax] {
                        imax = i;
                    }
                    if v < plane[imin] {
                        imin = i;
                    }
                }
                let row = &mut data[b * 3 * c..(b + 1) * 3 * c];
                row[ch] = plane.iter().sum::<f64>() / hw as f64;
                row[c + ch] = plane[imax];
                row[2 * c + ch] = plane[imin];
                arg_max[b * c + ch] = imax;
                arg_min[b * c + ch] = imin;
            }
        }
        let value = Tensor::new(&[n, 3 * c], data);
        self.push(
            value,
            &[x],
            Box::new(move |g, _| {
                let gd = g.data();
                let mut d = vec![0.0; n * c * hw];
                for b in 0..n {
                    for ch in 0..c {
                        let row = &gd[b * 3 * c..(b + 1) * 3 * c];
                        let plane = &mut d[(b * c + ch) * hw..(b * c + ch + 1) * hw];
                        let gm = row[ch] / hw as f64;
                        for v in plane.iter_mut() {
                            *v += gm;
                        }
                        plane[arg_max[b * c + ch]] += row[c + ch];
                        plane[arg_min[b * c + ch]] += row[2 * c + ch];
                    }
                }
                vec![Some(Tensor::new(&[n, c, h, w], d))]
            }),
        )
    }

    /// Multiply every `(n, c)` plane of `x (N, C, H, W)` by `gate[n, c]`.
    pub fn channel_gate(&mut self, x: Var, gate: Var) -> Var {
        let (n, c, h, w) = self.value(x).dims4();
        assert_eq!(self.shape(gate), &[n, c], "gate shape mismatch");
        let hw = h * w;
        let xv = self.value(x).clone();
        let gv = self.value(gate).clone();
        let mut data = xv.data().to_vec();
        for (plane, &s) in data.chunks_mut(hw).zip(gv.data()) {
            for v in plane {
                *v *= s;
            }
        }
        let value = Tensor::new(&[n, c, h, w], data);
        self.push(
            value,
            &[x, gate],
            Box::new(move |g, needs| {
                let gd = g.data();
                let gx = needs[0].then(|| {
                    let mut d = gd.to_vec();
                    for (plane, &s) in d.chunks_mut(hw).zip(gv.data()) {
                        for v in plane {
                            *v *= s;
                        }
                    }
                    Tensor::new(&[n, c, h, w], d)
                });
                let gg = needs[1].then(|| {
                    let d: Vec<f64> = gd
                        .chunks(hw)
                        .zip(xv.data().chunks(hw))
                        .map(|(gp, xp)| gp.iter().zip(xp).map(|(a, b)| a * b).sum())
                        .collect();
                    Tensor::new(&[n, c], d)
                });
                vec![gx, gg]
            }),
        )
    }

    /// Realise centrally symmetric `7 x 7` kernels from free parameters:
    /// `(C, 25) -> (C, 7, 7)`. Tied positions share storage, so the gradient of
    /// a free parameter is the sum over its positions.
    pub fn symmetric_kernel(&mut self, free: Var) -> Var {
        let (c, k) = self.value(free).dims2();
        assert_eq!(k, SYM_FREE, "symmetric kernel needs {SYM_FREE} free parameters");
        let fd = self.value(free).data();
        let mut data = Vec::with_capacity(c * SYM_SIDE * SYM_SIDE);
        for ch in 0..c {
            for i in 0..SYM_SIDE {
                for j in 0..SYM_SIDE {
                    data.push(fd[ch * SYM_FREE + symmetric_slot(i, j)]);
                }
            }
        }
        let value = Tensor::new(&[c, SYM_SIDE, SYM_SIDE], data);
        self.push(
            value,
            &[free],
            Box::new(move |g, _| {
                let gd = g.data();
                let mut d = vec![0.0; c * SYM_FREE];
                for ch in 0..c {
                    for i in 0..SYM_SIDE {
                        for j in 0..SYM_SIDE {
                            d[ch * SYM_FREE + symmetric_slot(i, j)] +=
                                gd[(ch * SYM_SIDE + i) * SYM_SIDE + j];
                        }
                    }
                }
                vec![Some(Tensor::new(&[c, SYM_FREE], d))]
            }),
        )
    }
}
