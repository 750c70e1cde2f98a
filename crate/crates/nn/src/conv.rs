//! Encoder-decoder convolutional network for phase-space grids: an
//! embedding stage, three down-sampling and three up-sampling stages with
//! skip connections, and a 1×1 tanh output layer. Samples are processed one
//! at a time, so there is no batch statistic anywhere.

use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};
use crate::loss::Loss;
use crate::model::{check_len, Example, Model};
use crate::ops::{gemm, gemm_at, gemm_bt, mish_backward, mish_inplace};
use crate::params::Layout;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvSpec {
    /// Number of noisy grids `K`; one extra channel carries the tag.
    pub in_grids: usize,
    /// Side length of the square grid; must be divisible by 8.
    pub size: usize,
    /// Channel widths of the embedding and the three encoder depths.
    pub widths: [usize; 4],
}

impl ConvSpec {
    pub fn validate(&self) -> Result<()> {
        if self.in_grids == 0 || self.size == 0 || self.size % 8 != 0 {
            return Err(NnError::InvalidConfig(format!(
                "conv net needs K > 0 and a side divisible by 8, got K = {}, side = {}",
                self.in_grids, self.size
            )));
        }
        if self.widths.contains(&0) {
            return Err(NnError::InvalidConfig(
                "channel widths must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct ConvLayer {
    w: usize,
    b: usize,
    cin: usize,
    cout: usize,
    kernel: usize,
}

#[derive(Debug, Clone)]
pub struct UNet {
    pub spec: ConvSpec,
    layout: Layout,
    layers: Vec<ConvLayer>,
}

/// Saved values of one convolution for the backward pass.
struct ConvTape {
    cols: Vec<f64>,
    pre: Vec<f64>,
    side: usize,
}

fn im2col(x: &[f64], c: usize, side: usize) -> Vec<f64> {
    let hw = side * side;
    let mut cols = vec![0.0; c * 9 * hw];
    for ch in 0..c {
        let plane = &x[ch * hw..(ch + 1) * hw];
        for ky in 0..3 {
            for kx in 0..3 {
                let row =
                    &mut cols[((ch * 9) + ky * 3 + kx) * hw..((ch * 9) + ky * 3 + kx + 1) * hw];
                for y in 0..side {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= side as isize {
                        continue;
                    }
                    let src = &plane[sy as usize * side..(sy as usize + 1) * side];
                    let dst = &mut row[y * side..(y + 1) * side];
                    match kx {
                        0 => dst[1..].copy_from_slice(&src[..side - 1]),
                        1 => dst.copy_from_slice(src),
                        _ => dst[..side - 1].copy_from_slice(&src[1..]),
                    }
                }
            }
        }
    }
    cols
}

fn col2im(cols: &[f64], c: usize, side: usize) -> Vec<f64> {
    let hw = side * side;
    let mut x = vec![0.0; c * hw];
    for ch in 0..c {
        let plane = &mut x[ch * hw..(ch + 1) * hw];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &cols[((ch * 9) + ky * 3 + kx) * hw..((ch * 9) + ky * 3 + kx + 1) * hw];
                for y in 0..side {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= side as isize {
                        continue;
                    }
                    let src = &row[y * side..(y + 1) * side];
                    let dst = &mut plane[sy as usize * side..(sy as usize + 1) * side];
                    match kx {
                        0 => dst[..side - 1]
                            .iter_mut()
                            .zip(&src[1..])
                            .for_each(|(d, s)| *d += s),
                        1 => dst.iter_mut().zip(src).for_each(|(d, s)| *d += s),
                        _ => dst[1..]
                            .iter_mut()
                            .zip(&src[..side - 1])
                            .for_each(|(d, s)| *d += s),
                    }
                }
            }
        }
    }
    x
}

/// 2×2 average pooling.
fn pool(x: &[f64], c: usize, side: usize) -> Vec<f64> {
    let h = side / 2;
    let mut out = vec![0.0; c * h * h];
    for ch in 0..c {
        for y in 0..h {
            for xx in 0..h {
                let base = ch * side * side;
                let s = x[base + 2 * y * side + 2 * xx]
                    + x[base + 2 * y * side + 2 * xx + 1]
                    + x[base + (2 * y + 1) * side + 2 * xx]
                    + x[base + (2 * y + 1) * side + 2 * xx + 1];
                out[ch * h * h + y * h + xx] = 0.25 * s;
            }
        }
    }
    out
}

fn pool_backward(dy: &[f64], c: usize, side: usize) -> Vec<f64> {
    let h = side / 2;
    let mut dx = vec![0.0; c * side * side];
    for ch in 0..c {
        for y in 0..side {
            for xx in 0..side {
                dx[ch * side * side + y * side + xx] = 0.25 * dy[ch * h * h + (y / 2) * h + xx / 2];
            }
        }
    }
    dx
}

/// Source taps of ×2 bilinear up-sampling with half-pixel centers.
fn upsample_taps(n: usize) -> Vec<(usize, usize, f64)> {
    (0..2 * n)
        .map(|o| {
            let src = ((o as f64 + 0.5) / 2.0 - 0.5).max(0.0);
            let i0 = src.floor() as usize;
            let i1 = (i0 + 1).min(n - 1);
            (i0, i1, src - i0 as f64)
        })
        .collect()
}

fn upsample(x: &[f64], c: usize, side: usize) -> Vec<f64> {
    let taps = upsample_taps(side);
    let big = 2 * side;
    let mut out = vec![0.0; c * big * big];
    for ch in 0..c {
        let plane = &x[ch * side * side..(ch + 1) * side * side];
        for (oy, &(y0, y1, wy)) in taps.iter().enumerate() {
            for (ox, &(x0, x1, wx)) in taps.iter().enumerate() {
                let top = (1.0 - wx) * plane[y0 * side + x0] + wx * plane[y0 * side + x1];
                let bottom = (1.0 - wx) * plane[y1 * side + x0] + wx * plane[y1 * side + x1];
                out[ch * big * big + oy * big + ox] = (1.0 - wy) * top + wy * bottom;
            }
        }
    }
    out
}

fn upsample_backward(dy: &[f64], c: usize, side: usize) -> Vec<f64> {
    let taps = upsample_taps(side);
    let big = 2 * side;
    let mut dx = vec![0.0; c * side * side];
    for ch in 0..c {
        let plane = &mut dx[ch * side * side..(ch + 1) * side * side];
        for (oy, &(y0, y1, wy)) in taps.iter().enumerate() {
            for (ox, &(x0, x1, wx)) in taps.iter().enumerate() {
                let g = dy[ch * big * big + oy * big + ox];
                plane[y0 * side + x0] += (1.0 - wy) * (1.0 - wx) * g;
                plane[y0 * side + x1] += (1.0 - wy) * wx * g;
                plane[y1 * side + x0] += wy * (1.0 - wx) * g;
                plane[y1 * side + x1] += wy * wx * g;
            }
        }
    }
    dx
}

impl UNet {
    pub fn new(spec: ConvSpec) -> Result<Self> {
        spec.validate()?;
        let [c0, c1, c2, c3] = spec.widths;
        let cin = spec.in_grids + 1;
        let plan: [(usize, usize, usize); 15] = [
            (cin, c0, 3),
            (c0, c0, 3),
            (c0, c1, 3),
            (c1, c1, 3),
            (c1, c2, 3),
            (c2, c2, 3),
            (c2, c3, 3),
            (c3, c3, 3),
            (2 * c3, c2, 3),
            (c2, c2, 3),
            (2 * c2, c1, 3),
            (c1, c1, 3),
            (2 * c1, c0, 3),
            (c0, c0, 3),
            (c0, 1, 1),
        ];
        let mut layout = Layout::default();
        let layers = plan
            .iter()
            .enumerate()
            .map(|(i, &(ci, co, k))| {
                let fan = ci * k * k;
                let w = layout.add(format!("conv{i}.weight"), vec![co, ci, k, k], fan);
                let b = layout.add(format!("conv{i}.bias"), vec![co], fan);
                ConvLayer {
                    w,
                    b,
                    cin: ci,
                    cout: co,
                    kernel: k,
                }
            })
            .collect();
        Ok(Self {
            spec,
            layout,
            layers,
        })
    }

    fn conv(&self, params: &[f64], li: usize, x: &[f64], side: usize) -> ConvTape {
        let l = self.layers[li];
        let hw = side * side;
        let cols = if l.kernel == 3 {
            im2col(x, l.cin, side)
        } else {
            x.to_vec()
        };
        let bias = &params[self.layout.shapes[l.b].range()];
        let mut pre = vec![0.0; l.cout * hw];
        for (co, row) in pre.chunks_mut(hw).enumerate() {
            row.fill(bias[co]);
        }
        gemm(
            l.cout,
            l.cin * l.kernel * l.kernel,
            hw,
            1.0,
            &params[self.layout.shapes[l.w].range()],
            &cols,
            1.0,
            &mut pre,
        );
        ConvTape { cols, pre, side }
    }

    /// Accumulates parameter gradients and returns the input gradient.
    fn conv_backward(
        &self,
        params: &[f64],
        li: usize,
        tape: &ConvTape,
        dpre: &[f64],
        grad: &mut [f64],
    ) -> Vec<f64> {
        let l = self.layers[li];
        let hw = tape.side * tape.side;
        let kk = l.cin * l.kernel * l.kernel;
        let wr = self.layout.shapes[l.w].range();
        gemm_bt(
            l.cout,
            hw,
            kk,
            1.0,
            dpre,
            &tape.cols,
            1.0,
            &mut grad[wr.clone()],
        );
        let br = self.layout.shapes[l.b].range();
        for (co, row) in dpre.chunks(hw).enumerate() {
            grad[br.start + co] += row.iter().sum::<f64>();
        }
        let mut dcols = vec![0.0; kk * hw];
        gemm_at(kk, l.cout, hw, 1.0, &params[wr], dpre, 0.0, &mut dcols);
        if l.kernel == 3 {
            col2im(&dcols, l.cin, tape.side)
        } else {
            dcols
        }
    }

    /// Convolution followed by Mish; returns the tape and the activation.
    fn block(&self, params: &[f64], li: usize, x: &[f64], side: usize) -> (ConvTape, Vec<f64>) {
        let tape = self.conv(params, li, x, side);
        let mut act = vec![0.0; tape.pre.len()];
        mish_inplace(&tape.pre, &mut act);
        (tape, act)
    }

    fn block_backward(
        &self,
        params: &[f64],
        li: usize,
        tape: &ConvTape,
        mut dact: Vec<f64>,
        grad: &mut [f64],
    ) -> Vec<f64> {
        mish_backward(&tape.pre, &mut dact);
        self.conv_backward(params, li, tape, &dact, grad)
    }

    fn input_tensor(&self, ex: &Example) -> Vec<f64> {
        let hw = self.spec.size * self.spec.size;
        let mut x = Vec::with_capacity((self.spec.in_grids + 1) * hw);
        x.extend_from_slice(&ex.p);
        x.extend(std::iter::repeat_n(ex.g, hw));
        x
    }

    /// Forward pass for one sample; with `grad` set, also backpropagates the
    /// loss (scaled by `weight`) and returns the loss.
    fn sample(
        &self,
        params: &[f64],
        ex: &Example,
        backward: Option<(&mut [f64], f64)>,
    ) -> (Vec<f64>, f64) {
        let s = self.spec.size;
        let [_, c1, c2, c3] = self.spec.widths;
        let x = self.input_tensor(ex);
        let (t0, e1) = self.block(params, 0, &x, s);
        let (t1, e2) = self.block(params, 1, &e1, s);
        let (t2, d1a) = self.block(params, 2, &e2, s);
        let (t3, d1) = self.block(params, 3, &d1a, s);
        let q1 = pool(&d1, c1, s);
        let (t4, d2a) = self.block(params, 4, &q1, s / 2);
        let (t5, d2) = self.block(params, 5, &d2a, s / 2);
        let q2 = pool(&d2, c2, s / 2);
        let (t6, d3a) = self.block(params, 6, &q2, s / 4);
        let (t7, d3) = self.block(params, 7, &d3a, s / 4);
        let q3 = pool(&d3, c3, s / 4);
        let cat1 = [upsample(&q3, c3, s / 8), d3].concat();
        let (t8, u1a) = self.block(params, 8, &cat1, s / 4);
        let (t9, u1b) = self.block(params, 9, &u1a, s / 4);
        let cat2 = [upsample(&u1b, c2, s / 4), d2].concat();
        let (t10, u2a) = self.block(params, 10, &cat2, s / 2);
        let (t11, u2b) = self.block(params, 11, &u2a, s / 2);
        let cat3 = [upsample(&u2b, c1, s / 2), d1].concat();
        let (t12, u3a) = self.block(params, 12, &cat3, s);
        let (t13, u3b) = self.block(params, 13, &u3a, s);
        let t14 = self.conv(params, 14, &u3b, s);
        let out: Vec<f64> = t14.pre.iter().map(|v| v.tanh()).collect();
        let Some((grad, weight)) = backward else {
            return (out, 0.0);
        };
        let (loss, dy) = self.loss().value_and_grad(&out, &ex.label);
        let dpre: Vec<f64> = dy
            .iter()
            .zip(&out)
            .map(|(g, y)| weight * g * (1.0 - y * y))
            .collect();
        let du3b = self.conv_backward(params, 14, &t14, &dpre, grad);
        let du3a = self.block_backward(params, 13, &t13, du3b, grad);
        let dcat3 = self.block_backward(params, 12, &t12, du3a, grad);
        let (dup3, dd1_skip) = dcat3.split_at(c1 * s * s);
        let du2b = upsample_backward(dup3, c1, s / 2);
        let du2a = self.block_backward(params, 11, &t11, du2b, grad);
        let dcat2 = self.block_backward(params, 10, &t10, du2a, grad);
        let (dup2, dd2_skip) = dcat2.split_at(c2 * (s / 2) * (s / 2));
        let du1b = upsample_backward(dup2, c2, s / 4);
        let du1a = self.block_backward(params, 9, &t9, du1b, grad);
        let dcat1 = self.block_backward(params, 8, &t8, du1a, grad);
        let (dup1, dd3_skip) = dcat1.split_at(c3 * (s / 4) * (s / 4));
        let dq3 = upsample_backward(dup1, c3, s / 8);
        let dd3: Vec<f64> = pool_backward(&dq3, c3, s / 4)
            .iter()
            .zip(dd3_skip)
            .map(|(a, b)| a + b)
            .collect();
        let dd3a = self.block_backward(params, 7, &t7, dd3, grad);
        let dq2 = self.block_backward(params, 6, &t6, dd3a, grad);
        let dd2: Vec<f64> = pool_backward(&dq2, c2, s / 2)
            .iter()
            .zip(dd2_skip)
            .map(|(a, b)| a + b)
            .collect();
        let dd2a = self.block_backward(params, 5, &t5, dd2, grad);
        let dq1 = self.block_backward(params, 4, &t4, dd2a, grad);
        let dd1: Vec<f64> = pool_backward(&dq1, c1, s)
            .iter()
            .zip(dd1_skip)
            .map(|(a, b)| a + b)
            .collect();
        let dd1a = self.block_backward(params, 3, &t3, dd1, grad);
        let de2 = self.block_backward(params, 2, &t2, dd1a, grad);
        let de1 = self.block_backward(params, 1, &t1, de2, grad);
        self.block_backward(params, 0, &t0, de1, grad);
        (out, loss)
    }
}

impl Model for UNet {
    fn layout(&self) -> &Layout {
        &self.layout
    }

    fn loss(&self) -> Loss {
        Loss::L1
    }

    fn check_example(&self, ex: &Example) -> Result<()> {
        let hw = self.spec.size * self.spec.size;
        check_len("noisy grids", ex.p.len(), self.spec.in_grids * hw)?;
        check_len("label grid", ex.label.len(), hw)
    }

    fn forward(&self, params: &[f64], batch: &[&Example]) -> Vec<Vec<f64>> {
        batch
            .iter()
            .map(|ex| self.sample(params, ex, None).0)
            .collect()
    }

    fn loss_and_grad(&self, params: &[f64], batch: &[&Example]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; params.len()];
        if batch.is_empty() {
            return (0.0, grad);
        }
        let w = 1.0 / batch.len() as f64;
        let total: f64 = batch
            .iter()
            .map(|ex| self.sample(params, ex, Some((&mut grad, w))).1)
            .sum();
        (total * w, grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn im2col_col2im_are_adjoint() {
        let side = 5;
        let x: Vec<f64> = (0..2 * side * side)
            .map(|i| (i as f64 * 0.37).sin())
            .collect();
        let y: Vec<f64> = (0..2 * 9 * side * side)
            .map(|i| (i as f64 * 0.11).cos())
            .collect();
        let lhs: f64 = im2col(&x, 2, side).iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = col2im(&y, 2, side).iter().zip(&x).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn resampling_backward_is_adjoint() {
        let side = 6;
        let x: Vec<f64> = (0..side * side).map(|i| (i as f64 * 0.7).sin()).collect();
        let y: Vec<f64> = (0..4 * side * side)
            .map(|i| (i as f64 * 0.3).cos())
            .collect();
        let lhs: f64 = upsample(&x, 1, side)
            .iter()
            .zip(&y)
            .map(|(a, b)| a * b)
            .sum();
        let rhs: f64 = upsample_backward(&y, 1, side)
            .iter()
            .zip(&x)
            .map(|(a, b)| a * b)
            .sum();
        assert!((lhs - rhs).abs() < 1e-12);
        let small: Vec<f64> = (0..side * side / 4).map(|i| i as f64).collect();
        let lhs: f64 = pool(&x, 1, side)
            .iter()
            .zip(&small)
            .map(|(a, b)| a * b)
            .sum();
        let rhs: f64 = pool_backward(&small, 1, side)
            .iter()
            .zip(&x)
            .map(|(a, b)| a * b)
            .sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn constant_image_upsamples_to_constant() {
        let up = upsample(&[2.5; 16], 1, 4);
        assert!(up.iter().all(|v| (v - 2.5).abs() < 1e-15));
    }
}
