//! Embedding MLP: the tag `g`, the observable encoding and the noisy
//! statistics are each embedded by an affine map plus Mish, concatenated,
//! and passed through Mish hidden layers to a bounded output head.

use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};
use crate::loss::Loss;
use crate::model::{check_len, slice, Dense, Example, Model};
use crate::ops::{affine_backward, affine_forward, mish_backward, mish_inplace, softmax};
use crate::params::Layout;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Head {
    /// One value in `(-1, 1)`, trained with L2.
    ScalarTanh,
    /// A distribution, trained with the relative entropy.
    Softmax,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpSpec {
    pub observable_dim: usize,
    /// `K ×` statistic width.
    pub p_dim: usize,
    pub embed: usize,
    pub hidden: Vec<usize>,
    pub out_dim: usize,
    pub head: Head,
}

impl MlpSpec {
    pub fn validate(&self) -> Result<()> {
        if self.observable_dim == 0 || self.p_dim == 0 || self.embed == 0 || self.out_dim == 0 {
            return Err(NnError::InvalidConfig(
                "MLP dimensions must be positive".into(),
            ));
        }
        if self.hidden.contains(&0) {
            return Err(NnError::InvalidConfig(
                "hidden widths must be positive".into(),
            ));
        }
        if self.head == Head::ScalarTanh && self.out_dim != 1 {
            return Err(NnError::InvalidConfig(
                "the tanh head has a single output".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Mlp {
    pub spec: MlpSpec,
    layout: Layout,
    emb: [Dense; 3],
    layers: Vec<Dense>,
}

struct Cache {
    inputs: [Vec<f64>; 3],
    emb_pre: [Vec<f64>; 3],
    /// Activations entering each layer; `acts[0]` is the concatenated embedding.
    acts: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    out: Vec<f64>,
}

impl Mlp {
    pub fn new(spec: MlpSpec) -> Result<Self> {
        spec.validate()?;
        let mut layout = Layout::default();
        let emb = [
            Dense::register(&mut layout, "embed_g", 1, spec.embed),
            Dense::register(
                &mut layout,
                "embed_observable",
                spec.observable_dim,
                spec.embed,
            ),
            Dense::register(&mut layout, "embed_p", spec.p_dim, spec.embed),
        ];
        let mut layers = Vec::new();
        let mut width = 3 * spec.embed;
        for (i, &h) in spec.hidden.iter().enumerate() {
            layers.push(Dense::register(
                &mut layout,
                &format!("hidden{i}"),
                width,
                h,
            ));
            width = h;
        }
        layers.push(Dense::register(&mut layout, "output", width, spec.out_dim));
        Ok(Self {
            spec,
            layout,
            emb,
            layers,
        })
    }

    fn run(&self, params: &[f64], batch: &[&Example]) -> Cache {
        let shapes = &self.layout.shapes;
        let bsz = batch.len();
        let e = self.spec.embed;
        let inputs = [
            batch.iter().map(|x| x.g).collect::<Vec<_>>(),
            batch
                .iter()
                .flat_map(|x| x.observable.iter().copied())
                .collect(),
            batch.iter().flat_map(|x| x.p.iter().copied()).collect(),
        ];
        let mut emb_pre: [Vec<f64>; 3] = Default::default();
        let mut h0 = vec![0.0; bsz * 3 * e];
        for s in 0..3 {
            let d = self.emb[s];
            let mut z = vec![0.0; bsz * e];
            affine_forward(
                &inputs[s],
                bsz,
                slice(params, shapes, d.w),
                slice(params, shapes, d.b),
                e,
                &mut z,
            );
            for b in 0..bsz {
                mish_inplace(
                    &z[b * e..(b + 1) * e],
                    &mut h0[b * 3 * e + s * e..b * 3 * e + (s + 1) * e],
                );
            }
            emb_pre[s] = z;
        }
        let mut acts = vec![h0];
        let mut pre = Vec::new();
        for (i, d) in self.layers.iter().enumerate() {
            let mut z = vec![0.0; bsz * d.out];
            affine_forward(
                acts.last().unwrap(),
                bsz,
                slice(params, shapes, d.w),
                slice(params, shapes, d.b),
                d.out,
                &mut z,
            );
            if i + 1 < self.layers.len() {
                let mut a = vec![0.0; z.len()];
                mish_inplace(&z, &mut a);
                acts.push(a);
            }
            pre.push(z);
        }
        let logits = pre.last().unwrap();
        let out = match self.spec.head {
            Head::ScalarTanh => logits.iter().map(|v| v.tanh()).collect(),
            Head::Softmax => logits.chunks(self.spec.out_dim).flat_map(softmax).collect(),
        };
        Cache {
            inputs,
            emb_pre,
            acts,
            pre,
            out,
        }
    }
}

impl Model for Mlp {
    fn layout(&self) -> &Layout {
        &self.layout
    }

    fn loss(&self) -> Loss {
        match self.spec.head {
            Head::ScalarTanh => Loss::L2,
            Head::Softmax => Loss::Kl,
        }
    }

    fn check_example(&self, ex: &Example) -> Result<()> {
        check_len(
            "observable encoding",
            ex.observable.len(),
            self.spec.observable_dim,
        )?;
        check_len("noisy statistics", ex.p.len(), self.spec.p_dim)?;
        check_len("label", ex.label.len(), self.spec.out_dim)
    }

    fn forward(&self, params: &[f64], batch: &[&Example]) -> Vec<Vec<f64>> {
        if batch.is_empty() {
            return Vec::new();
        }
        self.run(params, batch)
            .out
            .chunks(self.spec.out_dim)
            .map(<[f64]>::to_vec)
            .collect()
    }

    fn loss_and_grad(&self, params: &[f64], batch: &[&Example]) -> (f64, Vec<f64>) {
        let shapes = &self.layout.shapes;
        let mut grad = vec![0.0; params.len()];
        let bsz = batch.len();
        if bsz == 0 {
            return (0.0, grad);
        }
        let cache = self.run(params, batch);
        let od = self.spec.out_dim;
        let loss_fn = self.loss();
        let mut total = 0.0;
        let mut dz = vec![0.0; bsz * od];
        for (b, ex) in batch.iter().enumerate() {
            let y = &cache.out[b * od..(b + 1) * od];
            let (l, dy) = loss_fn.value_and_grad(y, &ex.label);
            total += l;
            let dzb = &mut dz[b * od..(b + 1) * od];
            match self.spec.head {
                Head::ScalarTanh => {
                    for k in 0..od {
                        dzb[k] = dy[k] * (1.0 - y[k] * y[k]) / bsz as f64;
                    }
                }
                Head::Softmax => {
                    let dot: f64 = y.iter().zip(&dy).map(|(a, b)| a * b).sum();
                    for k in 0..od {
                        dzb[k] = y[k] * (dy[k] - dot) / bsz as f64;
                    }
                }
            }
        }
        for i in (0..self.layers.len()).rev() {
            let d = self.layers[i];
            let mut dx = vec![0.0; bsz * d.inp];
            let (w_range, b_range) = (shapes[d.w].range(), shapes[d.b].range());
            let (dw, db) = split_two(&mut grad, w_range, b_range);
            affine_backward(
                &cache.acts[i],
                bsz,
                &params[shapes[d.w].range()],
                d.out,
                &dz,
                dw,
                db,
                Some(&mut dx),
            );
            if i > 0 {
                mish_backward(&cache.pre[i - 1], &mut dx);
            }
            dz = dx;
        }
        let e = self.spec.embed;
        for s in 0..3 {
            let d = self.emb[s];
            let mut ds = vec![0.0; bsz * e];
            for b in 0..bsz {
                ds[b * e..(b + 1) * e]
                    .copy_from_slice(&dz[b * 3 * e + s * e..b * 3 * e + (s + 1) * e]);
            }
            mish_backward(&cache.emb_pre[s], &mut ds);
            let (dw, db) = split_two(&mut grad, shapes[d.w].range(), shapes[d.b].range());
            affine_backward(
                &cache.inputs[s],
                bsz,
                &params[shapes[d.w].range()],
                d.out,
                &ds,
                dw,
                db,
                None,
            );
        }
        (total / bsz as f64, grad)
    }
}

/// Two disjoint mutable ranges of one slice, the first preceding the second.
pub(crate) fn split_two(
    v: &mut [f64],
    a: std::ops::Range<usize>,
    b: std::ops::Range<usize>,
) -> (&mut [f64], &mut [f64]) {
    debug_assert!(a.end <= b.start);
    let (left, right) = v.split_at_mut(b.start);
    (&mut left[a], &mut right[..b.end - b.start])
}
