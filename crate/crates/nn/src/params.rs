use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};

/// Named block inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamShape {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
    /// Fan-in used for initialization.
    pub fan_in: usize,
}

impl ParamShape {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Builder for a shape table; blocks are laid out in registration order.
#[derive(Debug, Default, Clone)]
pub struct Layout {
    pub shapes: Vec<ParamShape>,
    total: usize,
}

impl Layout {
    /// Registers a block and returns its index in the table.
    pub fn add(&mut self, name: impl Into<String>, shape: Vec<usize>, fan_in: usize) -> usize {
        let p = ParamShape {
            name: name.into(),
            shape,
            offset: self.total,
            fan_in,
        };
        self.total += p.len();
        self.shapes.push(p);
        self.shapes.len() - 1
    }

    pub fn total(&self) -> usize {
        self.total
    }
}

/// Flat parameter vector with its shape table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub shapes: Vec<ParamShape>,
    pub values: Vec<f64>,
}

impl Params {
    /// Uniform `±1/√fan_in` initialization for every block.
    pub fn init(layout: &Layout, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = vec![0.0; layout.total()];
        for s in &layout.shapes {
            let bound = 1.0 / (s.fan_in.max(1) as f64).sqrt();
            for v in &mut values[s.range()] {
                *v = rng.random_range(-bound..bound);
            }
        }
        Self {
            shapes: layout.shapes.clone(),
            values,
        }
    }

    pub fn zeros(layout: &Layout) -> Self {
        Self {
            shapes: layout.shapes.clone(),
            values: vec![0.0; layout.total()],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn block(&self, index: usize) -> &[f64] {
        &self.values[self.shapes[index].range()]
    }

    pub fn check_layout(&self, layout: &Layout) -> Result<()> {
        if self.shapes != layout.shapes || self.values.len() != layout.total() {
            return Err(NnError::ShapeMismatch(
                "parameter table does not match the model layout".into(),
            ));
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(NnError::NonFinite(format!("parameter {i}")));
        }
        Ok(())
    }
}
