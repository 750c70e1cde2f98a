//! Neural models for learned error mitigation, with hand-written
//! backpropagation: an embedding MLP for scalar or distribution statistics
//! and an encoder-decoder conv net for phase-space grids.

pub mod adam;
pub mod checkpoint;
pub mod conv;
pub mod error;
pub mod gradcheck;
pub mod loss;
pub mod mlp;
pub mod model;
pub mod ops;
pub mod params;
pub mod train;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{Architecture, Checkpoint};
pub use conv::{ConvSpec, UNet};
pub use error::{NnError, Result};
pub use gradcheck::{grad_check, GradCheckReport};
pub use loss::Loss;
pub use mlp::{Head, Mlp, MlpSpec};
pub use model::{Example, Model};
pub use params::{Layout, Params};
pub use train::{mitigate, train, EpochStats, TrainConfig, TrainOutcome};
