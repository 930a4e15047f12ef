//! Ridge polynomial neural networks with error and output feedback, trained
//! online by real-time recurrent learning with constructive block growth,
//! and a Mackey-Glass forecasting harness built around them.

pub mod dataset;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod network;
pub mod trainer;

pub use dataset::{MgParams, NormParams, Pattern, Series, SplitRule};
pub use error::{Error, Result};
pub use network::{FeedbackMode, InitRange, RidgePolyNet};
pub use trainer::{GradientMode, GrowthHistory, RtrlState, TrainerConfig};
