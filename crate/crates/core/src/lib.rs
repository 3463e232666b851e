//! Work/leisure trip classification for travel reviews: corpus ingestion,
//! language filtering, label propagation, cross-validated training and
//! statistical comparison of models.

pub mod classifier;
pub mod corpus;
pub mod error;
pub mod evalplan;
pub mod extproto;
pub mod hashing;
pub mod labeling;
pub mod langid;
pub mod manifest;
pub mod pipeline;
pub mod rng;
pub mod stats;

pub use classifier::{ClassifierModel, Hyperparams, Prediction};
pub use corpus::{Review, ReviewSet, TripLabel};
pub use error::{Error, Result};
pub use evalplan::FoldPlan;
pub use labeling::BinaryLabel;
pub use langid::LangIdModel;
pub use pipeline::{run_pipeline, PipelineConfig};
