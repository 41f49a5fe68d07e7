//! Evaluation metrics for AI-mediated user experience.
//!
//! Three measures are computed from logged interaction sessions:
//!
//! * [`iei`]: Interaction Entropy Index, the Shannon entropy in bits of the
//!   satisfaction-rating distribution.
//! * [`tdc`]: Temporal Drift Coefficient, the least-squares slope of mean
//!   usability over time periods.
//! * [`bucs`]: Bayesian Usability Confidence Score, the highest density
//!   interval of a Beta posterior over task completion.
//!
//! [`synth`] generates seeded sessions with known ground truth, [`report`]
//! handles ingestion and output, and [`cli`] drives the `adux` binary.

pub mod bucs;
pub mod cli;
pub mod error;
pub mod iei;
pub mod model;
pub mod report;
pub mod special;
pub mod synth;
pub mod tdc;

pub use error::{Error, Result};
