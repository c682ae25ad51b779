//! Detection and classification of spatial changes in the structure of
//! polarimetric covariance matrices.
//!
//! A window of `K` complex pixel vectors `(HH, HV, VV)` is modelled either as
//! homogeneous with one of four covariance structures, or as a mixture of
//! `m + 1` structures fitted by expectation maximization. Penalized
//! likelihood ratios decide between the two and pick the mixture order.
//!
//! ```
//! use pcm_detect::prelude::*;
//!
//! let scenario = Scenario::new(Hypothesis::H11, 60);
//! let z = scenario.generate(&nominal_matrices(), &mut RngStream::new(3)).unwrap();
//! let fit = WindowFit::new(&z, &EmConfig::default(), FitScope::Full).unwrap();
//! let arch = Architecture::parse("AIC-D-P1", None).unwrap();
//! let outcome = fit.decide(&arch, 0.0).unwrap();
//! assert_eq!(outcome.labels.len(), 60);
//! ```

pub mod calibration;
pub mod cli;
pub mod cube;
pub mod detector;
pub mod em;
pub mod error;
pub mod hermitian;
pub mod rng;
pub mod sim;
pub mod structures;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::calibration::{calibrate, calibrate_many, CalibrationRecord, CalibrationSpec};
    pub use crate::cube::{classify_cube, read_cube, write_cube, ClassMap, DataCube};
    pub use crate::detector::{
        Architecture, Criterion, DetectionOutcome, FitScope, Hypothesis, PenaltyRule, Strategy, WindowFit,
    };
    pub use crate::em::{run_em, Alphabet, EmConfig, EmState};
    pub use crate::error::{Error, Result};
    pub use crate::hermitian::{Complex3, Hermitian3};
    pub use crate::rng::RngStream;
    pub use crate::sim::{nominal_matrices, run_experiment, run_experiments, ExperimentSpec, MetricsReport, Scenario};
    pub use crate::structures::{weighted_mle, StructureClass, WeightedSample};
}
