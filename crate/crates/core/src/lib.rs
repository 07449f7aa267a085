//! Single acoustic-vector-sensor direction finding and tracking for
//! polynomial-phase signals.
//!
//! The pipeline reduces a degree-`q` polynomial-phase snapshot stream to a
//! constant-frequency stream by repeated conjugate-lag multiplication
//! ([`dephase`]), forms a two-block matrix pencil, and recovers the
//! direction of arrival from the dominant eigenvector of the pencil
//! correlation ([`esprit`]). [`tracking`] adapts forgetting-factor
//! trackers to moving sources, [`crb`] provides the Cramér-Rao bounds and
//! [`montecarlo`] runs seeded simulation sweeps over all of it.

#![allow(clippy::needless_range_loop)]

pub mod crb;
pub mod dephase;
mod error;
pub mod esprit;
pub mod montecarlo;
pub mod sigmodel;
pub mod tracking;

pub use error::{Error, Result};

pub use crb::{crb_closed, fim_closed, fim_numeric, CrbResult, FisherMatrix};
pub use dephase::{
    build_pencil, dephase_step, reduce_to_linear, track_preprocess, DephaseConfig, DephaseMode,
    PencilDataset,
};
pub use esprit::{estimate_doa_pipeline, DoaEstimate};
pub use montecarlo::{
    run_doa_sweep, run_tracking_experiment, SweepConfig, SweepRow, TrackStatsRow,
    TrackingExperiment,
};
pub use sigmodel::{
    pps_sample, steering_vector, synth_moving, synth_static, Doa, ManifoldVector, NoiseSpec,
    PpsCoeffs, SnapshotMatrix, Trajectory,
};
pub use tracking::{ForgettingSpec, ManifoldEstimator, TrackState};

pub use num_complex::Complex64;

/// One complex 4-channel sample `[v_x, v_y, v_z, p]` of the vector sensor.
pub type Vec4 = [Complex64; 4];
