// SPDX-License-Identifier: Apache-2.0

//! Experiments built on collections and observables. Every report is a pure
//! function of its inputs, seeds and steps.

mod adversarial;
mod chain;
mod equidist;
mod fit;
mod mixing;

pub use adversarial::{
    adversarial_experiment, n2plus4_family, shadowing_experiment, AdversarialConfig,
    AdversarialReport, AdversarialRow, ShadowingReport, ShadowingRow,
};
pub use chain::{chain_check, default_window, ChainReport};
pub use equidist::{
    build_all, discrepancy, duke_sweep, fundamental_log_spaced, length_growth,
    subcollection_bound_experiment, DiscrepancyReport, DukeSweep, QSchedule,
    SubcollectionBoundReport, Verdict, CSV_COLUMNS,
};
pub use fit::DecayFit;
pub use mixing::{ergodic_variance, mixing_correlation, MixingEstimate, MixingReport, Quantity};
