//! Post-processing and path-loss modelling for directional sub-THz channel
//! sounding campaigns.
//!
//! The pipeline runs raw VNA sweeps through system calibration, reduces
//! each placement to best-direction, omni-directional and beam-combined
//! path loss, and fits close-in (CI), alpha-beta-gamma (ABG) and
//! frequency-weighted CI (CIF) models by least squares. Published fits for
//! four indoor scenarios at 140 and 220 GHz ship as presets.

pub mod calibration;
pub mod extraction;
pub mod fitting;
pub mod models;
pub mod sweep;
pub mod synth;
pub mod types;

pub use calibration::{calibrate, CalibrationError, CalibrationRecord};
pub use extraction::{
    beam_average, best_direction_pl, combine_coherent, combine_noncoherent, extract_samples,
    omni_pl, BeamEntry, BeamTable, ExtractOptions, ExtractionError, ScanContext,
};
pub use fitting::{fit_abg, fit_ci, fit_cif, goodness_of_fit, Dataset, FitError, FitReport};
pub use models::presets::{load_presets, NominalBand, ScenarioPreset};
pub use models::{
    abg_predict, ci_predict, cif_predict, fspl_db, weighted_avg_frequency, AbgModel, CiModel,
    CifModel, ModelError, PathLossModel,
};
pub use types::{
    validate_scan, AngularGrid, DirectionalScan, FrequencyBand, FrequencyMode, PathLossKind,
    PathLossSample, S21Cube, Scenario, ScanViolation, SounderConfig,
};
