//! Numerical checks of the existence and comparability results: the constant
//! `C₁`, uniform integrability of `G K`, boundary-Harnack sandwiches, the
//! conditioned lifetime integral and the excursion scaling laws.

mod bhp;
mod c1;
mod eq27;
mod scaling;
mod ui;

pub use bhp::{bhp_check, BhpReport, CubeRegion};
pub use c1::{c1_probe_points, c1_ratio, estimate_c1, meridian_point, C1Estimate, C1Probes, C1Sample};
pub use eq27::{in_cap_region, lemma43_check, lemma43_integral, sample_cap_region};
pub use scaling::{
    excursion_batch, excursion_stats, occupation_batch, occupation_scaling, ExcursionReport, ExcursionSetup, ExcursionTally, ScalingReport, SurvivalFit,
};
pub use ui::{ui_diagnostic, UiFamily, UiRow, UiTable};
