//! Power, group-sequential boundaries, effect dilution and sample-size
//! re-estimation for two-arm trials interrupted part-way through
//! enrolment.

pub mod design;
pub mod dilution;
pub mod error;
pub mod gsd;
pub mod kernel;
pub mod resize;
pub mod shortterm;
pub mod simulation;
pub mod types;

pub use design::{
    planned_noncentrality, power_at_fraction, power_given_n, required_sample_size, DesignParams,
    SampleSize,
};
pub use dilution::{
    convert_mean_change, fixed_power_diluted, joint_law, joint_law_general, CohortSizes,
    DilutionSpec, GeneralDilutionSpec, JointLaw, MeanChange,
};
pub use error::{Error, Result};
pub use gsd::{
    boundary, combination_statistic, conditional_error, conditional_power, gsd_power,
    second_stage_statistic, CombinationSpec, GsdDesign, PowerBreakdown, Scheme,
};
pub use kernel::{bivariate_normal_cdf, integrate, std_normal_cdf, std_normal_quantile, Limit};
pub use resize::{adjusted_stage2_n, adjusted_stage2_n_gsd, Branch, ResizeResult};
pub use shortterm::{
    interim_information_fraction, marschner_becker, parse_csv, read_csv, van_lancker_estimate,
    InterimEstimate, Record, ShortTermDataset,
};
pub use simulation::{mc_joint_moments, mc_two_cohort_power, Analysis, McConfig, McMoments, McPower};
pub use types::{Correlation, InformationFraction, Probability};
