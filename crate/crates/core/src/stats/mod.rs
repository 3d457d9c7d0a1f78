//! Regression correction, correlation and repeatability.

mod regression;
mod repeatability;
mod traits;

pub use regression::{correct_count, ols_fit, pearson, RegressionFit};
pub use repeatability::{one_way_anova, repeatability, repeatability_blocked, repeatability_groups, AnovaTable, RepeatabilityResult};
pub use traits::{
    median, trait_index, trait_summary, write_correlations_csv, write_repeatability_csv, GenotypeStats, TraitKey, TraitRow,
    TraitStats, TraitSummary, TraitTable, N_TRAITS, TRAIT_NAMES,
};
