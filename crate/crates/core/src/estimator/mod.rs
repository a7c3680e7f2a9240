//! Cross-fitted influence-function estimators with median adjustment, and
//! the identification-formula plug-ins.

mod crossfit;
mod median;
mod plugin;
mod root;

pub use crossfit::{
    estimate, fit_fold_nuisances, solve_att_once, solve_cdt_once, solve_general_once, solve_qtt_once, CrossFitConfig,
    EstimateReport, RepStat,
};
pub use median::{confidence_interval, median, median_adjust};
pub use plugin::{plugin_att, plugin_cdt, plugin_cdt_curve, plugin_counterfactuals, plugin_qtt};
pub use root::solve_quantile_root;
