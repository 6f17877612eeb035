//! Bootstrap unit root tests for single series and panels.
//!
//! The crate implements the two-step ADF/QD unit root test with data-driven
//! lag selection, six resampling schemes for the null distribution, a
//! union-of-rejections test, panel and multiple-testing procedures built on
//! the same bootstrap, and automatic classification of integration orders.

pub mod adf;
pub mod bootstrap;
pub mod detrend;
pub mod error;
pub mod order;
pub mod panel;
pub mod plot;
pub mod procedures;

pub use adf::{adf_regress, adf_statistic, auto_p_max, ic_value, rescale_series, select_lag};
pub use adf::{AdfFit, Criterion, LagPolicy};
pub use bootstrap::{
    auto_block_length, bootstrap_statistics, build_sample, estimate_residuals, gen_errors_awb,
    gen_errors_bwb, gen_errors_dwb, gen_errors_mbb, gen_errors_sb, gen_errors_swb, BootConfig,
    BootMethod, BootSample, BootStatMatrix, Draws, ErrorPanel, ResidualSet, SeriesErrors,
    SeriesResiduals,
};
pub use detrend::{detrend_ols, detrend_qd, DetrendMethod, DetrendResult, DetrendSpec, Deterministic};
pub use error::{Result, UrError};
pub use order::{order_integration, OrderOptions, OrderResult, StageDetail, StageReport, TestKind};
pub use panel::{
    check_missing_insample, diff_mult, find_nonmissing_subsample, load_csv, simulate_dgp,
    write_csv, DgpSpec, Innovation, LoadOptions, Panel, SubsampleRange,
};
pub use plot::{plot_missing_pattern, plot_order_integration, plot_order_integration_with};
pub use procedures::{
    boot_adf, boot_union, bootstrap_pvalue, bootstrap_quantile, bsqt, fdr, iadf, panel_gm,
    rank_statistics, union_specs, MultiOutcome, SequentialOutcome, SequentialStep, TestOutcome,
    UnionParts, UNION_LABELS,
};
