//! Multimodal demand data, sample statistics, clustering and the model suite.

mod chi2;
mod cluster;
mod io;
mod mixture;
mod stats;
mod suite;

pub use chi2::{chi2_cdf, chi2_inv};
pub use cluster::{cluster_samples, ClusterModel, KMEANS_RESTARTS};
pub use io::{read_samples_csv, write_samples_csv};
pub use mixture::{
    default_rho, sample_mixture, sample_mixture_labeled, MixtureComponent, MixtureSpec,
    MAX_REJECTIONS,
};
pub use stats::{
    bootstrap_moment_bounds, calibrate_gamma, mean_nearest_neighbor_distance, sample_moments,
    BootstrapSettings, SampleMoments, GAMMA2_FLOOR,
};
pub use suite::{
    assemble_model_suite, build_model, default_params, ModelFamily, ModelName, ModelParams,
    NamedModel, SampleSummary, SuiteConfig,
};
