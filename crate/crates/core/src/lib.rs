//! Correlated beta and Dirichlet distributions built from shared gamma
//! variates: exact sampling, exact product moments and correlations via
//! a hypergeometric series, moment-matching inference, and the
//! multivariate generalizations.

mod accum;
pub mod bivariate;
pub mod density;
pub mod dirichlet;
mod error;
pub mod inference;
pub mod multivariate;
pub mod rng;
pub mod special;

pub use bivariate::{
    exact_correlation, exact_covariance, magnussen_approx_correlation,
    magnussen_approx_covariance, olkin_liu_product_moment, product_moment, BetaMarginal,
    BivariateBetaParams, MomentValue, MAX_SHAPE,
};
pub use density::{conditional_joint_density, joint_density_mc, DensityGrid};
pub use dirichlet::{
    dirichlet_component_correlation, dirichlet_component_reduction, sample_correlated_dirichlet,
    CorrelatedDirichletParams, DirichletBatch,
};
pub use error::Error;
pub use multivariate::{
    pairwise_bivariate_reduction, sample_multivariate_beta, MultivariateBatch,
    MultivariateBetaParams,
};
pub use inference::{
    attainable_correlation_range, fit, fit_beta_marginal, EmpiricalMoments, FitResult, FitWarning,
};
pub use rng::{gamma_variate, sample_bivariate_beta, sample_latents, GammaSampler, Latents,
    RngStream, SampleBatch};
pub use special::{hyp3f2_unit, log_gamma, SeriesEval, DEFAULT_REL_TOL, MAX_SERIES_TERMS};
