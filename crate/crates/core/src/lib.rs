//! Jackknife empirical likelihood (JEL) test for the K-sample homogeneity
//! problem built on the categorical Gini correlation, with baseline tests,
//! a Monte Carlo power-study engine and the command-line front end.

pub mod asymptotics;
pub mod baselines;
pub mod cli;
pub mod data;
pub mod dataset;
pub mod error;
pub mod gini;
pub mod jackknife;
pub mod jel;
pub mod roots;
pub mod sim;
pub mod stats;
pub mod test_result;

pub use asymptotics::{build_wilks_matrices, verify_wilks, WilksCheck, WilksMatrices};
pub use baselines::{
    anderson_darling_ksample, kruskal_wallis, permutation_energy_test, PermutationConfig, Reduction,
};
pub use data::{build_pooled, pairwise_distances, DistanceMatrix, PooledData, Sample};
pub use error::{JelError, Result};
pub use gini::{energy_distance, gini_statistic, u_statistic, GiniStats};
pub use jackknife::{all_pseudo_values, pseudo_values, PseudoValues};
pub use jel::{
    inner_lambda, jel_analyze, jel_test, neg2_log_likelihood, solve_system, weights, JelReport,
    JelSolution, SolverConfig,
};
pub use sim::{parse_config, run_grid, run_scenario, Family, Method, ResultTable, Scenario};
pub use stats::{chi_square_quantile, chi_square_sf, RngStream};
pub use test_result::TestResult;
