//! Numerical library for first- and second-order limit laws of normalized
//! maxima of bivariate elliptical triangular arrays with a Weibull-type
//! radius, verified against an exact finite-n angular-quadrature oracle and
//! Monte Carlo simulation.
//!
//! Module map:
//! - [`specfun`]: special functions and the adaptive quadrature engine
//! - [`radial`]: radius models, the marginal tail of S1 (two routes), and the
//!   tail-expansion lemmas
//! - [`norming`]: norming constants a_n and the second-order sequence
//! - [`limits`]: regime classification and the limit law H
//! - [`expansions`]: every second-order correction bracket
//! - [`oracle`]: the exact finite-n df and the Monte Carlo sampler
//! - [`study`]: configuration-driven convergence studies and reports
//! - [`verify`]: the self-contained invariant suite

pub mod error;
pub mod expansions;
pub mod limits;
pub mod norming;
pub mod oracle;
pub mod radial;
pub mod specfun;
pub mod study;
pub mod verify;

pub use error::{Error, Result};
pub use expansions::{
    bracket_boundary, bracket_degenerate, example_delta_beta, expansion_result, q_theorem1,
    ExpansionInputs, ExpansionResult, DEFAULT_BOUNDARY_TOL,
};
pub use limits::{classify_regime, h_limit, EvalPoint, Lambda, RateK, Regime, RegimeLabel};
pub use norming::{
    beta_example_a_n, beta_example_constants, build_sequence, solve_a_n, validate_rate_regime,
    BetaExampleConstants, NormingSequence, RhoRule,
};
pub use oracle::{
    angular_geometry, joint_cdf_exact, joint_survival, maxima_cdf_exact, sample_maxima,
    AngularGeometry, McConfig, McEstimate, OracleResult,
};
pub use radial::{
    beta_radius, g_tail_ratio_expansion, lemma2_expansion, lemma2_expectation_exact,
    marginal_g_tail_angular, marginal_g_tail_berman, RadialModel,
};
pub use specfun::{c_alpha, integrate, log_gamma, psi_alpha, reg_inc_beta, QuadratureSpec};
pub use study::{run_convergence_study, StudyConfig, StudyReport};
