//! Simulation and analytics for outage probability in interference-limited
//! wireless networks: spatial transmitter models under several MAC
//! disciplines, Monte Carlo estimation of the link success probability,
//! and the closed-form small-density asymptotics P ~ 1 - gamma eta^kappa.

pub mod asymptotics;
pub mod csvio;
pub mod error;
pub mod geom;
pub mod harness;
pub mod mac;
pub mod num;
pub mod outage;
pub mod pointprocess;
pub mod rng;

pub use asymptotics::{
    conjecture_envelope, epstein_zeta, eta_max, gamma_aloha, gamma_csma_matern, gamma_kappa_for,
    tdma_bounds, AsymptoticResult, Provenance, SpecialFunctionTable,
};
pub use error::{Error, Result};
pub use geom::{Point, Window, Wrap};
pub use harness::{
    classify, fit_kappa_gamma, reproduce_figure, sweep, Curvature, FigureId, FitResult, SweepConfig,
    SweepResult, TaxonomyClass, TaxonomyLabel,
};
pub use mac::{
    aloha, check_conditions, cluster_mac, csma_matern, tdma_lattice, unreasonable_tdma,
    ConditionReport, MacScheme, TransmitterSet,
};
pub use outage::{
    delta, estimate_success, interference, success_conditional, success_ppp_aloha_closed,
    success_thomas_aloha_closed, EstimateConfig, EstimatorMode, LinkSpec, Orientation,
    OutageEstimate, PalmPolicy, PathLossModel,
};
pub use pointprocess::{
    estimate_k_function, estimate_rho2, gen_lattice, gen_matern2, gen_ppp, gen_thomas,
    ClusterSpec, Model, PointPattern, ProductDensity,
};
