use serde::{Deserialize, Serialize};

use super::Coupling;

/// Solution method tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExactLp,
    Entropic,
    TrialOnly,
    GrandCanonicalLp,
}

impl std::str::FromStr for Method {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "exact_lp" | "exact" => Ok(Method::ExactLp),
            "entropic" => Ok(Method::Entropic),
            "trial_only" | "trial" => Ok(Method::TrialOnly),
            "gc_lp" => Ok(Method::GrandCanonicalLp),
            other => Err(crate::Error::arg(format!("unknown method '{other}'"))),
        }
    }
}

/// Knobs shared by the canonical and grand-canonical solvers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Largest admissible number of ordered configurations `M^N`.
    pub budget: u128,
    /// Initial entropic temperature; chosen from the cost range when absent.
    pub epsilon0: Option<f64>,
    /// Number of halvings of the temperature.
    pub levels: usize,
    /// Total-variation tolerance on the one-body marginal.
    pub marginal_tolerance: f64,
    pub lp_max_iterations: usize,
    pub sinkhorn_max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            budget: 10_000_000,
            epsilon0: None,
            levels: 10,
            marginal_tolerance: 1e-8,
            lp_max_iterations: 2_000_000,
            sinkhorn_max_iterations: 50_000,
        }
    }
}

/// Upper and lower bounds on an indirect energy together with solver metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyReport {
    pub s: f64,
    pub d: usize,
    /// Particle number; for grand-canonical solves the (possibly fractional)
    /// mean particle number.
    #[serde(rename = "N")]
    pub n: f64,
    /// Number of sites carrying mass.
    #[serde(rename = "M")]
    pub m: usize,
    pub method: Method,
    pub primal_upper: f64,
    pub dual_lower: f64,
    pub gap: f64,
    pub iterations: usize,
    pub epsilon_schedule: Vec<f64>,
    pub lo_ratio: Option<f64>,
    /// `D(ρ, ρ)`.
    pub direct: f64,
    /// `C(P)` of the primal state.
    pub interaction: f64,
    /// Richardson extrapolation of the entropic energies to zero temperature.
    pub extrapolated: Option<f64>,
    pub converged: bool,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub coupling: Option<Coupling>,
}

impl EnergyReport {
    /// Best available point estimate: the extrapolated value when present.
    pub fn estimate(&self) -> f64 {
        self.extrapolated.unwrap_or(self.primal_upper)
    }
}
