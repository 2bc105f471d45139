use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A design or configuration field violates its invariant.
    #[error("invalid `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("junction inductance is singular at flux bias {flux_bias} rad (|phi| must be < pi/2)")]
    SingularInductance { flux_bias: f64 },

    #[error("{which} matrix is not positive definite after grounding")]
    NotPositiveDefinite { which: &'static str },

    #[error("chain has {nodes} nodes; the solver is capped at {limit}")]
    ChainTooLarge { nodes: usize, limit: usize },

    #[error("scattering matrix is near singular (|det| = {det:e}); operating point sits at the oscillation threshold")]
    NearSingular { det: f64 },

    #[error("operating point is unstable (n = {n})")]
    UnstableOperatingPoint { n: f64 },

    #[error("peak gain {peak_db:.3} dB does not exceed 3 dB; bandwidth is undefined")]
    UndefinedBandwidth { peak_db: f64 },

    #[error("design cannot reach the band edge: reachable range is ({reachable_low_ghz:.4}, {reachable_high_ghz:.4}] GHz")]
    CoverageGap {
        reachable_low_ghz: f64,
        reachable_high_ghz: f64,
    },

    #[error("gain target {target_db} dB is unreachable (best {best_db:.3} dB below {ceiling_dbm} dBm)")]
    UnreachableGain {
        target_db: f64,
        best_db: f64,
        ceiling_dbm: f64,
    },

    #[error("no feasible design within {evaluations} evaluations (best gain so far {best_gain_db:.3} dB)")]
    Infeasible {
        evaluations: usize,
        best_gain_db: f64,
    },

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("eigensolver did not converge after {0} iterations")]
    NoConvergence(usize),
}

impl Error {
    pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad inputs rather than by the computation.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::SingularInductance { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::ChainTooLarge { .. }
                | Error::InvalidSweep(_)
        )
    }
}
