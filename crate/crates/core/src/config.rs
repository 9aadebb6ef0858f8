//! Numerical tolerances and the single seeded randomness source.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Every tolerance used by the numeric engine. Reports embed a copy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Accepted deviation from norm 1 for sphere-map inputs and outputs.
    pub unit_norm: f64,
    /// Central finite-difference step for Jacobians.
    pub fd_step: f64,
    /// Newton polish stops once the residual drops below this.
    pub polish_residual: f64,
    /// Preimage points closer than this are merged.
    pub merge: f64,
    /// A Jacobian counts as regular below this condition number.
    pub condition_bound: f64,
    /// Norms below this are treated as zero in divisions.
    pub degenerate_norm: f64,
    /// Relative pad applied to the sphere bound `r`.
    pub sphere_bound_pad: f64,
    /// Shells sampled by escape-radius and properness searches.
    pub shells: usize,
    /// Directions per shell, per domain dimension.
    pub directions_per_dim: usize,
    /// Nominal fiber tracing step.
    pub trace_step: f64,
    /// Corrector residual for fiber tracing.
    pub corrector_residual: f64,
    /// Maximum accepted `|f(vertex) - y|` on a traced fiber.
    pub fiber_vertex_residual: f64,
    /// Maximum accepted `|f(midpoint) - y|` on a traced fiber segment.
    pub fiber_midpoint_residual: f64,
    /// Minimum distance between a stereographic pole and the projected curves.
    pub pole_clearance: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            unit_norm: 1e-9,
            fd_step: 1e-5,
            polish_residual: 1e-10,
            merge: 1e-6,
            condition_bound: 1e6,
            degenerate_norm: 1e-12,
            sphere_bound_pad: 0.05,
            shells: 32,
            directions_per_dim: 64,
            trace_step: 1e-2,
            corrector_residual: 1e-10,
            fiber_vertex_residual: 1e-8,
            fiber_midpoint_residual: 1e-3,
            pole_clearance: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub seed: u64,
    pub tol: Tolerances,
}

impl Default for Config {
    fn default() -> Self {
        Self { seed: 0x5eed, tol: Tolerances::default() }
    }
}

impl Config {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    /// A generator for one named purpose. Streams for different purposes are
    /// independent, so the order in which operations run never changes a result.
    pub fn rng(&self, purpose: &str) -> ChaCha8Rng {
        // FNV-1a over the purpose tag, mixed with the seed.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in purpose.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        ChaCha8Rng::seed_from_u64(self.seed ^ h.rotate_left(17))
    }
}
