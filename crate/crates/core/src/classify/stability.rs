use serde::Serialize;

use crate::error::{Error, Result};

/// The stability inequalities for proper maps `E -> R^k` over an
/// `m`-dimensional base, with `E` of rank `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StabilityReport {
    pub m: u32,
    pub n: u32,
    pub k: u32,
    /// `m + n <= 2k - 3`.
    pub cohomotopy_set_is_group: bool,
    /// `2k >= m + 3 + max(n, m + 1)`: suspension and compactification are bijections.
    pub diagram_bijective: bool,
    /// `m + n <= 2k - 2`.
    pub freudenthal: bool,
    /// Least `l` with `(m, n + l, k + l)` in the bijective range.
    pub minimal_shift: u32,
    /// `(n + l, k + l)` for the minimal shift `l`.
    pub stable_equivalent: (u32, u32),
    pub duality: String,
}

fn bijective(m: u32, n: u32, k: u32) -> bool {
    2 * u64::from(k) >= u64::from(m) + 3 + u64::from(n.max(m + 1))
}

pub fn stability_check(m: u32, n: u32, k: u32) -> Result<StabilityReport> {
    if n < 1 || k < 1 {
        return Err(Error::InvalidInput(format!("need n >= 1 and k >= 1, got n = {n}, k = {k}")));
    }
    let (m64, n64, k64) = (i64::from(m), i64::from(n), i64::from(k));
    // The left side grows by 2 per shift and the right by at most 1, so this terminates.
    let minimal_shift = (0..).find(|&l| bijective(m, n + l, k + l)).unwrap_or(0);
    Ok(StabilityReport {
        m,
        n,
        k,
        cohomotopy_set_is_group: m64 + n64 <= 2 * k64 - 3,
        diagram_bijective: bijective(m, n, k),
        freudenthal: m64 + n64 <= 2 * k64 - 2,
        minimal_shift,
        stable_equivalent: (n + minimal_shift, k + minimal_shift),
        duality: format!(
            "in the stable range the classes form the stable homotopy group pi^S_{}(M/dM) of the base \
             (Atiyah duality; stated, not computed)",
            m64 + n64 - k64
        ),
    })
}
