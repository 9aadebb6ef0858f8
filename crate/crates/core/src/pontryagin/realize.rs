//! Which signed point sets on the line are Pontryagin manifolds of proper maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map_model::MapSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IvtCertificate {
    /// Index of the first point of the offending adjacent pair.
    pub index: usize,
    pub left: f64,
    pub right: f64,
    pub sign: i32,
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Realizability {
    pub realizable: bool,
    pub positions: Vec<f64>,
    pub signs: Vec<i32>,
    /// Piecewise-linear proper map with preimage of 0 equal to `positions`
    /// and derivative signs equal to `signs`.
    pub witness: Option<MapSpec>,
    pub certificate: Option<IvtCertificate>,
}

/// Parse a sign word such as `+-+` (also accepting the unicode minus).
pub fn parse_signs(s: &str) -> Result<Vec<i32>> {
    s.chars()
        .filter(|c| !c.is_whitespace() && *c != ',')
        .map(|c| match c {
            '+' => Ok(1),
            '-' | '\u{2212}' => Ok(-1),
            other => Err(Error::InvalidInput(format!("unexpected sign character `{other}`"))),
        })
        .collect()
}

pub fn format_signs(signs: &[i32]) -> String {
    signs.iter().map(|&s| if s > 0 { '+' } else { '-' }).collect()
}

/// Signs at the positions `1, 2, .., L`.
pub fn realizable_1d(signs: &[i32]) -> Result<Realizability> {
    let positions: Vec<f64> = (1..=signs.len()).map(|i| i as f64).collect();
    realizable_1d_at(&positions, signs)
}

/// A signed point set on `R` is realizable iff the signs strictly alternate.
pub fn realizable_1d_at(positions: &[f64], signs: &[i32]) -> Result<Realizability> {
    if positions.len() != signs.len() {
        return Err(Error::InvalidInput("one sign per position is required".into()));
    }
    if positions.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput("positions must be strictly increasing".into()));
    }
    if signs.iter().any(|&s| s != 1 && s != -1) {
        return Err(Error::InvalidInput("signs must be +1 or -1".into()));
    }
    let mut out = Realizability {
        realizable: true,
        positions: positions.to_vec(),
        signs: signs.to_vec(),
        witness: None,
        certificate: None,
    };
    if let Some(i) = signs.windows(2).position(|w| w[0] == w[1]) {
        let s = signs[i];
        let (side_a, side_b) = if s > 0 { ("positive", "negative") } else { ("negative", "positive") };
        out.realizable = false;
        out.certificate = Some(IvtCertificate {
            index: i,
            left: positions[i],
            right: positions[i + 1],
            sign: s,
            explanation: format!(
                "both {} and {} have sign {}: the map is {side_a} just right of {} and {side_b} just left of {}, \
                 so it vanishes somewhere strictly between them, at a point outside the set",
                positions[i],
                positions[i + 1],
                if s > 0 { '+' } else { '-' },
                positions[i],
                positions[i + 1]
            ),
        });
        return Ok(out);
    }
    out.witness = Some(if signs.is_empty() {
        MapSpec::piecewise_linear(vec![0.0], vec![1.0], -1.0, 1.0)?
    } else {
        let mut knots = vec![positions[0]];
        let mut values = vec![0.0];
        for i in 0..signs.len() - 1 {
            let gap = positions[i + 1] - positions[i];
            knots.push(positions[i] + 0.5 * gap);
            values.push(signs[i] as f64 * 0.5 * gap);
            knots.push(positions[i + 1]);
            values.push(0.0);
        }
        MapSpec::piecewise_linear(knots, values, signs[0] as f64, signs[signs.len() - 1] as f64)?
    });
    Ok(out)
}
