//! Job files: one JSON object with a `command` tag, plus optional `seed` and `out`.

use std::path::PathBuf;

use serde::Deserialize;
use serde_json::Value;

use properclass::suite::SuiteItem;

pub const DEFAULT_WINDOW: f64 = 50.0;

fn default_window() -> f64 {
    DEFAULT_WINDOW
}

fn default_radii() -> Vec<f64> {
    vec![1.0, 2.0, 4.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum InvariantName {
    Winding,
    Degree2,
    Hopf,
    EndSigns,
    /// Dispatch on the dimensions of a proper map.
    Class,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case", deny_unknown_fields)]
pub enum Job {
    Classify {
        m: u32,
        n: u32,
        k: u32,
    },
    Normalize {
        map: String,
        #[serde(default = "default_window")]
        window: f64,
        #[serde(default = "default_radii")]
        radii: Vec<f64>,
    },
    Invariant {
        name: InvariantName,
        map: String,
        #[serde(default = "default_window")]
        window: f64,
        #[serde(default)]
        samples: Option<usize>,
        #[serde(default)]
        value_pair: Option<usize>,
    },
    PontryaginExtract {
        map: String,
        #[serde(default)]
        value: Option<Vec<f64>>,
        #[serde(default)]
        perturbation: Option<f64>,
        #[serde(default)]
        half_width: Option<f64>,
        #[serde(default)]
        step: Option<f64>,
        #[serde(default)]
        csv: Option<PathBuf>,
    },
    PontryaginConstruct {
        points: Vec<Vec<f64>>,
        frames: Vec<Vec<Vec<f64>>>,
        regular_value: Vec<f64>,
        tube_radius: f64,
    },
    PontryaginRealizable {
        signs: String,
        #[serde(default)]
        positions: Option<Vec<f64>>,
    },
    Counterexamples {
        #[serde(default)]
        items: Option<Vec<SuiteItem>>,
        #[serde(default)]
        fiber_step: Option<f64>,
        #[serde(default = "default_window")]
        window: f64,
    },
}

impl Job {
    pub fn command(&self) -> &'static str {
        match self {
            Job::Classify { .. } => "classify",
            Job::Normalize { .. } => "normalize",
            Job::Invariant { .. } => "invariant",
            Job::PontryaginExtract { .. } => "pontryagin_extract",
            Job::PontryaginConstruct { .. } => "pontryagin_construct",
            Job::PontryaginRealizable { .. } => "pontryagin_realizable",
            Job::Counterexamples { .. } => "counterexamples",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobFile {
    pub job: Job,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Parse a job file. `seed` and `out` are lifted off before the strict
/// per-command schema check, so any other unknown key is rejected.
pub fn parse_job(text: &str) -> Result<JobFile, String> {
    let mut value: Value = serde_json::from_str(text).map_err(|e| format!("job file is not JSON: {e}"))?;
    let obj = value.as_object_mut().ok_or("job file must be a JSON object")?;
    let seed = match obj.remove("seed") {
        None => None,
        Some(v) => Some(v.as_u64().ok_or("`seed` must be a non-negative integer")?),
    };
    let out = match obj.remove("out") {
        None => None,
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(_) => return Err("`out` must be a string".into()),
    };
    let job = serde_json::from_value(value).map_err(|e| format!("invalid job: {e}"))?;
    Ok(JobFile { job, seed, out })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_defaults() {
        let j = parse_job(r#"{"command": "normalize", "map": "power(2)", "seed": 7}"#).unwrap();
        assert_eq!(j.seed, Some(7));
        assert_eq!(j.job, Job::Normalize { map: "power(2)".into(), window: 50.0, radii: vec![1.0, 2.0, 4.0] });
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(parse_job(r#"{"command": "classify", "m": 0, "n": 4, "k": 3, "extra": 1}"#).is_err());
        assert!(parse_job(r#"{"command": "launch"}"#).is_err());
        assert!(parse_job(r#"{"command": "classify", "m": 0, "n": 4}"#).is_err());
        assert!(parse_job(r#"[1, 2]"#).is_err());
        assert!(parse_job(r#"{"command": "classify", "m": 0, "n": 4, "k": 3, "seed": -1}"#).is_err());
    }

    #[test]
    fn suite_items_parse() {
        let j = parse_job(r#"{"command": "counterexamples", "items": ["hopf_pair"], "fiber_step": 0.5}"#).unwrap();
        assert!(matches!(j.job, Job::Counterexamples { items: Some(ref v), .. } if v == &[SuiteItem::HopfPair]));
    }
}
