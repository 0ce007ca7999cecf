//! The shared experiment configuration: command-line flags merged over an
//! optional JSON file.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::Args;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lambda_sets::SignPattern;
use crate::products::{Construction, TailPolicy};

/// An angle parsed from `pi/4`, `3pi/8`, `-pi/2`, `2*pi/3` or a decimal. The
/// literal is kept so the resolved config shows what was asked for.
#[derive(Debug, Clone, PartialEq)]
pub struct Angle {
    pub text: String,
    pub value: f64,
}

impl FromStr for Angle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let text = s.trim().to_string();
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || {
            Error::invalid(format!(
                "cannot parse angle {s:?} (try pi/4, 3pi/8 or 0.785)"
            ))
        };
        let value = if let Some(pos) = compact.find("pi") {
            let (num, rest) = compact.split_at(pos);
            let rest = &rest[2..];
            let num = num.strip_suffix('*').unwrap_or(num);
            let k: f64 = match num {
                "" | "+" => 1.0,
                "-" => -1.0,
                n => n.parse().map_err(|_| bad())?,
            };
            let d: f64 = match rest {
                "" => 1.0,
                r => r
                    .strip_prefix('/')
                    .ok_or_else(bad)?
                    .parse()
                    .map_err(|_| bad())?,
            };
            if d == 0.0 {
                return Err(bad());
            }
            k * PI / d
        } else {
            compact.parse().map_err(|_| bad())?
        };
        if !value.is_finite() {
            return Err(bad());
        }
        Ok(Angle { text, value })
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Angle {
                text: v.to_string(),
                value: v,
            }),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Radius window `r_min:r_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub r_min: f64,
    pub r_max: f64,
}

impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::invalid(format!(
                "cannot parse window {s:?} (expected r_min:r_max, e.g. 20:40)"
            ))
        };
        let (a, b) = s.split_once(':').ok_or_else(bad)?;
        let r_min: f64 = a.trim().parse().map_err(|_| bad())?;
        let r_max: f64 = b.trim().parse().map_err(|_| bad())?;
        if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) {
            return Err(Error::invalid(format!(
                "window {s:?} must satisfy 0 < r_min < r_max"
            )));
        }
        Ok(Window { r_min, r_max })
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.r_min, self.r_max)
    }
}

impl Serialize for Window {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Window {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

fn parse_construction(s: &str) -> Result<Construction> {
    match s {
        "quartic" => Ok(Construction::Quartic),
        "genus2" => Ok(Construction::Genus2),
        _ => Err(Error::invalid(format!(
            "unknown construction {s:?} (quartic or genus2)"
        ))),
    }
}

fn parse_tail(s: &str) -> Result<TailPolicy> {
    match s {
        "bound-only" => Ok(TailPolicy::BoundOnly),
        "first-order" => Ok(TailPolicy::FirstOrder),
        _ => Err(Error::invalid(format!(
            "unknown tail policy {s:?} (bound-only or first-order)"
        ))),
    }
}

/// Every knob any subcommand reads. Unset fields take per-command defaults;
/// the resolved values are embedded in each output header.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentConfig {
    /// JSON config file; explicit flags take precedence over its fields.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Density per side of the sqrt grid.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Comma-separated densities.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    /// positive, negative or symmetric.
    #[arg(long, value_parser = SignPattern::from_str)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pattern: Option<SignPattern>,
    /// Truncation: points per side.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Largest number of nodes in a finite section.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nmax: Option<usize>,
    /// Comma-separated node counts.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<usize>>,
    /// Dilation applied to the generated set.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    /// Comma-separated exponents ε for S(ε).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    /// Comma-separated radii (density grid, Fock-norm schedule).
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,

    /// Target φ(· - shift).
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_shift: Option<f64>,
    /// Relative spectral cutoff.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,

    /// Comma-separated angles such as pi/8,pi/4.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<Angle>>,
    /// Comma-separated radius windows such as 20:40,40:80.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<Vec<Window>>,
    /// Zero-exclusion distance for indicator sampling.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exclusion: Option<f64>,
    /// Number of sample points.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// quartic or genus2.
    #[arg(long, value_parser = parse_construction)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub construction: Option<Construction>,
    /// bound-only or first-order.
    #[arg(long, value_parser = parse_tail)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailPolicy>,

    /// Comma-separated translate centers μ.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    /// Comma-separated width parameters a.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
    /// Envelope source: phi, phi-a or hermite.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    /// Lower envelope polynomial degree n.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower_degree: Option<u32>,
    /// Upper envelope polynomial degree m.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper_degree: Option<u32>,
    /// Largest sampled frequency.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi_max: Option<f64>,

    /// Relative quadrature tolerance.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,

    /// CSV output path (stdout when absent).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// JSON output path.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
}

macro_rules! merge_fields {
    ($dst:ident, $src:ident; $($f:ident),* $(,)?) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f; } )*
    };
}

impl ExperimentConfig {
    /// Fills unset fields from `file`.
    pub fn merge_under(mut self, file: ExperimentConfig) -> Self {
        merge_fields!(self, file;
            delta, deltas, pattern, n, nmax, schedule, scale, epsilons, radii, target_shift, cutoff,
            theta, window, exclusion, samples, construction, tail, mu, a, source, lower_degree,
            upper_degree, xi_max, rel_tol, out, json);
        self
    }

    /// Loads `--config` if given and merges it under the flags.
    pub fn load(self) -> Result<Self> {
        match &self.config {
            None => Ok(self),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Error::invalid(format!("cannot read config {}: {e}", path.display()))
                })?;
                let file: ExperimentConfig = serde_json::from_str(&text)
                    .map_err(|e| Error::invalid(format!("config {}: {e}", path.display())))?;
                Ok(self.merge_under(file))
            }
        }
    }

    /// The resolved config as one line of JSON.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// `Some(v)` or a validation error naming the field.
pub fn required<T: Clone>(v: &Option<T>, name: &str) -> Result<T> {
    v.clone()
        .ok_or_else(|| Error::invalid(format!("missing required field `{name}` (flag --{name})")))
}
