//! Flat TOML configs: file, then `--set key=value`, then named flags, then
//! `HOKDV_SEED`. The merged table is validated by deserializing into the
//! command's typed config, so a missing or mistyped key is reported by name.

use crate::error::CliError;
use hokdv_core::Lambda;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::path::{Path, PathBuf};

pub const SEED_ENV: &str = "HOKDV_SEED";

/// Parse a command-line value as a TOML value; bare comma lists become
/// arrays and anything unparseable is kept as a string.
pub fn parse_value(raw: &str) -> toml::Value {
    let attempt = |text: &str| {
        toml::from_str::<toml::Table>(&format!("v = {text}")).ok().and_then(|mut t| t.remove("v"))
    };
    if let Some(v) = attempt(raw) {
        return v;
    }
    if raw.contains(',') && !raw.starts_with('[') {
        if let Some(v) = attempt(&format!("[{raw}]")) {
            return v;
        }
    }
    toml::Value::String(raw.to_string())
}

pub struct Sources<'a> {
    pub file: Option<&'a Path>,
    pub sets: &'a [String],
    pub flags: Vec<(&'static str, Option<&'a String>)>,
}

pub fn resolve<T: DeserializeOwned>(src: Sources<'_>) -> Result<(T, toml::Table), CliError> {
    let mut table = match src.file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            toml::from_str::<toml::Table>(&text)
                .map_err(|e| CliError::Usage(format!("config {}: {}", path.display(), e.message())))?
        }
        None => toml::Table::new(),
    };
    for item in src.sets {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got `{item}`")))?;
        table.insert(k.trim().to_string(), parse_value(v.trim()));
    }
    for (k, v) in src.flags {
        if let Some(v) = v {
            table.insert(k.to_string(), parse_value(v));
        }
    }
    if let Ok(seed) = std::env::var(SEED_ENV) {
        let seed: i64 = seed
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{SEED_ENV} must be an integer, got `{seed}`")))?;
        table.insert("seed".into(), toml::Value::Integer(seed));
    }
    let cfg = T::deserialize(toml::Value::Table(table.clone()))
        .map_err(|e| CliError::Usage(format!("config: {}", e.message())))?;
    Ok((cfg, table))
}

/// `λ` as `2`, `"2"` or `"3/2"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaValue(pub Lambda);

impl Default for LambdaValue {
    fn default() -> Self {
        LambdaValue(Lambda::ONE)
    }
}

impl std::str::FromStr for LambdaValue {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = |_| format!("lambda must be `n` or `p/q`, got `{s}`");
        let (num, den) = match s.split_once('/') {
            Some((p, q)) => (p.trim().parse::<u64>().map_err(bad)?, q.trim().parse::<u64>().map_err(bad)?),
            None => (s.trim().parse::<u64>().map_err(bad)?, 1),
        };
        Lambda::rational(num, den).map(LambdaValue).map_err(|e| e.to_string())
    }
}

impl<'de> Deserialize<'de> for LambdaValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(n) => Lambda::integer(n).map(LambdaValue).map_err(serde::de::Error::custom),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl Serialize for LambdaValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

/// A list key given as a single scalar is a one-element list.
fn one_or_many<'de, D: Deserializer<'de>, T: Deserialize<'de>>(d: D) -> Result<Vec<T>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw<T> {
        Many(Vec<T>),
        One(T),
    }
    Ok(match Raw::deserialize(d)? {
        Raw::Many(v) => v,
        Raw::One(x) => vec![x],
    })
}

/// Lemma id written as `3.1` or `"3.1"`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct LemmaId(pub String);

impl<'de> Deserialize<'de> for LemmaId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        Ok(LemmaId(match Raw::deserialize(d)? {
            Raw::Num(x) => format!("{x:.1}"),
            Raw::Text(s) => s.trim().to_string(),
        }))
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `a·e^{-|m|}` with phase `0.7m`, `1 ≤ |m| ≤ radius`.
    Smooth,
    PhiN,
    /// Seeded Gaussian coefficients with `e^{-|m|/4}` decay.
    Random,
    /// CSV rows `m,re,im`.
    Coefficients,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub j: u32,
    #[serde(default)]
    pub lambda: LambdaValue,
    #[serde(default = "d_modes")]
    pub modes: usize,
    #[serde(default = "d_dt")]
    pub dt: f64,
    #[serde(default = "d_one")]
    pub final_time: f64,
    #[serde(default = "d_scheme")]
    pub scheme: hokdv_core::Scheme,
    #[serde(default = "d_true")]
    pub nonlinear: bool,
    #[serde(default = "d_true")]
    pub dealias: bool,
    #[serde(default = "d_every")]
    pub frame_every: usize,
    #[serde(default = "d_blowup")]
    pub blowup_factor: f64,
    #[serde(default = "d_family")]
    pub family: Family,
    #[serde(default = "d_amp")]
    pub amplitude: f64,
    #[serde(default = "d_radius")]
    pub radius: i64,
    /// `φ_N` parameters.
    #[serde(default = "d_n")]
    pub n: u64,
    #[serde(default)]
    pub s: f64,
    pub coefficients_file: Option<PathBuf>,
    #[serde(default = "d_drift")]
    pub drift_tol: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub j: u32,
    #[serde(default)]
    pub lambda: LambdaValue,
    #[serde(deserialize_with = "one_or_many")]
    pub s: Vec<f64>,
    #[serde(default = "d_ns", deserialize_with = "one_or_many")]
    pub n: Vec<u64>,
    #[serde(default = "d_one")]
    pub t: f64,
    #[serde(default = "d_exp_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    #[serde(deserialize_with = "one_or_many")]
    pub j: Vec<u32>,
    #[serde(default = "d_kmax")]
    pub kmax: i64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub lemma: LemmaId,
    pub j: u32,
    #[serde(default)]
    pub lambda: LambdaValue,
    /// Defaults to `-j + ½`.
    pub s: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    #[serde(default)]
    pub l1: u32,
    #[serde(default)]
    pub l2: u32,
    #[serde(default = "d_trials")]
    pub trials: usize,
    #[serde(default = "d_k_trend", deserialize_with = "one_or_many")]
    pub k_trend: Vec<i64>,
    #[serde(default = "d_trend_factor")]
    pub trend_factor: f64,
    #[serde(default = "d_t_modes")]
    pub t_modes: usize,
    #[serde(default = "d_one")]
    pub dtau: f64,
    #[serde(default = "d_rows")]
    pub max_rows: usize,
    #[serde(default = "d_generator")]
    pub generator: String,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ContractionCmdConfig {
    pub j: u32,
    #[serde(default)]
    pub lambda: LambdaValue,
    pub s: Option<f64>,
    #[serde(default = "d_contraction_amp")]
    pub amplitude: f64,
    #[serde(default = "d_max_iter")]
    pub max_iter: usize,
    #[serde(default = "d_contraction_dt")]
    pub dt: f64,
    #[serde(default = "d_contraction_tol")]
    pub tol: f64,
    #[serde(default = "d_contraction_modes")]
    pub modes: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PicardConfig {
    #[serde(deserialize_with = "one_or_many")]
    pub j: Vec<u32>,
    #[serde(default = "d_picard_ns", deserialize_with = "one_or_many")]
    pub n: Vec<u64>,
    #[serde(default = "d_picard_ts", deserialize_with = "one_or_many")]
    pub t: Vec<f64>,
    pub s: Option<f64>,
    #[serde(default = "d_steps")]
    pub steps: usize,
    #[serde(default = "d_picard_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
}

fn d_modes() -> usize {
    256
}
fn d_dt() -> f64 {
    1e-3
}
fn d_one() -> f64 {
    1.0
}
fn d_scheme() -> hokdv_core::Scheme {
    hokdv_core::Scheme::IntegratingFactorRk4
}
fn d_true() -> bool {
    true
}
fn d_every() -> usize {
    100
}
fn d_blowup() -> f64 {
    10.0
}
fn d_family() -> Family {
    Family::Smooth
}
fn d_amp() -> f64 {
    0.05
}
fn d_radius() -> i64 {
    6
}
fn d_n() -> u64 {
    4
}
fn d_drift() -> f64 {
    1e-8
}
fn d_ns() -> Vec<u64> {
    vec![8, 16, 32, 64, 128]
}
fn d_exp_tol() -> f64 {
    0.1
}
fn d_kmax() -> i64 {
    200
}
fn d_trials() -> usize {
    500
}
fn d_k_trend() -> Vec<i64> {
    vec![32, 64, 128]
}
fn d_trend_factor() -> f64 {
    1.5
}
fn d_t_modes() -> usize {
    32
}
fn d_rows() -> usize {
    8
}
fn d_generator() -> String {
    "mixed".into()
}
fn d_contraction_amp() -> f64 {
    0.01
}
fn d_max_iter() -> usize {
    30
}
fn d_contraction_dt() -> f64 {
    2e-3
}
fn d_contraction_tol() -> f64 {
    1e-12
}
fn d_contraction_modes() -> usize {
    16
}
fn d_picard_ns() -> Vec<u64> {
    vec![2, 4, 8]
}
fn d_picard_ts() -> Vec<f64> {
    vec![0.1, 0.3]
}
fn d_steps() -> usize {
    256
}
fn d_picard_tol() -> f64 {
    1e-6
}
