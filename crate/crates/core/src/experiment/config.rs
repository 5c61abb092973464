use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::decomposition::RankVector;
use crate::error::{Error, Result};
use crate::measurement::RowSampling;
use crate::tiht::TihtConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    Gaussian,
    Sors,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    Vectorized,
    Modewise,
    TwoStage,
}

/// Measurement scheme of one sweep cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Scheme {
    pub structure: Structure,
    pub ensemble: Ensemble,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::new(Structure::Vectorized, Ensemble::Gaussian),
        Scheme::new(Structure::Vectorized, Ensemble::Sors),
        Scheme::new(Structure::Modewise, Ensemble::Gaussian),
        Scheme::new(Structure::Modewise, Ensemble::Sors),
        Scheme::new(Structure::TwoStage, Ensemble::Gaussian),
        Scheme::new(Structure::TwoStage, Ensemble::Sors),
    ];

    pub const fn new(structure: Structure, ensemble: Ensemble) -> Self {
        Self { structure, ensemble }
    }

    pub fn id(self) -> &'static str {
        match (self.structure, self.ensemble) {
            (Structure::Vectorized, Ensemble::Gaussian) => "vectorized_gaussian",
            (Structure::Vectorized, Ensemble::Sors) => "vectorized_sors",
            (Structure::Modewise, Ensemble::Gaussian) => "modewise_gaussian",
            (Structure::Modewise, Ensemble::Sors) => "modewise_sors",
            (Structure::TwoStage, Ensemble::Gaussian) => "twostage_gaussian",
            (Structure::TwoStage, Ensemble::Sors) => "twostage_sors",
        }
    }

    /// Small integer folded into operator seeds.
    pub(crate) fn tag(self) -> u64 {
        Scheme::ALL.iter().position(|&s| s == self).expect("listed") as u64
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.id() == s.trim())
            .ok_or_else(|| {
                let known: Vec<_> = Scheme::ALL.iter().map(|x| x.id()).collect();
                Error::config("schemes", format!("unknown scheme `{s}` (known: {})", known.join(", ")))
            })
    }
}

impl TryFrom<String> for Scheme {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Scheme> for String {
    fn from(s: Scheme) -> String {
        s.id().to_string()
    }
}

/// Full description of a recovery sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub n: usize,
    pub d: usize,
    pub kappa: usize,
    pub rank: Vec<usize>,
    pub schemes: Vec<Scheme>,
    /// Per-mode intermediate dimension `m` of the modewise stage.
    pub intermediate_m: Vec<usize>,
    /// Final measurement counts `m₀` (ignored by the pure modewise schemes,
    /// whose output length is fixed at `m^{d/κ}`).
    pub m0: Vec<usize>,
    pub trials: usize,
    pub noise_norm: f64,
    pub seed: u64,
    pub max_iterations: usize,
    pub success_factor: f64,
    pub step_size: f64,
    /// Row rule of every SORS matrix in the sweep.
    #[serde(default)]
    pub sors_rows: RowSampling,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            n: 10,
            d: 4,
            kappa: 2,
            rank: vec![2; 4],
            schemes: vec![
                Scheme::new(Structure::Vectorized, Ensemble::Gaussian),
                Scheme::new(Structure::TwoStage, Ensemble::Gaussian),
                Scheme::new(Structure::Vectorized, Ensemble::Sors),
                Scheme::new(Structure::TwoStage, Ensemble::Sors),
            ],
            intermediate_m: vec![90, 80, 70],
            m0: vec![500, 750, 1000, 1500, 2000, 3000],
            trials: 100,
            noise_norm: 0.0,
            seed: 0,
            max_iterations: 1000,
            success_factor: 1e-3,
            step_size: 1.0,
            sors_rows: RowSampling::Iid,
        }
    }
}

/// Keys accepted in config files and `--set` overrides.
pub const CONFIG_KEYS: [&str; 15] = [
    "n",
    "d",
    "kappa",
    "rank",
    "schemes",
    "intermediate_m",
    "m0",
    "trials",
    "noise",
    "seed",
    "max_iterations",
    "success_factor",
    "step_size",
    "sors_rows",
    "threads",
];

fn parse_num<T: FromStr>(field: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::config(field, format!("cannot parse `{}`", value.trim())))
}

/// Comma-separated list; entries may be `start:stop:step` inclusive ranges.
fn parse_usize_list(field: &str, value: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [one] => out.push(parse_num(field, one)?),
            [a, b, c] => {
                let (start, stop, step): (usize, usize, usize) =
                    (parse_num(field, a)?, parse_num(field, b)?, parse_num(field, c)?);
                if step == 0 || stop < start {
                    return Err(Error::config(field, format!("empty range `{item}`")));
                }
                out.extend((start..=stop).step_by(step));
            }
            _ => return Err(Error::config(field, format!("cannot parse `{item}`"))),
        }
    }
    if out.is_empty() {
        return Err(Error::config(field, "list is empty"));
    }
    Ok(out)
}

impl ExperimentSpec {
    /// Applies one `key = value` pair. `threads` is accepted but belongs to the
    /// runner, so it is ignored here.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        match key {
            "n" => self.n = parse_num(key, value)?,
            "d" => self.d = parse_num(key, value)?,
            "kappa" => self.kappa = parse_num(key, value)?,
            "rank" => {
                let r = parse_usize_list(key, value)?;
                self.rank = r;
            }
            "schemes" => {
                self.schemes = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?;
            }
            "intermediate_m" => self.intermediate_m = parse_usize_list(key, value)?,
            "m0" => self.m0 = parse_usize_list(key, value)?,
            "trials" => self.trials = parse_num(key, value)?,
            "noise" => self.noise_norm = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "max_iterations" => self.max_iterations = parse_num(key, value)?,
            "success_factor" => self.success_factor = parse_num(key, value)?,
            "step_size" => self.step_size = parse_num(key, value)?,
            "sors_rows" => {
                self.sors_rows = match value.trim() {
                    "iid" => RowSampling::Iid,
                    "distinct" => RowSampling::Distinct,
                    other => return Err(Error::config(key, format!("expected `iid` or `distinct`, got `{other}`"))),
                }
            }
            "threads" => {
                parse_num::<usize>(key, value)?;
            }
            other => {
                return Err(Error::config(
                    other,
                    format!("unknown key (known: {})", CONFIG_KEYS.join(", ")),
                ))
            }
        }
        Ok(())
    }

    /// A single-valued rank spreads to all `d` modes.
    fn normalized_rank(&self) -> Vec<usize> {
        if self.rank.len() == 1 && self.d > 1 {
            vec![self.rank[0]; self.d]
        } else {
            self.rank.clone()
        }
    }

    pub fn validate(&mut self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::config("n", "must be at least 1"));
        }
        if self.d < 1 {
            return Err(Error::config("d", "must be at least 1"));
        }
        if self.kappa < 1 || !self.d.is_multiple_of(self.kappa) {
            return Err(Error::config(
                "kappa",
                format!("kappa={} must divide d={}", self.kappa, self.d),
            ));
        }
        let full = self
            .n
            .checked_pow(self.d as u32)
            .ok_or_else(|| Error::config("d", "n^d overflows"))?;
        let grouped = self.n.pow(self.kappa as u32);
        self.rank = self.normalized_rank();
        if self.rank.len() != self.d || self.rank.iter().any(|&r| r == 0 || r > self.n) {
            return Err(Error::config(
                "rank",
                format!("need {} entries in 1..={}, got {:?}", self.d, self.n, self.rank),
            ));
        }
        if self.schemes.is_empty() {
            return Err(Error::config("schemes", "at least one scheme is required"));
        }
        let mut seen = BTreeSet::new();
        if let Some(dup) = self.schemes.iter().find(|s| !seen.insert(**s)) {
            return Err(Error::config("schemes", format!("`{dup}` listed twice")));
        }
        if self.intermediate_m.iter().any(|&m| m == 0 || m > grouped) {
            return Err(Error::config(
                "intermediate_m",
                format!("entries must lie in 1..={grouped} (n^kappa), got {:?}", self.intermediate_m),
            ));
        }
        if self.m0.iter().any(|&m| m == 0 || m > full) {
            return Err(Error::config(
                "m0",
                format!("entries must lie in 1..={full} (n^d), got {:?}", self.m0),
            ));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if !(self.noise_norm >= 0.0) || !self.noise_norm.is_finite() {
            return Err(Error::config("noise", "must be finite and non-negative"));
        }
        let tiht = self.tiht_config(0)?;
        tiht.validate().map_err(|e| {
            let field = if self.max_iterations == 0 {
                "max_iterations"
            } else if !(self.success_factor > 0.0 && self.success_factor < 1.0) {
                "success_factor"
            } else {
                "step_size"
            };
            Error::config(field, e.to_string())
        })?;
        Ok(())
    }

    pub fn tiht_config(&self, seed: u64) -> Result<TihtConfig> {
        Ok(TihtConfig {
            rank: RankVector::new(self.normalized_rank()).map_err(|e| Error::config("rank", e.to_string()))?,
            max_iterations: self.max_iterations,
            success_factor: self.success_factor,
            step_size: self.step_size,
            seed,
        })
    }

    pub fn shape(&self) -> Vec<usize> {
        vec![self.n; self.d]
    }
}

/// Splits flat `key = value` text. Blank lines and `#` comments are skipped;
/// a key may appear only once.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Format(format!("line {}: expected `key = value`, got `{line}`", lineno + 1))
        })?;
        let k = k.trim().to_string();
        if !seen.insert(k.clone()) {
            return Err(Error::config(k, "duplicate key"));
        }
        out.push((k, v.trim().to_string()));
    }
    Ok(out)
}

/// Builds a validated spec from optional config text followed by overrides.
pub fn parse_config_str(text: &str, overrides: &[(String, String)]) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::default();
    for (k, v) in parse_pairs(text)?.iter().chain(overrides) {
        spec.set(k, v)?;
    }
    spec.validate()?;
    Ok(spec)
}

/// Reads `path` (if any) and applies `overrides` on top.
pub fn parse_config(path: Option<&Path>, overrides: &[(String, String)]) -> Result<ExperimentSpec> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
        None => String::new(),
    };
    parse_config_str(&text, overrides)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(k: &str, v: &str) -> (String, String) {
        (k.to_string(), v.to_string())
    }

    fn field_of(e: Error) -> String {
        match e {
            Error::Config { field, .. } => field,
            other => panic!("expected config error, got {other}"),
        }
    }

    #[test]
    fn empty_config_gives_defaults() {
        let spec = parse_config_str("", &[]).unwrap();
        assert_eq!((spec.n, spec.d, spec.kappa), (10, 4, 2));
        assert_eq!(spec.rank, vec![2, 2, 2, 2]);
        assert_eq!(spec.trials, 100);
        assert_eq!(spec.max_iterations, 1000);
        assert_eq!(spec.success_factor, 0.001);
        assert_eq!(spec.intermediate_m, vec![90, 80, 70]);
        assert_eq!(spec.sors_rows, RowSampling::Iid);
        let spec = parse_config_str("sors_rows = distinct", &[]).unwrap();
        assert_eq!(spec.sors_rows, RowSampling::Distinct);
        assert!(parse_config_str("sors_rows = some", &[]).is_err());
    }

    #[test]
    fn overrides_beat_file_values() {
        let spec = parse_config_str("trials = 100\nseed=3 # comment\n", &[pair("trials", "5")]).unwrap();
        assert_eq!(spec.trials, 5);
        assert_eq!(spec.seed, 3);
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(field_of(parse_config_str("kappa = 3", &[]).unwrap_err()), "kappa");
        let e = parse_config_str("kappa = 3", &[]).unwrap_err().to_string();
        assert!(e.contains("divide"), "{e}");
        assert_eq!(field_of(parse_config_str("bogus = 1", &[]).unwrap_err()), "bogus");
        assert_eq!(field_of(parse_config_str("trials = 0", &[]).unwrap_err()), "trials");
        assert_eq!(field_of(parse_config_str("m0 = 20000", &[]).unwrap_err()), "m0");
        assert_eq!(field_of(parse_config_str("intermediate_m = 101", &[]).unwrap_err()), "intermediate_m");
        assert_eq!(field_of(parse_config_str("rank = 2,2", &[]).unwrap_err()), "rank");
        assert_eq!(field_of(parse_config_str("schemes = magic", &[]).unwrap_err()), "schemes");
        assert_eq!(field_of(parse_config_str("success_factor = 2", &[]).unwrap_err()), "success_factor");
        assert_eq!(field_of(parse_config_str("noise = -1", &[]).unwrap_err()), "noise");
        assert_eq!(field_of(parse_config_str("trials = x", &[]).unwrap_err()), "trials");
        assert_eq!(field_of(parse_config_str("seed = 1\nseed = 2", &[]).unwrap_err()), "seed");
        assert!(matches!(parse_config_str("no equals sign", &[]), Err(Error::Format(_))));
    }

    #[test]
    fn lists_ranges_and_scalar_rank() {
        let spec = parse_config_str("m0 = 100:400:100, 1000\nrank = 1\nschemes = twostage_sors, vectorized_sors", &[]).unwrap();
        assert_eq!(spec.m0, vec![100, 200, 300, 400, 1000]);
        assert_eq!(spec.rank, vec![1; 4]);
        assert_eq!(spec.schemes.len(), 2);
        assert!(parse_config_str("m0 = 5:1:1", &[]).is_err());
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.id().parse::<Scheme>().unwrap(), s);
            let json = serde_json::to_string(&s).unwrap();
            assert_eq!(json, format!("\"{}\"", s.id()));
            assert_eq!(serde_json::from_str::<Scheme>(&json).unwrap(), s);
        }
    }

    #[test]
    fn reads_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sweep.cfg");
        fs::write(&p, "n = 4\nd = 2\nkappa = 1\nrank = 2\nintermediate_m = 3\nm0 = 8\n").unwrap();
        let spec = parse_config(Some(&p), &[]).unwrap();
        assert_eq!(spec.rank, vec![2, 2]);
        assert!(parse_config(Some(&dir.path().join("nope")), &[]).is_err());
    }
}
