//! Run configuration: a flat `key = value` file overlaid by command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use spinboson_core::dynamics::{Method, QuadratureConfig};
use spinboson_core::io::TimeAxis;
use spinboson_core::model::ModelParams;

/// A problem with the user's input, reported with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

impl std::str::FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "quick" => Ok(Level::Quick),
            "full" => Ok(Level::Full),
            _ => Err(format!(
                "unknown validation level `{s}` (expected quick or full)"
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub alpha: f64,
    /// Further couplings; when non-empty these replace `alpha`.
    pub alphas: Vec<f64>,
    pub delta: f64,
    pub deltas: Vec<f64>,
    pub t_max: f64,
    pub dt: f64,
    pub methods: Vec<Method>,
    pub time_axis: TimeAxis,
    pub out_dir: PathBuf,
    pub quadrature: QuadratureConfig<f64>,
    pub ed_modes: usize,
    pub ed_n_max: usize,
    pub level: Level,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            alphas: Vec::new(),
            delta: 0.1,
            deltas: Vec::new(),
            t_max: 100.0,
            dt: 0.1,
            methods: vec![Method::Full],
            time_axis: TimeAxis::OmegaC,
            out_dir: PathBuf::from("out"),
            quadrature: QuadratureConfig::default(),
            ed_modes: 6,
            ed_n_max: 3,
            level: Level::Quick,
        }
    }
}

fn num(key: &str, v: &str) -> anyhow::Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| usage(format!("`{key}`: `{v}` is not a number")))
}

fn count(key: &str, v: &str) -> anyhow::Result<usize> {
    v.trim()
        .parse::<usize>()
        .map_err(|_| usage(format!("`{key}`: `{v}` is not a non-negative integer")))
}

/// Parses `a,b,c` or an inclusive range `start:stop:step`.
pub fn parse_grid(key: &str, v: &str) -> anyhow::Result<Vec<f64>> {
    let v = v.trim();
    if v.is_empty() {
        return Ok(Vec::new());
    }
    if v.contains(':') {
        let p: Vec<&str> = v.split(':').collect();
        if p.len() != 3 {
            return Err(usage(format!("`{key}`: range must be start:stop:step")));
        }
        let (a, b, h) = (num(key, p[0])?, num(key, p[1])?, num(key, p[2])?);
        if !(h > 0.0) || b < a {
            return Err(usage(format!(
                "`{key}`: range needs step > 0 and stop >= start"
            )));
        }
        let n = ((b - a) / h + 1e-9).floor() as usize;
        // multiply rather than accumulate, then drop representation noise (0.1 * 3 -> 0.3)
        return Ok((0..=n)
            .map(|k| ((a + h * k as f64) * 1e12).round() / 1e12)
            .collect());
    }
    v.split(',').map(|s| num(key, s)).collect()
}

pub fn parse_methods(v: &str) -> anyhow::Result<Vec<Method>> {
    let mut out = Vec::new();
    for s in v.split(',').filter(|s| !s.trim().is_empty()) {
        let m: Method = s.parse().map_err(|_| {
            usage(format!(
                "unknown method `{}` (full, residue, markov, volterra, ed)",
                s.trim()
            ))
        })?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(usage("no methods requested"));
    }
    Ok(out)
}

/// Reads `key = value` lines; `#` starts a comment.
pub fn read_pairs(text: &str) -> anyhow::Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(usage(format!(
                "config line {}: expected key = value",
                i + 1
            )));
        };
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

impl RunConfig {
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::default();
        for (k, v) in read_pairs(&text)? {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    /// Applies one setting; the same keys are accepted in files and as
    /// overrides.
    pub fn set(&mut self, key: &str, v: &str) -> anyhow::Result<()> {
        match key {
            "alpha" => self.alpha = num(key, v)?,
            "alphas" => self.alphas = parse_grid(key, v)?,
            "delta" => self.delta = num(key, v)?,
            "deltas" => self.deltas = parse_grid(key, v)?,
            "tmax" | "t_max" => self.t_max = num(key, v)?,
            "dt" => self.dt = num(key, v)?,
            "methods" => self.methods = parse_methods(v)?,
            "time_axis" => self.time_axis = v.parse().map_err(usage)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "abs_tol" => self.quadrature.abs_tol = num(key, v)?,
            "rel_tol" => self.quadrature.rel_tol = num(key, v)?,
            "max_intervals" => self.quadrature.max_intervals = count(key, v)?,
            "oscillation_panel_factor" => self.quadrature.oscillation_panel_factor = num(key, v)?,
            "ed_modes" => self.ed_modes = count(key, v)?,
            "ed_n_max" => self.ed_n_max = count(key, v)?,
            "level" => self.level = v.parse().map_err(usage)?,
            _ => return Err(usage(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    pub fn alpha_list(&self) -> Vec<f64> {
        if self.alphas.is_empty() {
            vec![self.alpha]
        } else {
            self.alphas.clone()
        }
    }

    pub fn delta_list(&self) -> Vec<f64> {
        if self.deltas.is_empty() {
            vec![self.delta]
        } else {
            self.deltas.clone()
        }
    }

    /// Checks every value before any computation starts.
    pub fn validate(&self) -> anyhow::Result<()> {
        for &a in &self.alpha_list() {
            for &d in &self.delta_list() {
                ModelParams::new(a, d).map_err(|e| usage(e.to_string()))?;
            }
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(usage(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_max >= 0.0) || !self.t_max.is_finite() {
            return Err(usage(format!(
                "tmax must be non-negative, got {}",
                self.t_max
            )));
        }
        self.quadrature
            .validate()
            .map_err(|e| usage(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("a", "0.1, 0.2").unwrap(), vec![0.1, 0.2]);
        let g = parse_grid("a", "0:0.9:0.1").unwrap();
        assert_eq!(g.len(), 10);
        assert_eq!(g[3], 0.3);
        assert!(parse_grid("a", "0:1").is_err());
        assert!(parse_grid("a", "1:0:0.1").is_err());
    }

    #[test]
    fn file_keys_and_comments() {
        let m = read_pairs("# header\nalpha = 0.2  # inline\n\nmethods=full,markov\n").unwrap();
        let mut c = RunConfig::default();
        for (k, v) in &m {
            c.set(k, v).unwrap();
        }
        assert_eq!(c.alpha, 0.2);
        assert_eq!(c.methods, vec![Method::Full, Method::Markov]);
        assert!(read_pairs("alpha 0.2").is_err());
        assert!(c.set("colour", "red").is_err());
    }

    #[test]
    fn validation_rejects_bad_values() {
        let c = RunConfig {
            dt: 0.0,
            ..RunConfig::default()
        };
        assert!(c.validate().unwrap_err().is::<UsageError>());
        let c = RunConfig {
            alpha: -1.0,
            ..RunConfig::default()
        };
        assert!(c.validate().is_err());
        assert!(RunConfig::default().validate().is_ok());
    }
}
