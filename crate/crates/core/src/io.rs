//! Stable CSV and JSON output.
//!
//! Numbers are written as the shortest decimal that round-trips (Rust's
//! `Debug` formatting for floats), independent of locale, so identical
//! inputs give byte-identical files.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::dynamics::{BlochTrajectory, Method};
use crate::entropy::EntropySeries;
use crate::scalar::Real;

/// Version stamped into every JSON document.
pub const SCHEMA_VERSION: u32 = 1;
pub const TRAJECTORY_HEADER: &str = "t,sx,sy,sz,method";
pub const ENTROPY_HEADER: &str = "t,entropy,s_eq,method";

/// Shortest round-trip decimal for `x`.
pub fn fmt_num<T: Real>(x: T) -> String {
    format!("{x:?}")
}

/// Unit for the `t` column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeAxis {
    /// `omega_c t`.
    #[default]
    OmegaC,
    /// `Dr t`.
    DeltaR,
}

impl TimeAxis {
    /// Multiplier applied to times measured in `1/omega_c`.
    pub fn scale<T: Real>(self, omega_c: T, delta_r: T) -> T {
        match self {
            TimeAxis::OmegaC => T::one(),
            TimeAxis::DeltaR => delta_r / omega_c,
        }
    }
}

impl std::str::FromStr for TimeAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "omega_c" => Ok(TimeAxis::OmegaC),
            "delta_r" => Ok(TimeAxis::DeltaR),
            other => Err(format!(
                "unknown time axis `{other}` (expected omega_c or delta_r)"
            )),
        }
    }
}

pub fn write_trajectory_csv<T: Real, W: Write>(
    mut out: W,
    traj: &BlochTrajectory<T>,
    time_scale: T,
) -> io::Result<()> {
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    for i in 0..traj.len() {
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt_num(traj.times[i] * time_scale),
            fmt_num(traj.sx[i]),
            fmt_num(traj.sy[i]),
            fmt_num(traj.sz[i]),
            traj.method
        )?;
    }
    Ok(())
}

pub fn write_entropy_csv<T: Real, W: Write>(
    mut out: W,
    series: &EntropySeries<T>,
    time_scale: T,
) -> io::Result<()> {
    writeln!(out, "{ENTROPY_HEADER}")?;
    for (t, s) in series.times.iter().zip(&series.s_values) {
        writeln!(
            out,
            "{},{},{},{}",
            fmt_num(*t * time_scale),
            fmt_num(*s),
            fmt_num(series.s_eq),
            series.method
        )?;
    }
    Ok(())
}

/// One parsed trajectory row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
    pub method: Method,
}

fn invalid(line: usize, what: &str) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, format!("line {line}: {what}"))
}

/// Reads a file written by [`write_trajectory_csv`].
pub fn read_trajectory_csv<R: BufRead>(input: R) -> io::Result<Vec<TrajectoryRow>> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != TRAJECTORY_HEADER {
        return Err(invalid(1, "missing trajectory header"));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(invalid(i + 2, "expected 5 fields"));
        }
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| invalid(i + 2, "bad number"))
        };
        rows.push(TrajectoryRow {
            t: num(f[0])?,
            sx: num(f[1])?,
            sy: num(f[2])?,
            sz: num(f[3])?,
            method: f[4]
                .trim()
                .parse()
                .map_err(|_| invalid(i + 2, "bad method"))?,
        });
    }
    Ok(rows)
}

/// Wraps a report with the schema version.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Versioned<R> {
    pub schema_version: u32,
    #[serde(flatten)]
    pub body: R,
}

impl<R> Versioned<R> {
    pub fn new(body: R) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            body,
        }
    }
}

/// Pretty JSON with the schema version, newline terminated.
pub fn to_json<R: Serialize>(body: &R) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(&Versioned::new(body))?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::uniform_times;
    use crate::model::ModelParams;

    fn sample() -> BlochTrajectory<f64> {
        let times = uniform_times(0.3, 0.1);
        BlochTrajectory {
            sx: vec![0.0, 1e-20, 0.1 + 0.2, -0.5],
            sy: vec![0.0; 4],
            sz: vec![1.0, 0.9, 0.7, 1.0 / 3.0],
            times,
            method: Method::Full,
            params: ModelParams::new(0.1, 0.1).unwrap(),
        }
    }

    #[test]
    fn csv_round_trips_bit_for_bit() {
        let tr = sample();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &tr, 1.0).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,sx,sy,sz,method\n0.0,0.0,0.0,1.0,full\n"));
        assert!(text.contains(",1e-20,"));
        let rows = read_trajectory_csv(&buf[..]).unwrap();
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.t.to_bits(), tr.times[i].to_bits());
            assert_eq!(r.sx.to_bits(), tr.sx[i].to_bits());
            assert_eq!(r.sz.to_bits(), tr.sz[i].to_bits());
        }
    }

    #[test]
    fn json_carries_schema_version() {
        #[derive(Serialize)]
        struct Body {
            x: f64,
        }
        let v: serde_json::Value =
            serde_json::from_str(&to_json(&Body { x: 0.5 }).unwrap()).unwrap();
        assert_eq!(v["schema_version"], SCHEMA_VERSION);
        assert_eq!(v["x"], 0.5);
    }

    #[test]
    fn time_axis_parsing_and_scale() {
        assert_eq!("delta_r".parse::<TimeAxis>().unwrap(), TimeAxis::DeltaR);
        assert!("seconds".parse::<TimeAxis>().is_err());
        assert_eq!(TimeAxis::DeltaR.scale(1.0, 0.07), 0.07);
        assert_eq!(TimeAxis::OmegaC.scale(1.0, 0.07), 1.0);
    }
}
