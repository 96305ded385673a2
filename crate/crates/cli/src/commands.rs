use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use spinboson_core::dynamics::{
    markov_trajectory, residue_trajectory, uniform_times, BlochDynamics, Method,
};
use spinboson_core::entropy::{entropy_series, equilibrium_entropy, EntropySummary};
use spinboson_core::io::{fmt_num, to_json, write_entropy_csv, write_trajectory_csv, TimeAxis};
use spinboson_core::model::{solve_renormalization, ModelParams};
use spinboson_core::oracles::ed::DEFAULT_LAMBDA;
use spinboson_core::oracles::{
    ed_convergence, ed_simulate, pv_hilbert, volterra_trajectory, ConvergenceRow, DiscretizedBath,
};
use spinboson_core::self_energy::{
    crossover_coupling, damping_boundary_coupling, pole_loss_coupling, RegimeLabel, SelfEnergy,
};
use spinboson_core::{Entropy, Model, Params, Regime, Trajectory};

use crate::config::{Level, RunConfig};
use crate::svg::{self, Plot, Series};

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn axis_name(axis: TimeAxis) -> &'static str {
    match axis {
        TimeAxis::OmegaC => "omega_c t",
        TimeAxis::DeltaR => "Delta_r t",
    }
}

fn solve(alpha: f64, delta: f64) -> Result<Model> {
    Ok(solve_renormalization(&ModelParams::new(alpha, delta)?)?)
}

fn regime_of(model: &Model) -> Result<Regime> {
    Ok(SelfEnergy::new(*model).find_pole()?)
}

/// Computes one method's trajectory on `times` (in `1/omega_c`).
pub fn run_method(
    method: Method,
    model: &Model,
    cfg: &RunConfig,
    times: &[f64],
) -> Result<Trajectory> {
    let traj = match method {
        Method::Full => {
            BlochDynamics::new(SelfEnergy::new(*model), cfg.quadrature)?.trajectory(times)?
        }
        Method::Residue => residue_trajectory(times, model, &regime_of(model)?)?,
        Method::Markov => markov_trajectory(times, model, &regime_of(model)?)?,
        Method::Volterra => volterra_trajectory(times, model)?,
        Method::Ed => {
            let bath = DiscretizedBath::logarithmic(
                &model.params,
                cfg.ed_modes,
                cfg.ed_n_max,
                DEFAULT_LAMBDA,
            )?;
            ed_simulate(times, &model.params, &bath)?
        }
    };
    Ok(traj)
}

fn is_invalid_state(e: &spinboson_core::Error) -> bool {
    match e {
        spinboson_core::Error::InvalidState { .. } => true,
        spinboson_core::Error::AtTime { source, .. } => is_invalid_state(source),
        _ => false,
    }
}

#[derive(Serialize)]
struct DynamicsSummary {
    alpha: f64,
    delta: f64,
    method: Method,
    time_axis: TimeAxis,
    #[serde(flatten)]
    entropy: EntropySummary<f64>,
}

pub fn dynamics(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    let times = uniform_times(cfg.t_max, cfg.dt);
    let alphas = cfg.alpha_list();
    let multi = alphas.len() > 1;
    fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    let mut overlay = Vec::new();
    for &alpha in &alphas {
        let dir: PathBuf = if multi {
            cfg.out_dir.join(format!("alpha_{}", fmt_num(alpha)))
        } else {
            cfg.out_dir.clone()
        };
        fs::create_dir_all(&dir)?;
        let model = solve(alpha, cfg.delta)?;
        let scale = cfg.time_axis.scale(model.omega_c(), model.delta_r);
        let mut sz_plot = Vec::new();
        let mut s_plot = Vec::new();
        for &method in &cfg.methods {
            let traj = run_method(method, &model, cfg, &times)
                .with_context(|| format!("method {method}, alpha {alpha}"))?;
            write_trajectory_csv(
                create(&dir.join(format!("trajectory_{method}.csv")))?,
                &traj,
                scale,
            )?;
            let t: Vec<f64> = traj.times.iter().map(|t| t * scale).collect();
            sz_plot.push(Series {
                label: method.to_string(),
                points: t.iter().copied().zip(traj.sz.iter().copied()).collect(),
            });
            let series: Entropy = match entropy_series(&traj, &model) {
                Ok(s) => s,
                // the pole form violates sy(0) = 0, so its Bloch vector can leave the ball
                Err(e) if method == Method::Residue && is_invalid_state(&e) => {
                    eprintln!(
                        "warning: alpha={} method=residue: no entropy output ({e})",
                        fmt_num(alpha)
                    );
                    continue;
                }
                Err(e) => {
                    return Err(e)
                        .with_context(|| format!("entropy for method {method}, alpha {alpha}"))
                }
            };
            write_entropy_csv(
                create(&dir.join(format!("entropy_{method}.csv")))?,
                &series,
                scale,
            )?;
            let mut entropy = series.summary();
            entropy.t_of_max *= scale;
            let summary = DynamicsSummary {
                alpha,
                delta: cfg.delta,
                method,
                time_axis: cfg.time_axis,
                entropy,
            };
            write_text(
                &dir.join(format!("summary_{method}.json")),
                &to_json(&summary)?,
            )?;
            let pts: Vec<(f64, f64)> = t
                .iter()
                .copied()
                .zip(series.s_values.iter().copied())
                .collect();
            if method == cfg.methods[0] {
                overlay.push(Series {
                    label: format!("alpha={}", fmt_num(alpha)),
                    points: pts.clone(),
                });
            }
            s_plot.push(Series {
                label: method.to_string(),
                points: pts,
            });
            println!(
                "alpha={} method={method}: s_eq={} overshoot={} maxima={}",
                fmt_num(alpha),
                fmt_num(summary.entropy.s_eq),
                fmt_num(summary.entropy.overshoot),
                summary.entropy.n_local_maxima
            );
        }
        let title = format!("alpha = {}, Delta = {}", fmt_num(alpha), fmt_num(cfg.delta));
        write_text(
            &dir.join("sz.svg"),
            &svg::render(&Plot {
                title: title.clone(),
                x_label: axis_name(cfg.time_axis).into(),
                y_label: "<sz>".into(),
                series: sz_plot,
            }),
        )?;
        write_text(
            &dir.join("entropy.svg"),
            &svg::render(&Plot {
                title,
                x_label: axis_name(cfg.time_axis).into(),
                y_label: "S (bits)".into(),
                series: s_plot,
            }),
        )?;
    }
    if multi {
        write_text(
            &cfg.out_dir.join("entropy_overlay.svg"),
            &svg::render(&Plot {
                title: format!(
                    "entropy, {} method, Delta = {}",
                    cfg.methods[0],
                    fmt_num(cfg.delta)
                ),
                x_label: axis_name(cfg.time_axis).into(),
                y_label: "S (bits)".into(),
                series: overlay,
            }),
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RegimePoint {
    alpha: f64,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    report: Option<Regime>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct Boundaries {
    /// Self-consistent root of `alpha = (1 + Dr/wc)/2`.
    alpha_c: Option<f64>,
    /// Coupling where the pole search stops finding a root.
    alpha_c_pole_loss: Option<f64>,
    alpha_star_c: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
}

#[derive(Serialize)]
struct RegimeTable {
    delta: f64,
    points: Vec<RegimePoint>,
    boundaries: Boundaries,
}

const BOUNDARY_TOL: f64 = 1e-6;

pub fn regime(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    let delta = cfg.delta;
    let alphas = if cfg.alphas.is_empty() {
        crate::config::parse_grid("alphas", "0:0.6:0.025")?
    } else {
        cfg.alphas.clone()
    };
    let points: Vec<RegimePoint> = alphas
        .par_iter()
        .map(
            |&alpha| match solve(alpha, delta).and_then(|m| regime_of(&m)) {
                Ok(r) => RegimePoint {
                    alpha,
                    report: Some(r),
                    error: None,
                },
                Err(e) => RegimePoint {
                    alpha,
                    report: None,
                    error: Some(format!("{e:#}")),
                },
            },
        )
        .collect();
    let mut notes = Vec::new();
    let alpha_c = crossover_coupling(delta)
        .map_err(|e| notes.push(format!("alpha_c: {e}")))
        .ok();
    let label = |p: &RegimePoint| p.report.as_ref().map(|r| r.label);
    let bracket = |lo: RegimeLabel, hi: fn(RegimeLabel) -> bool| {
        points
            .windows(2)
            .find_map(|w| match (label(&w[0]), label(&w[1])) {
                (Some(a), Some(b)) if a == lo && hi(b) => Some((w[0].alpha, w[1].alpha)),
                _ => None,
            })
    };
    let mut locate =
        |name: &str,
         br: Option<(f64, f64)>,
         f: &dyn Fn(f64, f64) -> spinboson_core::Result<f64>| match br {
            Some((a, b)) => f(a, b).map_err(|e| notes.push(format!("{name}: {e}"))).ok(),
            None => {
                notes.push(format!("{name}: no bracketing transition on the grid"));
                None
            }
        };
    let loss_br = points.windows(2).find_map(|w| {
        let coherent = |p: &RegimePoint| p.report.as_ref().map(|r| r.is_coherent());
        match (coherent(&w[0]), coherent(&w[1])) {
            (Some(true), Some(false)) => Some((w[0].alpha, w[1].alpha)),
            _ => None,
        }
    });
    let alpha_c_pole_loss = locate("alpha_c_pole_loss", loss_br, &|a, b| {
        pole_loss_coupling(delta, a, b, BOUNDARY_TOL)
    });
    let star_br = bracket(RegimeLabel::Underdamped, |b| b != RegimeLabel::Underdamped);
    let alpha_star_c = locate("alpha_star_c", star_br, &|a, b| {
        damping_boundary_coupling(delta, a, b, BOUNDARY_TOL)
    });

    for p in &points {
        match (&p.report, &p.error) {
            (Some(r), _) => println!(
                "alpha={:<8} {:<12} omega0={} gamma={}",
                fmt_num(p.alpha),
                r.label,
                r.omega0.map_or("-".into(), fmt_num),
                r.gamma_at_pole.map_or("-".into(), fmt_num)
            ),
            (None, Some(e)) => println!("alpha={:<8} error: {e}", fmt_num(p.alpha)),
            _ => {}
        }
    }
    let show = |v: Option<f64>| v.map_or("n/a".to_string(), fmt_num);
    println!(
        "alpha_c={} alpha_c(pole loss)={} alpha*_c={}",
        show(alpha_c),
        show(alpha_c_pole_loss),
        show(alpha_star_c)
    );
    let table = RegimeTable {
        delta,
        points,
        boundaries: Boundaries {
            alpha_c,
            alpha_c_pole_loss,
            alpha_star_c,
            notes,
        },
    };
    fs::create_dir_all(&cfg.out_dir)?;
    write_text(&cfg.out_dir.join("regime.json"), &to_json(&table)?)
}

#[derive(Debug, Clone, Default)]
struct SweepRow {
    delta: f64,
    alpha: f64,
    eta: Option<f64>,
    delta_r: Option<f64>,
    s_eq: Option<f64>,
    label: Option<String>,
    summary: Option<EntropySummary<f64>>,
    error: Option<String>,
}

fn sweep_point(alpha: f64, delta: f64, cfg: &RunConfig, times: &[f64]) -> SweepRow {
    let mut row = SweepRow {
        delta,
        alpha,
        ..SweepRow::default()
    };
    let model = match solve(alpha, delta) {
        Ok(m) => m,
        Err(e) => {
            row.error = Some(format!("{e:#}"));
            return row;
        }
    };
    row.eta = Some(model.eta);
    row.delta_r = Some(model.delta_r);
    row.s_eq = Some(equilibrium_entropy(&model));
    if model.is_localized() {
        row.label = Some("localized".into());
        return row;
    }
    let run = || -> Result<(String, Option<EntropySummary<f64>>)> {
        let regime = regime_of(&model)?;
        if times.len() < 2 {
            return Ok((regime.label.to_string(), None));
        }
        let traj = run_method(Method::Full, &model, cfg, times)?;
        let mut s = entropy_series(&traj, &model)?.summary();
        s.t_of_max *= cfg.time_axis.scale(model.omega_c(), model.delta_r);
        Ok((regime.label.to_string(), Some(s)))
    };
    match run() {
        Ok((label, summary)) => {
            row.label = Some(label);
            row.summary = summary;
        }
        Err(e) => row.error = Some(format!("{e:#}")),
    }
    row
}

pub const SWEEP_HEADER: &str =
    "delta,alpha,eta,delta_r,s_eq,label,overshoot,n_local_maxima,t_of_max,error";

fn write_sweep(mut out: impl Write, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    let opt = |v: Option<f64>| v.map_or(String::new(), fmt_num);
    for r in rows {
        let s = r.summary.as_ref();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_num(r.delta),
            fmt_num(r.alpha),
            opt(r.eta),
            opt(r.delta_r),
            opt(r.s_eq),
            r.label.clone().unwrap_or_default(),
            opt(s.map(|s| s.overshoot)),
            s.map_or(String::new(), |s| s.n_local_maxima.to_string()),
            opt(s.map(|s| s.t_of_max)),
            r.error
                .as_ref()
                .map_or(String::new(), |e| format!("\"{}\"", e.replace('"', "'"))),
        )?;
    }
    Ok(())
}

pub fn sweep(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    let times = if cfg.t_max > 0.0 {
        uniform_times(cfg.t_max, cfg.dt)
    } else {
        Vec::new()
    };
    let mut deltas = cfg.delta_list();
    let mut alphas = cfg.alpha_list();
    deltas.sort_by(f64::total_cmp);
    alphas.sort_by(f64::total_cmp);
    let grid: Vec<(f64, f64)> = deltas
        .iter()
        .flat_map(|&d| alphas.iter().map(move |&a| (d, a)))
        .collect();
    let rows: Vec<SweepRow> = grid
        .par_iter()
        .map(|&(d, a)| sweep_point(a, d, cfg, &times))
        .collect();
    fs::create_dir_all(&cfg.out_dir)?;
    let mut f = create(&cfg.out_dir.join("sweep.csv"))?;
    write_sweep(&mut f, &rows)?;
    f.flush()?;
    let series = deltas
        .iter()
        .map(|&d| Series {
            label: format!("Delta={}", fmt_num(d)),
            points: rows
                .iter()
                .filter(|r| r.delta == d)
                .filter_map(|r| r.s_eq.map(|s| (r.alpha, s)))
                .collect(),
        })
        .collect();
    write_text(
        &cfg.out_dir.join("s_eq.svg"),
        &svg::render(&Plot {
            title: "equilibrium entanglement entropy".into(),
            x_label: "alpha".into(),
            y_label: "S_eq (bits)".into(),
            series,
        }),
    )?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    println!("sweep: {} points, {failed} with errors", rows.len());
    Ok(())
}

#[derive(Serialize)]
struct Suite {
    name: &'static str,
    measured: f64,
    bound: f64,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct ValidationReport {
    level: &'static str,
    alpha: f64,
    delta: f64,
    suites: Vec<Suite>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    ed_convergence: Vec<ConvergenceRow<f64>>,
    pass: bool,
}

fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn suite(name: &'static str, bound: f64, measured: Result<f64>) -> Suite {
    match measured {
        Ok(m) => Suite {
            name,
            measured: m,
            bound,
            pass: m <= bound,
            error: None,
        },
        Err(e) => Suite {
            name,
            measured: f64::NAN,
            bound,
            pass: false,
            error: Some(format!("{e:#}")),
        },
    }
}

fn volterra_suite(model: &Model, cfg: &RunConfig) -> Result<f64> {
    let times = uniform_times(50.0, 0.1);
    let full = run_method(Method::Full, model, cfg, &times)?;
    let vol = volterra_trajectory(&times, model)?;
    Ok(max_dev(&full.sz, &vol.sz).max(max_dev(&full.sx, &vol.sx)))
}

fn hilbert_suite(model: &Model) -> Result<f64> {
    let e = SelfEnergy::new(*model);
    let dr = e.delta_r();
    let mut closed = Vec::new();
    let mut pv = Vec::new();
    let mut k = 0;
    while closed.len() < 200 {
        let w = -2.0 + 4.0 * (k as f64 + 0.5) / 208.0;
        k += 1;
        if (w - 1.0).abs() < 1e-2 || (w + dr).abs() < 1e-2 {
            continue;
        }
        closed.push(e.level_shift(w)?);
        pv.push(pv_hilbert(w, &e)?);
    }
    let scale = closed.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let dev = max_dev(&closed, &pv);
    Ok(if scale > 0.0 { dev / scale } else { dev })
}

fn residue_suite(model: &Model, cfg: &RunConfig) -> Result<f64> {
    let times = uniform_times(100.0, 0.1);
    let full = run_method(Method::Full, model, cfg, &times)?;
    let res = run_method(Method::Residue, model, cfg, &times)?;
    Ok(max_dev(&full.sz, &res.sz))
}

/// Runs the oracle suites; returns whether all passed. The report is written
/// either way.
pub fn validate(cfg: &RunConfig) -> Result<bool> {
    cfg.validate()?;
    let model = solve(cfg.alpha, cfg.delta)?;
    let mut suites = vec![
        suite("volterra", 1e-3, volterra_suite(&model, cfg)),
        suite("pv_hilbert", 1e-6, hilbert_suite(&model)),
        suite("residue", 0.02, residue_suite(&model, cfg)),
    ];
    let mut table = Vec::new();
    if cfg.level == Level::Full {
        let params: Params = model.params;
        let times = uniform_times(20.0, 0.5);
        let measured = run_method(Method::Full, &model, cfg, &times).and_then(|full| {
            let settings = [(4, 3), (5, 3), (cfg.ed_modes, cfg.ed_n_max), (7, 3), (6, 4)];
            table = ed_convergence(&times, &params, &full.sz, &settings)?;
            Ok(table[2].max_deviation)
        });
        suites.push(suite("ed", 0.05, measured));
    }
    let pass = suites.iter().all(|s| s.pass);
    for s in &suites {
        println!(
            "[{}] {:<10} measured={} bound={}{}",
            if s.pass { "PASS" } else { "FAIL" },
            s.name,
            fmt_num(s.measured),
            fmt_num(s.bound),
            s.error
                .as_ref()
                .map_or(String::new(), |e| format!(" ({e})"))
        );
    }
    let report = ValidationReport {
        level: match cfg.level {
            Level::Quick => "quick",
            Level::Full => "full",
        },
        alpha: cfg.alpha,
        delta: cfg.delta,
        suites,
        ed_convergence: table,
        pass,
    };
    fs::create_dir_all(&cfg.out_dir)?;
    write_text(&cfg.out_dir.join("validation.json"), &to_json(&report)?)?;
    Ok(pass)
}
