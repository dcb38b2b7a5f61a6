//! Trace files.
//!
//! A closed-loop trace becomes three files sharing a stem:
//!
//! - `<stem>_signals.csv`: one row per basic period (`t, time, x1.., u, y, y_ref, q`),
//! - `<stem>_intervals.csv`: one row per updating interval with every
//!   monitor quantity,
//! - `<stem>_meta.toml`: the resolved scenario plus derived solver settings.
//!
//! Floats are written with the shortest representation that parses back to
//! the same bits.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::closedloop::{IntervalRecord, SignalSample, Trace};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::monitor::Branch;
use crate::presets::{SolverSweep, SweepRow};

pub const INTERVAL_COLUMNS: [&str; 20] = [
    "k",
    "t",
    "q",
    "J",
    "J_plus",
    "J_hat_next",
    "J_next",
    "E",
    "D",
    "K",
    "shift_ratio",
    "prediction_ratio",
    "alpha_D",
    "dE_dq",
    "dK_dq",
    "Gamma",
    "branch",
    "restarts",
    "q_next",
    "prediction_error",
];

#[derive(Debug, Clone, PartialEq)]
pub struct TraceFiles {
    pub signals: PathBuf,
    pub intervals: PathBuf,
    pub meta: PathBuf,
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    if n == 1 {
        vec![prefix.to_string()]
    } else {
        (1..=n).map(|i| format!("{prefix}{i}")).collect()
    }
}

fn signal_columns(n_x: usize, n_u: usize, n_y: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string(), "time".to_string()];
    cols.extend((1..=n_x).map(|i| format!("x{i}")));
    cols.extend(names("u", n_u));
    cols.extend(names("y", n_y));
    cols.extend(names("y_ref", n_y));
    cols.push("q".to_string());
    cols
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn f(v: f64) -> String {
    format!("{v}")
}

pub fn write_signals(path: &Path, trace: &Trace) -> Result<()> {
    let tau = trace.config.plant.tau_c;
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(signal_columns(trace.final_state.len(), 1, 1))
        .map_err(csv_err(path))?;
    for s in &trace.signals {
        let mut row = vec![s.t.to_string(), f(s.t as f64 * tau)];
        row.extend(s.x.iter().map(|v| f(*v)));
        row.extend(s.u.iter().map(|v| f(*v)));
        row.extend(s.y.iter().map(|v| f(*v)));
        row.extend(s.y_ref.iter().map(|v| f(*v)));
        row.push(s.q.to_string());
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_intervals(path: &Path, records: &[IntervalRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(INTERVAL_COLUMNS).map_err(csv_err(path))?;
    for r in records {
        let row = [
            r.index.to_string(),
            r.t.to_string(),
            r.q.to_string(),
            f(r.j_k),
            f(r.j_k_plus),
            f(r.j_hat_next),
            f(r.j_next),
            f(r.e),
            f(r.d),
            f(r.k),
            f(r.shift_ratio),
            f(r.prediction_ratio),
            f(r.alpha_d),
            f(r.de_dq),
            f(r.dk_dq),
            f(r.gamma),
            r.branch.as_str().to_string(),
            r.restarts.to_string(),
            r.q_next.to_string(),
            f(r.prediction_error),
        ];
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

#[derive(Serialize)]
struct Resolved {
    version: &'static str,
    lipschitz: f64,
    momentum: f64,
    restart: Option<usize>,
    lambda_min: f64,
    lambda_max: f64,
}

#[derive(Serialize)]
struct Summary {
    intervals: usize,
    final_t: usize,
    final_state: Vec<f64>,
    tracking_cost: f64,
}

#[derive(Serialize)]
struct Meta<'a> {
    scenario: &'a ScenarioConfig,
    resolved: Resolved,
    summary: Summary,
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut file = File::create(path).map_err(io_err(path))?;
    file.write_all(text.as_bytes()).map_err(io_err(path))
}

/// Writes the three trace files into `dir` (created if missing).
pub fn write_trace(trace: &Trace, dir: &Path, stem: &str) -> Result<TraceFiles> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let files = TraceFiles {
        signals: dir.join(format!("{stem}_signals.csv")),
        intervals: dir.join(format!("{stem}_intervals.csv")),
        meta: dir.join(format!("{stem}_meta.toml")),
    };
    write_signals(&files.signals, trace)?;
    write_intervals(&files.intervals, &trace.records)?;
    let meta = Meta {
        scenario: &trace.config,
        resolved: Resolved {
            version: crate::VERSION,
            lipschitz: trace.solver.lipschitz,
            momentum: trace.solver.momentum,
            restart: trace.solver.restart,
            lambda_min: trace.hessian_extremes.0,
            lambda_max: trace.hessian_extremes.1,
        },
        summary: Summary {
            intervals: trace.records.len(),
            final_t: trace.final_t,
            final_state: trace.final_state.clone(),
            tracking_cost: trace.tracking_cost(),
        },
    };
    let text = toml::to_string(&meta).map_err(|e| Error::Config(e.to_string()))?;
    write_text(&files.meta, &text)?;
    Ok(files)
}

/// Writes `<stem>_sweep.csv` (relative decrease and raw cost per iteration
/// for each solver variant) and `<stem>_meta.toml`.
pub fn write_sweep(sweep: &SolverSweep, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let data = dir.join(format!("{stem}_sweep.csv"));
    let meta = dir.join(format!("{stem}_meta.toml"));

    let mut w = csv::Writer::from_path(&data).map_err(csv_err(&data))?;
    let mut header = vec!["iter".to_string()];
    header.extend(sweep.curves.iter().map(|c| c.label.clone()));
    header.extend(sweep.curves.iter().map(|c| format!("J_{}", c.label)));
    w.write_record(&header).map_err(csv_err(&data))?;
    let rel: Vec<Vec<f64>> = sweep.curves.iter().map(|c| c.log.relative_decrease()).collect();
    let rows = sweep.curves.iter().map(|c| c.log.costs.len()).min().unwrap_or(0);
    for i in 0..rows {
        let mut row = vec![i.to_string()];
        row.extend(rel.iter().map(|r| f(r[i])));
        row.extend(sweep.curves.iter().map(|c| f(c.log.costs[i])));
        w.write_record(&row).map_err(csv_err(&data))?;
    }
    w.flush().map_err(io_err(&data))?;

    #[derive(Serialize)]
    struct Variant<'a> {
        label: &'a str,
        lipschitz: f64,
        momentum: f64,
        restart: Option<usize>,
    }
    #[derive(Serialize)]
    struct Instance<'a> {
        interval: usize,
        k0: usize,
        x_hat: &'a [f64],
        variants: Vec<Variant<'a>>,
    }
    #[derive(Serialize)]
    struct SweepMeta<'a> {
        version: &'static str,
        scenario: &'a ScenarioConfig,
        instance: Instance<'a>,
    }
    let m = SweepMeta {
        version: crate::VERSION,
        scenario: &sweep.config,
        instance: Instance {
            interval: sweep.interval,
            k0: sweep.k0,
            x_hat: &sweep.x_hat,
            variants: sweep
                .curves
                .iter()
                .map(|c| Variant {
                    label: &c.label,
                    lipschitz: c.config.lipschitz,
                    momentum: c.config.momentum,
                    restart: c.config.restart,
                })
                .collect(),
        },
    };
    let text = toml::to_string(&m).map_err(|e| Error::Config(e.to_string()))?;
    write_text(&meta, &text)?;
    Ok((data, meta))
}

/// Writes the rows of a constant-budget sweep as `q,tracking_cost,intervals,mean_K`.
pub fn write_budget_table(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["q", "tracking_cost", "intervals", "mean_K"])
        .map_err(csv_err(path))?;
    for r in rows {
        w.write_record([r.q.to_string(), f(r.tracking_cost), r.intervals.to_string(), f(r.mean_k)])
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn parse<T: std::str::FromStr>(path: &Path, field: &str, col: &str) -> Result<T> {
    field.parse().map_err(|_| {
        Error::Config(format!("{}: cannot parse `{field}` in column {col}", path.display()))
    })
}

/// Reads back a signals file written by [`write_signals`].
pub fn read_signals(path: &Path) -> Result<Vec<SignalSample>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header: Vec<String> = r.headers().map_err(csv_err(path))?.iter().map(str::to_string).collect();
    let idx = |pred: &dyn Fn(&str) -> bool| -> Vec<usize> {
        header.iter().enumerate().filter(|(_, h)| pred(h)).map(|(i, _)| i).collect()
    };
    let xs = idx(&|h| h.starts_with('x') && h[1..].parse::<usize>().is_ok());
    let us = idx(&|h| h == "u" || (h.starts_with('u') && h[1..].parse::<usize>().is_ok()));
    let ys = idx(&|h| h == "y" || (h.starts_with('y') && h[1..].parse::<usize>().is_ok()));
    let refs = idx(&|h| h.starts_with("y_ref"));
    let q_col = header
        .iter()
        .position(|h| h == "q")
        .ok_or_else(|| Error::Config(format!("{}: missing q column", path.display())))?;

    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        let get = |cols: &[usize]| -> Result<Vec<f64>> {
            cols.iter().map(|&i| parse(path, &rec[i], &header[i])).collect()
        };
        out.push(SignalSample {
            t: parse(path, &rec[0], "t")?,
            x: get(&xs)?,
            u: get(&us)?,
            y: get(&ys)?,
            y_ref: get(&refs)?,
            q: parse(path, &rec[q_col], "q")?,
        });
    }
    Ok(out)
}

/// Reads back an intervals file written by [`write_intervals`].
pub fn read_intervals(path: &Path) -> Result<Vec<IntervalRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?.clone();
    if header.iter().ne(INTERVAL_COLUMNS.iter().copied()) {
        return Err(Error::Config(format!("{}: unexpected interval header", path.display())));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        let c = |i: usize| &rec[i];
        let p = |i: usize| -> Result<f64> { parse(path, c(i), INTERVAL_COLUMNS[i]) };
        out.push(IntervalRecord {
            index: parse(path, c(0), "k")?,
            t: parse(path, c(1), "t")?,
            q: parse(path, c(2), "q")?,
            j_k: p(3)?,
            j_k_plus: p(4)?,
            j_hat_next: p(5)?,
            j_next: p(6)?,
            e: p(7)?,
            d: p(8)?,
            k: p(9)?,
            shift_ratio: p(10)?,
            prediction_ratio: p(11)?,
            alpha_d: p(12)?,
            de_dq: p(13)?,
            dk_dq: p(14)?,
            gamma: p(15)?,
            branch: Branch::parse(c(16)).ok_or_else(|| {
                Error::Config(format!("{}: unknown branch `{}`", path.display(), c(16)))
            })?,
            restarts: parse(path, c(17), "restarts")?,
            q_next: parse(path, c(18), "q_next")?,
            prediction_error: p(19)?,
        });
    }
    Ok(out)
}
