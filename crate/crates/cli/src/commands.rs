use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use resqec::analysis::{classify_basins, OrderSweep};
use resqec::hilbert::DensityMatrix;
use resqec::integrator::{propagate_master, propagate_trajectories, TimeSeries};
use resqec::models::{validate_timescales, Params};

use crate::config::{self, build_model, ExperimentConfig, SchemeName};
use crate::svg::{line_plot, Series};
use crate::CliError;

/// Flags shared by every verb.
#[derive(Clone, Debug)]
pub struct Common {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub svg: bool,
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn out_dir(cfg: &ExperimentConfig, common: &Common) -> PathBuf {
    common.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    }
    let tmp = path.with_extension("partial");
    fs::write(&tmp, contents).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// `time,<obs>[,<obs>_stderr],…` with 17 significant digits.
pub fn timeseries_csv(series: &TimeSeries) -> String {
    let mut header = vec!["time".to_string()];
    for (name, _) in &series.columns {
        header.push(name.clone());
        if series.stderr.is_some() {
            header.push(format!("{name}_stderr"));
        }
    }
    let mut s = header.join(",");
    s.push('\n');
    for (i, t) in series.times.iter().enumerate() {
        let mut row = vec![num(*t)];
        for (k, (_, col)) in series.columns.iter().enumerate() {
            row.push(num(col[i]));
            if let Some(err) = &series.stderr {
                row.push(num(err[k][i]));
            }
        }
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

fn warn_timescales(params: &Params, scheme: SchemeName) {
    if matches!(scheme, SchemeName::TierB3q | SchemeName::TierC3q | SchemeName::SingleCavity3q) {
        for w in validate_timescales(params) {
            eprintln!("warning: {w}");
        }
    }
}

/// Runs one propagation with the given parameters.
pub fn run_series(cfg: &ExperimentConfig, params: &Params, seed: Option<u64>) -> Result<TimeSeries, CliError> {
    let model = build_model(cfg.scheme, params).map_err(|e| CliError::Config(format!("[params]: {e}")))?;
    let prop = cfg.propagation()?;
    let (psi, qubit_ref) = config::initial_state(cfg, &model)?;
    let obs = config::observables(&cfg.outputs, &model, &qubit_ref)?;
    match cfg.trajectory_config(seed) {
        Some(traj) => propagate_trajectories(&model, &psi, &prop, &traj, &obs).map_err(runtime),
        None => {
            let rho0: DensityMatrix = psi.to_density();
            let run = propagate_master(&model, &rho0, &prop, &obs).map_err(runtime)?;
            let c = run.conservation;
            if !c.within(1e-9, 1e-9, -1e-8) {
                eprintln!(
                    "warning: conservation bounds exceeded (trace drift {:.3e}, hermiticity {:.3e}, min eigenvalue {:.3e})",
                    c.max_trace_drift, c.max_hermiticity_error, c.final_min_eigenvalue
                );
            }
            Ok(run.series)
        }
    }
}

fn plot_series(title: &str, series: &TimeSeries) -> String {
    let lines: Vec<Series<'_>> =
        series.columns.iter().map(|(n, c)| Series { name: n.clone(), x: &series.times, y: c }).collect();
    line_plot(title, "time", "value", &lines)
}

pub fn simulate(cfg: &ExperimentConfig, common: &Common) -> Result<(), CliError> {
    cfg.validate()?;
    let params = cfg.params();
    warn_timescales(&params, cfg.scheme);
    let series = run_series(cfg, &params, common.seed)?;
    let dir = out_dir(cfg, common);
    write_file(&dir.join("timeseries.csv"), &timeseries_csv(&series))?;
    if common.svg {
        write_file(&dir.join("fidelity.svg"), &plot_series(&format!("{}", cfg.scheme.scheme()), &series))?;
    }
    println!("wrote {} samples to {}", series.times.len(), dir.join("timeseries.csv").display());
    Ok(())
}

pub fn sweep(cfg: &ExperimentConfig, common: &Common, param: Option<String>, values: Option<Vec<f64>>) -> Result<(), CliError> {
    cfg.validate()?;
    let param = param
        .or_else(|| cfg.sweep.param.clone())
        .ok_or_else(|| CliError::Config("sweep needs --param or [sweep].param".into()))?;
    let values = values
        .or_else(|| cfg.sweep.values.clone())
        .ok_or_else(|| CliError::Config("sweep needs --values or [sweep].values".into()))?;
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    let base = cfg.params();
    let runs: Vec<Params> = values
        .iter()
        .map(|&v| {
            let mut p = base.clone();
            config::set_param(&mut p, &param, v)?;
            p.validate().map_err(|e| CliError::Config(format!("{param} = {v}: {e}")))?;
            build_model(cfg.scheme, &p).map_err(|e| CliError::Config(format!("{param} = {v}: {e}")))?;
            Ok(p)
        })
        .collect::<Result<_, CliError>>()?;
    for p in &runs {
        warn_timescales(p, cfg.scheme);
    }

    let dir = out_dir(cfg, common);
    let staging = dir.join(".staging-sweep");
    let results: Vec<TimeSeries> = runs
        .par_iter()
        .enumerate()
        .map(|(k, p)| {
            let series = run_series(cfg, p, common.seed)?;
            write_file(&staging.join(format!("run{k:03}")).join("timeseries.csv"), &timeseries_csv(&series))?;
            Ok(series)
        })
        .collect::<Result<_, CliError>>()?;

    let mut out = String::from("sweep_value,");
    let first = timeseries_csv(&results[0]);
    out.push_str(first.lines().next().unwrap_or("time"));
    out.push('\n');
    for (v, series) in values.iter().zip(&results) {
        for line in timeseries_csv(series).lines().skip(1) {
            let _ = writeln!(out, "{},{line}", num(*v));
        }
    }
    write_file(&dir.join("sweep.csv"), &out)?;
    let _ = fs::remove_dir_all(&staging);
    if common.svg {
        let lines: Vec<Series<'_>> = values
            .iter()
            .zip(&results)
            .filter_map(|(v, s)| s.columns.first().map(|(n, c)| Series { name: format!("{n} {param}={v}"), x: &s.times, y: c }))
            .collect();
        write_file(&dir.join("sweep.svg"), &line_plot(&format!("sweep over {param}"), "time", "value", &lines))?;
    }
    println!("wrote {} runs to {}", results.len(), dir.join("sweep.csv").display());
    Ok(())
}

pub fn basins(cfg: &ExperimentConfig, common: &Common) -> Result<(), CliError> {
    if !matches!(cfg.scheme, SchemeName::Effective3q | SchemeName::StarEffective) {
        return Err(CliError::Config("basins needs scheme effective3q or starEffective".into()));
    }
    cfg.validate()?;
    let model = build_model(cfg.scheme, &cfg.params()).map_err(|e| CliError::Config(e.to_string()))?;
    let report = classify_basins(&model).map_err(runtime)?;
    let n = report.n_qubits();
    let k_max = cfg.basins.k_max.unwrap_or(3).min(n);
    let sweep = OrderSweep::from_report(&report, k_max);

    let mut text = String::new();
    let _ = writeln!(text, "scheme: {}", cfg.scheme.scheme());
    let _ = writeln!(text, "states: {}", report.n_states);
    let _ = writeln!(text, "absorbing classes: {}", report.classes.len());
    for (k, c) in report.classes.iter().enumerate() {
        let members: Vec<String> = c.members.iter().map(|&s| report.bitstring(s)).collect();
        let _ = writeln!(text, "  {}: {}", report.class_name(k), members.join(" "));
    }
    let _ = writeln!(text);
    text.push_str(&sweep.to_text());

    let dir = out_dir(cfg, common);
    write_file(&dir.join("basins.csv"), &report.to_csv(k_max))?;
    write_file(&dir.join("basins.txt"), &text)?;
    print!("{text}");
    Ok(())
}

pub fn gap(cfg: &ExperimentConfig, common: &Common) -> Result<(), CliError> {
    cfg.validate()?;
    let (report, min_rate) = config::run_gap(cfg)?;
    let mut text = String::new();
    let _ = writeln!(text, "scheme: {}", cfg.scheme.scheme());
    let _ = writeln!(text, "steady-state multiplicity: {}", report.zero_multiplicity);
    let _ = writeln!(text, "gap: {:.12}", report.gap);
    if min_rate.is_finite() {
        let _ = writeln!(text, "min correction rate: {:.12}", min_rate);
        let _ = writeln!(text, "gap / min correction rate: {:.12}", report.gap / min_rate);
    }
    let _ = writeln!(text, "restart cycles: {}", report.iterations);
    let _ = writeln!(text, "max relative residual: {:.3e}", report.max_residual);
    let _ = writeln!(text, "slowest nonzero eigenvalues:");
    for z in report.eigenvalues.iter().take(12) {
        let _ = writeln!(text, "  {:.12} {:+.12}i", z.re, z.im);
    }
    write_file(&out_dir(cfg, common).join("gap.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn nearest_index(times: &[f64], t: f64) -> usize {
    (0..times.len()).min_by(|&a, &b| (times[a] - t).abs().total_cmp(&(times[b] - t).abs())).unwrap_or(0)
}

pub fn compare(paths: &[PathBuf], common: &Common) -> Result<(), CliError> {
    if paths.len() < 2 {
        return Err(CliError::Config("compare needs at least two --config files".into()));
    }
    let cfgs: Vec<ExperimentConfig> = paths.iter().map(|p| ExperimentConfig::load(p)).collect::<Result<_, _>>()?;
    for c in &cfgs {
        c.validate()?;
    }
    let grids: Vec<Vec<f64>> = cfgs.iter().map(|c| c.propagation().map(|p| p.sample_times)).collect::<Result<_, _>>()?;
    if grids.windows(2).any(|w| w[0] != w[1]) {
        return Err(CliError::Config("compared configs must share identical sample_times".into()));
    }
    let names: Vec<String> = paths
        .iter()
        .enumerate()
        .map(|(k, p)| p.file_stem().map_or_else(|| format!("run{k}"), |s| s.to_string_lossy().into_owned()))
        .collect();
    let dir = out_dir(&cfgs[0], common);
    let staging = dir.join(".staging-compare");
    let results: Vec<TimeSeries> = cfgs
        .par_iter()
        .enumerate()
        .map(|(k, c)| {
            let s = run_series(c, &c.params(), common.seed)?;
            write_file(&staging.join(format!("run{k:03}")).join("timeseries.csv"), &timeseries_csv(&s))?;
            Ok(s)
        })
        .collect::<Result<_, CliError>>()?;
    let cols: Vec<&[f64]> = results
        .iter()
        .map(|s| s.columns.first().map(|(_, c)| c.as_slice()).ok_or_else(|| CliError::Config("no outputs".into())))
        .collect::<Result<_, _>>()?;
    let obs = results[0].columns[0].0.clone();
    let times = &results[0].times;

    let mut header = vec!["time".to_string()];
    header.extend(names.iter().map(|n| format!("{obs}_{n}")));
    let mut pairs = Vec::new();
    for a in 0..names.len() {
        for b in a + 1..names.len() {
            pairs.push((a, b));
            header.push(format!("diff_{}_{}", names[a], names[b]));
        }
    }
    let mut csv = header.join(",");
    csv.push('\n');
    for (i, t) in times.iter().enumerate() {
        let mut row = vec![num(*t)];
        row.extend(cols.iter().map(|c| num(c[i])));
        row.extend(pairs.iter().map(|&(a, b)| num(cols[a][i] - cols[b][i])));
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    write_file(&dir.join("compare.csv"), &csv)?;
    let _ = fs::remove_dir_all(&staging);

    let selected: Vec<usize> = match &cfgs[0].compare.times {
        Some(ts) => ts.iter().map(|&t| nearest_index(times, t)).collect(),
        None => {
            let n = times.len();
            (0..5).map(|k| k * (n - 1) / 4).collect()
        }
    };
    let mut table = String::new();
    let _ = writeln!(table, "{}", header.join("  "));
    for &i in &selected {
        let mut row = vec![format!("{:.6}", times[i])];
        row.extend(cols.iter().map(|c| format!("{:.10}", c[i])));
        row.extend(pairs.iter().map(|&(a, b)| format!("{:+.3e}", cols[a][i] - cols[b][i])));
        let _ = writeln!(table, "{}", row.join("  "));
    }
    print!("{table}");
    if common.svg {
        let lines: Vec<Series<'_>> =
            names.iter().zip(&cols).map(|(n, c)| Series { name: n.clone(), x: times, y: c }).collect();
        write_file(&dir.join("compare.svg"), &line_plot(&format!("{obs} comparison"), "time", &obs, &lines))?;
    }
    Ok(())
}
