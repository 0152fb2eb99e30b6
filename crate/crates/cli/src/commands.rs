use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use wittenrate::evolution::{evolve, gaussian_bump, positivity_time_step, relaxation_rate, EvolveOptions};
use wittenrate::ratescan::{arrhenius_fit, beta_scan, csv_row, estimate_row, Estimator, CSV_HEADER};
use wittenrate::semiclassics::bohr_sommerfeld_action;
use wittenrate::{
    assemble_fokker_planck, assemble_schrodinger, critical_points, lowest_eigenpairs, spectral_gap, CriticalKind,
    Region, WittenContext,
};

use crate::config::{Problem, RunConfig};
use crate::CliError;

/// Output directory plus the list of files written, echoed in the manifest.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    potential: String,
    grid: GridEcho,
    config: &'a RunConfig,
    outputs: &'a [String],
}

#[derive(Serialize)]
struct GridEcho {
    lo: f64,
    hi: f64,
    n: usize,
    d: usize,
    h: f64,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn files(&self) -> &[String] {
        &self.written
    }

    fn text(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        fs::write(self.path(name), body).map_err(|e| CliError::Io(format!("cannot write {name}: {e}")))?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn table(
        &mut self,
        name: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = Vec<String>>,
    ) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(self.path(name))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn manifest(&mut self, command: &str, problem: &Problem) -> Result<(), CliError> {
        self.written.push("manifest.json".into());
        let g = &problem.grid;
        let m = Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            potential: problem.spec.describe(),
            grid: GridEcho {
                lo: g.lo(),
                hi: g.hi(),
                n: g.n(),
                d: g.dim(),
                h: g.spacing(),
            },
            config: &problem.config,
            outputs: &self.written,
        };
        let body = serde_json::to_string_pretty(&m).map_err(|e| CliError::Io(e.to_string()))?;
        fs::write(self.path("manifest.json"), body + "\n")
            .map_err(|e| CliError::Io(format!("cannot write manifest.json: {e}")))
    }
}

fn num(x: f64) -> String {
    x.to_string()
}

fn out_err(e: std::io::Error) -> CliError {
    CliError::Io(format!("stdout: {e}"))
}

/// Lowest `k` eigenpairs of `H`. Eigenvalues go to stdout and
/// `eigenvalues.csv`, eigenvectors to `eigenvectors.csv`.
pub fn cmd_spectrum(problem: &Problem, out: &mut Outputs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let beta = problem.beta()?;
    let ctx = WittenContext::new(problem.spec.clone(), beta)?;
    let res = lowest_eigenpairs(&assemble_schrodinger(&ctx, &problem.grid)?, problem.config.k)?;
    for (i, (e, r)) in res.eigenvalues.iter().zip(&res.residuals).enumerate() {
        writeln!(stdout, "E{i} = {e}  (residual {r:e})").map_err(out_err)?;
    }
    if let Ok(g) = spectral_gap(&res) {
        writeln!(stdout, "gap = {}", g.gap).map_err(out_err)?;
    }
    out.table(
        "eigenvalues.csv",
        &["index", "eigenvalue", "residual", "converged"],
        res.eigenvalues.iter().enumerate().map(|(i, e)| {
            vec![
                i.to_string(),
                num(*e),
                num(res.residuals[i]),
                res.converged[i].to_string(),
            ]
        }),
    )?;
    let grid = &problem.grid;
    let axes = ["x", "y", "z"];
    let mut header: Vec<String> = axes.iter().take(grid.dim()).map(|s| s.to_string()).collect();
    header.extend((0..res.eigenvectors.len()).map(|i| format!("psi{i}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    out.table(
        "eigenvectors.csv",
        &header_refs,
        (0..grid.len()).map(|node| {
            let mut row: Vec<String> = grid.coordinate(node).into_iter().map(num).collect();
            row.extend(res.eigenvectors.iter().map(|v| num(v[node])));
            row
        }),
    )?;
    out.manifest("spectrum", problem)?;
    if !res.all_converged() {
        return Err(CliError::Convergence(format!(
            "eigenpairs did not reach the residual tolerance {:e}",
            res.tolerance
        )));
    }
    Ok(())
}

/// Every gap estimator at one β, written as a one-row `rates.csv` in the
/// scan column layout.
pub fn cmd_rates(problem: &Problem, out: &mut Outputs, stdout: &mut dyn Write) -> Result<(), CliError> {
    problem.require_1d("rates")?;
    let beta = problem.beta()?;
    let row = estimate_row(&problem.spec, beta, problem.partition()?, &problem.grid)?;
    let e = &row.estimates;
    writeln!(stdout, "beta = {beta}, deltaU = {}", e.delta_u).map_err(out_err)?;
    for est in Estimator::ALL {
        match (est.value(e), e.e1_numeric) {
            (Some(v), Some(n)) if v > 0.0 && n > 0.0 => {
                let rel = (v.ln() - n.ln()).abs() / (beta * e.delta_u);
                writeln!(stdout, "{:<13} {v:e}  |Δln|/βΔU = {rel:.4}", est.column()).map_err(out_err)?
            }
            (Some(v), _) => writeln!(stdout, "{:<13} {v:e}", est.column()).map_err(out_err)?,
            (None, _) => writeln!(stdout, "{:<13} n/a", est.column()).map_err(out_err)?,
        }
    }
    out.text("rates.csv", &format!("{CSV_HEADER}\n{}\n", csv_row(e)))?;
    out.manifest("rates", problem)?;
    if !row.converged {
        return Err(CliError::Convergence(format!(
            "eigensolve did not converge at beta = {beta}"
        )));
    }
    Ok(())
}

/// β sweep over `betas` with Arrhenius fits of every estimator column.
pub fn cmd_scan(problem: &Problem, out: &mut Outputs, stdout: &mut dyn Write) -> Result<(), CliError> {
    problem.require_1d("scan")?;
    let betas = problem
        .config
        .betas
        .as_deref()
        .ok_or_else(|| CliError::Config("scan needs a betas list".into()))?;
    let table = beta_scan(&problem.spec, betas, problem.partition()?, problem.grid_policy())?;
    for w in &table.warnings {
        eprintln!("warning: {w}");
    }
    out.text("scan.csv", &table.to_csv())?;
    let mut fits = Vec::new();
    for est in Estimator::ALL {
        match arrhenius_fit(&table, est) {
            Ok(fit) => {
                writeln!(
                    stdout,
                    "{:<13} implied ΔU ≈ {:.4}  (slope {:.6}, r² = {:.6}, {} rows)",
                    est.column(),
                    fit.implied_delta_u,
                    fit.slope,
                    fit.r_squared,
                    fit.rows_used
                )
                .map_err(out_err)?;
                if let Some(w) = &fit.warning {
                    eprintln!("warning: {}: {w}", est.column());
                }
                fits.push(vec![
                    est.column().to_string(),
                    num(fit.slope),
                    num(fit.intercept),
                    num(fit.r_squared),
                    num(fit.implied_delta_u),
                    fit.rows_used.to_string(),
                ]);
            }
            Err(e) => writeln!(stdout, "{:<13} no fit: {e}", est.column()).map_err(out_err)?,
        }
    }
    out.table(
        "fits.csv",
        &["estimator", "slope", "intercept", "r_squared", "implied_deltaU", "rows"],
        fits,
    )?;
    out.manifest("scan", problem)?;
    Ok(())
}

/// Crank–Nicolson run of the Fokker–Planck equation. Without `dt` the step
/// is `0.01/E₁`, without `t_end` the horizon is `20/E₁`.
pub fn cmd_evolve(problem: &Problem, out: &mut Outputs, stdout: &mut dyn Write) -> Result<(), CliError> {
    problem.require_1d("evolve")?;
    let beta = problem.beta()?;
    let ctx = WittenContext::new(problem.spec.clone(), beta)?;
    let grid = &problem.grid;
    let cfg = &problem.config;
    let e1 = if cfg.dt.is_none() || cfg.t_end.is_none() {
        let res = lowest_eigenpairs(&assemble_schrodinger(&ctx, grid)?, 2)?;
        Some(spectral_gap(&res)?.gap)
    } else {
        None
    };
    let t_end = cfg.t_end.or(e1.map(|g| 20.0 / g)).unwrap_or_default();
    let dt = cfg.dt.or(e1.map(|g| 0.01 / g)).unwrap_or_default();
    let opts = EvolveOptions {
        dt,
        t_end,
        sample_every: cfg.sample_every,
        snapshot_every: cfg.snapshot_every,
    };
    let f0 = problem.initial_condition(&ctx)?;
    let op = assemble_fokker_planck(&ctx, grid)?;
    let trace = evolve(&op, &f0, &opts)?;
    out.table(
        "trace.csv",
        &["t", "mass", "distance"],
        trace
            .times
            .iter()
            .zip(&trace.mass)
            .zip(&trace.distance)
            .map(|((t, m), d)| vec![num(*t), num(*m), num(*d)]),
    )?;
    if !trace.snapshots.is_empty() {
        let index: Vec<Vec<String>> = trace
            .snapshots
            .iter()
            .enumerate()
            .map(|(i, (t, _))| vec![i.to_string(), num(*t), format!("snapshot_{i:05}.csv")])
            .collect();
        for (i, (_, f)) in trace.snapshots.iter().enumerate() {
            let xs = grid.axis();
            out.table(
                &format!("snapshot_{i:05}.csv"),
                &["x", "f"],
                xs.iter().zip(f).map(|(x, v)| vec![num(*x), num(*v)]),
            )?;
        }
        out.table("snapshots.csv", &["index", "t", "file"], index)?;
    }
    let d0 = trace.distance.first().copied().unwrap_or(0.0);
    let d1 = trace.distance.last().copied().unwrap_or(0.0);
    writeln!(stdout, "dt = {dt}, t_end = {t_end}, steps = {}", (t_end / dt).round()).map_err(out_err)?;
    writeln!(stdout, "mass drift = {:e}", trace.mass_drift()).map_err(out_err)?;
    writeln!(stdout, "distance: {d0:e} -> {d1:e}").map_err(out_err)?;
    if let Some(e1) = e1 {
        writeln!(stdout, "E1 (eigensolver) = {e1:e}").map_err(out_err)?;
    }
    let window = cfg
        .fit_window
        .map(|w| (w[0], w[1]))
        .unwrap_or((0.25 * t_end, 0.5 * t_end));
    match relaxation_rate(&trace, window) {
        Ok(fit) => writeln!(
            stdout,
            "relaxation rate on [{}, {}] = {:e}",
            window.0, window.1, fit.rate
        ),
        Err(e) => writeln!(stdout, "relaxation rate unavailable: {e}"),
    }
    .map_err(out_err)?;
    out.manifest("evolve", problem)?;
    Ok(())
}

struct Check {
    name: String,
    value: f64,
    threshold: f64,
    pass: Option<bool>,
}

fn checked(name: impl Into<String>, value: f64, threshold: f64, pass: bool) -> Check {
    Check {
        name: name.into(),
        value,
        threshold,
        pass: Some(pass),
    }
}

fn skipped(name: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        value: f64::NAN,
        threshold: f64::NAN,
        pass: None,
    }
}

fn validation_checks(problem: &Problem) -> Result<Vec<Check>, CliError> {
    let beta = problem.beta()?;
    let ctx = WittenContext::new(problem.spec.clone(), beta)?;
    let grid = &problem.grid;
    let h = assemble_schrodinger(&ctx, grid)?;
    let mut checks = Vec::new();

    let psi = ctx.ground_state(grid)?;
    let mut hpsi = vec![0.0; psi.len()];
    h.apply(&psi, &mut hpsi);
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let r = norm(&hpsi) / norm(&psi);
    checks.push(checked("ground-state residual |H psi0|/|psi0|", r, 1e-4, r <= 1e-4));

    if grid.dim() != 1 {
        for name in [
            "mass conservation",
            "FP/Schrodinger E0",
            "FP/Schrodinger E1",
            "Bohr-Sommerfeld at minima",
        ] {
            checks.push(skipped(name));
        }
        return Ok(checks);
    }

    let fp = assemble_fokker_planck(&ctx, grid)?;
    let center = critical_points(&problem.spec, Region::new(grid.lo(), grid.hi())?)?
        .iter()
        .find(|c| c.kind == CriticalKind::Minimum)
        .map(|c| c.x())
        .unwrap_or(0.5 * (grid.lo() + grid.hi()));
    let f0 = gaussian_bump(grid, center, 0.25 * problem.spec.well_scale())?;
    let dt = positivity_time_step(&fp)?;
    let trace = evolve(
        &fp,
        &f0,
        &EvolveOptions {
            dt,
            t_end: 1000.0 * dt,
            sample_every: 10,
            snapshot_every: None,
        },
    )?;
    let drift = trace.mass_drift();
    checks.push(checked(
        "mass conservation (1000 CN steps)",
        drift,
        1e-10,
        drift <= 1e-10,
    ));

    let s = lowest_eigenpairs(&h, 2)?;
    let f = lowest_eigenpairs(&fp, 2)?;
    let e1 = s.eigenvalues[1].abs().max(f64::MIN_POSITIVE);
    for i in 0..2 {
        let rel = (s.eigenvalues[i] - f.eigenvalues[i]).abs() / e1;
        checks.push(checked(
            format!("FP/Schrodinger E{i} (relative to E1)"),
            rel,
            1e-6,
            rel <= 1e-6,
        ));
    }

    let crit = critical_points(&problem.spec, Region::new(grid.lo(), grid.hi())?)?;
    for (i, c) in crit.iter().enumerate() {
        if c.kind != CriticalKind::Minimum {
            continue;
        }
        let lo = if i > 0 { crit[i - 1].x() } else { grid.lo() };
        let hi = crit.get(i + 1).map(|n| n.x()).unwrap_or(grid.hi());
        let name = format!("Bohr-Sommerfeld action at x = {:.6}", c.x());
        match bohr_sommerfeld_action(&ctx, Region::new(lo, hi)?) {
            Ok(a) => checks.push(checked(name, a, 0.475, a >= 0.475)),
            Err(wittenrate::Error::Precondition(_)) => checks.push(skipped(name)),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(checks)
}

/// Invariant suite on the configured problem: ground-state residual, mass
/// conservation, FP/Schrödinger agreement and the Bohr–Sommerfeld action at
/// each minimum. Fails with exit code 1 if any check fails.
pub fn cmd_validate(problem: &Problem, out: &mut Outputs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let checks = validation_checks(problem)?;
    let status = |c: &Check| match c.pass {
        Some(true) => "PASS",
        Some(false) => "FAIL",
        None => "SKIP",
    };
    writeln!(stdout, "{:<44} {:>14} {:>10}  status", "check", "value", "threshold").map_err(out_err)?;
    for c in &checks {
        writeln!(
            stdout,
            "{:<44} {:>14.4e} {:>10.3e}  {}",
            c.name,
            c.value,
            c.threshold,
            status(c)
        )
        .map_err(out_err)?;
    }
    out.table(
        "validate.csv",
        &["check", "value", "threshold", "status"],
        checks
            .iter()
            .map(|c| vec![c.name.clone(), num(c.value), num(c.threshold), status(c).to_string()]),
    )?;
    out.manifest("validate", problem)?;
    let failed = checks.iter().filter(|c| c.pass == Some(false)).count();
    if failed > 0 {
        return Err(CliError::ChecksFailed(failed));
    }
    Ok(())
}
