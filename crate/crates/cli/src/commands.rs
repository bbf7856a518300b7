use std::io::Write;
use std::path::Path;

use dmiwall_core::energy::EnergyModel;
use dmiwall_core::experiments::{random_tangent, run_stability, FitOutcome, StabilityConfig, StabilityReport};
use dmiwall_core::field::{exp_map_perturb, from_spherical};
use dmiwall_core::llg::{integrate, LlgParams, Scheme};
use dmiwall_core::modulation::{fit_gauge, initial_gauge_guess};
use dmiwall_core::spectral::{build_l_gamma, coercivity_constants, eigensolve};
use dmiwall_core::walls::{
    euler_lagrange_residual, first_order_residual, precessing_gauge, relax_to_wall, theta_ode_residual,
    wall_identities, AppliedField, Gauge, Sign, WallIdentities, WallParams,
};
use dmiwall_core::{Grid, MagnetizationField, Vec3};
use rayon::prelude::*;

use crate::config::Config;
use crate::error::CliError;
use crate::output::{OutputDir, Report};

fn grid(cfg: &Config) -> Result<Grid, CliError> {
    Ok(Grid::new(cfg.get("grid.half_length")?, cfg.get("grid.points")?)?)
}

fn sign(cfg: &Config) -> Result<Sign, CliError> {
    let v = match cfg.raw("physics.sign") {
        "+" | "plus" => 1,
        "-" | "minus" => -1,
        s => s.trim_start_matches('+').parse().map_err(|_| {
            CliError::Config(format!("`physics.sign` has invalid value `{s}`"))
        })?,
    };
    Ok(Sign::from_value(v)?)
}

fn gauge0(cfg: &Config) -> Result<Gauge, CliError> {
    Ok(Gauge::new(cfg.get("initial.gauge_y")?, cfg.get("initial.gauge_phi")?)?)
}

fn scheme(cfg: &Config) -> Result<Scheme, CliError> {
    match cfg.raw("integrator.scheme") {
        "rk4" => Ok(Scheme::Rk4),
        "midpoint" => Ok(Scheme::Midpoint),
        s => Err(CliError::Config(format!("`integrator.scheme` must be rk4 or midpoint (got `{s}`)"))),
    }
}

/// `field.file`, then `field.schedule` (`t:h, t:h, ...`), then `field.h`.
fn applied_field(cfg: &Config) -> Result<AppliedField, CliError> {
    let file = cfg.raw("field.file");
    if !file.is_empty() {
        let path = cfg.resolve(file);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        return Ok(AppliedField::parse_csv(&text)?);
    }
    let schedule = cfg.raw("field.schedule");
    if !schedule.is_empty() {
        let segs = schedule
            .split(',')
            .map(|seg| {
                let bad = || CliError::Config(format!("`field.schedule` entry `{}` is not t:h", seg.trim()));
                let (t, h) = seg.split_once(':').ok_or_else(bad)?;
                Ok((t.trim().parse().map_err(|_| bad())?, h.trim().parse().map_err(|_| bad())?))
            })
            .collect::<Result<Vec<(f64, f64)>, CliError>>()?;
        return Ok(AppliedField::new(segs)?);
    }
    Ok(AppliedField::constant(cfg.get("field.h")?))
}

fn wall_params(cfg: &Config) -> Result<WallParams, CliError> {
    Ok(WallParams::new(cfg.get("physics.gamma")?, sign(cfg)?, gauge0(cfg)?)?)
}

/// Starting field named by `initial.state`, perturbed when requested.
fn initial_field(cfg: &Config, grid: &Grid) -> Result<MagnetizationField, CliError> {
    let g = gauge0(cfg)?;
    let s = sign(cfg)?;
    let base = match cfg.raw("initial.state") {
        "wall" => wall_params(cfg)?.profile(grid),
        "tanh" => {
            let theta: Vec<f64> = grid.points().map(|x| 2.0 * (g.y - x).exp().atan()).collect();
            let phi = vec![g.phi + s.phase(); grid.len()];
            from_spherical(grid, &theta, &phi)?
        }
        "constant" => MagnetizationField::constant(*grid, Vec3::new(1.0, 0.0, 0.0))?,
        other => {
            return Err(CliError::Config(format!(
                "`initial.state` must be wall, tanh or constant (got `{other}`)"
            )))
        }
    };
    let amplitude: f64 = cfg.get("perturbation.amplitude")?;
    if amplitude > 0.0 {
        if cfg.raw("initial.state") != "wall" {
            return Err(CliError::Config("perturbation requires `initial.state = wall`".into()));
        }
        let v = random_tangent(&wall_params(cfg)?, grid, cfg.get("perturbation.seed")?, amplitude)?;
        return Ok(exp_map_perturb(&base, &v)?);
    }
    Ok(base)
}

fn llg_params(cfg: &Config, grid: &Grid) -> Result<LlgParams, CliError> {
    let mut p = LlgParams::new(
        cfg.get("physics.gamma")?,
        cfg.get("physics.alpha")?,
        applied_field(cfg)?,
        cfg.get("integrator.t_end")?,
        grid,
    );
    if let Some(dt) = cfg.optional("integrator.dt")? {
        p.dt = dt;
    }
    p.record_every = cfg.get("integrator.record_every")?;
    p.snapshot_every = cfg.get("integrator.snapshot_every")?;
    p.scheme = scheme(cfg)?;
    p.allow_large_dt = cfg.get("integrator.allow_large_dt")?;
    Ok(p)
}

fn stability_config(cfg: &Config) -> Result<StabilityConfig, CliError> {
    Ok(StabilityConfig {
        grid: grid(cfg)?,
        gamma: cfg.get("physics.gamma")?,
        alpha: cfg.get("physics.alpha")?,
        h: applied_field(cfg)?,
        sign: sign(cfg)?,
        gauge0: gauge0(cfg)?,
        amplitude: cfg.get("perturbation.amplitude")?,
        seed: cfg.get("perturbation.seed")?,
        t_end: cfg.get("integrator.t_end")?,
        dt: cfg.optional("integrator.dt")?,
        record_every: cfg.get("integrator.record_every")?,
        snapshot_every: cfg.get("integrator.snapshot_every")?,
        scheme: scheme(cfg)?,
    })
}

fn tol(v: f64) -> String {
    format!("{v:e}")
}

pub fn wall(cfg: &Config, out: &mut OutputDir) -> Result<(), CliError> {
    let g = grid(cfg)?;
    let p = wall_params(cfg)?;
    let gamma = p.gamma();
    let m = p.profile(&g);
    let model = EnergyModel::new(gamma)?;
    let e = model.energy(&m);
    out.write("wall.csv", |w| m.write_csv(w))?;
    out.write("energy_density.csv", |w| e.write_csv(w, &g))?;

    let dx2 = g.dx() * g.dx();
    let got = wall_identities(gamma, &g)?;
    let want = WallIdentities::expected(gamma);
    let theta = theta_ode_residual(gamma, &g)?;
    let mut r = Report::default();
    r.num("i1", got.i1, "1e-6");
    r.num("i1_expected", want.i1, "");
    r.num("i2", got.i2, "1e-6");
    r.num("i2_expected", want.i2, "");
    r.num("i3", got.i3, "1e-6");
    r.num("i3_expected", want.i3, "");
    r.num("energy", e.total, &tol(10.0 * dx2));
    r.num("energy_expected", 2.0 * p.k(), "");
    r.num("theta_ode_residual_analytic", theta.analytic, "1e-14");
    r.num("theta_ode_residual_fd", theta.fd, &tol(5.0 * dx2));
    r.num("first_order_residual", first_order_residual(&m, gamma)?, &tol(5.0 * dx2));
    r.num("euler_lagrange_residual", euler_lagrange_residual(&m, &model), &tol(5.0 * dx2));
    r.save(out, "")
}

pub fn simulate(cfg: &Config, out: &mut OutputDir) -> Result<(), CliError> {
    let g = grid(cfg)?;
    let params = llg_params(cfg, &g)?;
    params.validate(&g)?;
    let m0 = initial_field(cfg, &g)?;
    let rec = integrate(&m0, &params)?;
    out.write("trajectory.csv", |w| rec.write_csv(w))?;
    if cfg.get("integrator.write_snapshots")? {
        for (i, f) in rec.fields.iter().enumerate() {
            out.write(&format!("field_{i:05}.csv"), |w| f.write_csv(w))?;
        }
        out.write("snapshots.csv", |w| {
            writeln!(w, "index,t")?;
            for (i, t) in rec.snapshot_times.iter().enumerate() {
                writeln!(w, "{i},{t:.16e}")?;
            }
            Ok(())
        })?;
    }
    let mut r = Report::default();
    r.num("max_dissipation_residual", rec.max_dissipation_residual(), "1e-2");
    let slack = 1e-10 * (1.0 + rec.energies[0].abs());
    r.text("energy_monotone", rec.energy_monotone(slack));
    r.num("energy_monotone_slack", slack, "");
    r.num("energy_initial", rec.energies[0], "");
    r.num("energy_final", *rec.energies.last().expect("non-empty record"), "");
    let amplitude: f64 = cfg.get("perturbation.amplitude")?;
    if cfg.raw("initial.state") == "wall" && amplitude == 0.0 {
        let p0 = wall_params(cfg)?;
        let g0 = p0.gauge();
        let mut worst: f64 = 0.0;
        for (t, f) in rec.snapshot_times.iter().zip(&rec.fields) {
            let gs = precessing_gauge(&params.h, params.alpha, params.gamma, *t)?;
            let target = p0.clone().with_gauge(Gauge::new(g0.y + gs.y, g0.phi + gs.phi)?).profile(&g);
            worst = worst.max(f.h1_distance(&target)?);
        }
        r.num("max_h1_to_precessing_wall", worst, "1e-3");
    }
    r.save(out, "")
}

fn stability_report(rep: &StabilityReport) -> Report {
    let mut r = Report::default();
    match &rep.fit {
        FitOutcome::Fitted(f) => {
            r.text("fit", "fitted");
            r.num("sigma", f.sigma, "0");
            r.num("intercept", f.intercept, "");
            r.num("r_squared", f.r_squared, "0.95");
            r.num("t_min", f.t_min, "");
            r.num("t_max", f.t_max, "");
            r.text("samples", f.samples);
        }
        FitOutcome::AlreadyOnOrbit => r.text("fit", "already on orbit"),
    }
    r.num("eps0", rep.eps0, "0.3");
    r.num("eps_final", rep.eps_final, "");
    r.num("max_eps_h1", rep.track.eps_h1.iter().copied().fold(0.0, f64::max), "");
    r.num("floor", rep.floor, "");
    r.num("g_inf_y", rep.g_inf.y, "");
    r.num("g_inf_phi", rep.g_inf.phi, "");
    r.num("g_inf", rep.g_inf.norm(), "");
    r.num("g_inf_ratio", rep.g_inf_ratio(), "20");
    r.num("gdot_ratio", rep.gdot_ratio, "20");
    r.num("max_dissipation_residual", rep.record.max_dissipation_residual(), "1e-2");
    r
}

fn write_stability(rep: &StabilityReport, out: &mut OutputDir, prefix: &str) -> Result<(), CliError> {
    out.write(&format!("{prefix}trajectory.csv"), |w| rep.record.write_csv(w))?;
    out.write(&format!("{prefix}track.csv"), |w| rep.track.write_csv(w))?;
    stability_report(rep).save(out, prefix)
}

pub fn stability(cfg: &Config, out: &mut OutputDir) -> Result<(), CliError> {
    let sc = stability_config(cfg)?;
    let mut p = sc.llg_params();
    p.allow_large_dt = cfg.get("integrator.allow_large_dt")?;
    p.validate(&sc.grid)?;
    let rep = run_stability(&sc)?;
    write_stability(&rep, out, "")
}

pub fn spectrum(cfg: &Config, out: &mut OutputDir) -> Result<(), CliError> {
    let g = grid(cfg)?;
    let gamma: f64 = cfg.get("physics.gamma")?;
    let k: usize = cfg.get("spectrum.k")?;
    let nvec: usize = cfg.get("spectrum.eigenvectors")?;
    let res = eigensolve(&build_l_gamma(gamma, &g)?, k)?;
    let c = coercivity_constants(gamma, &g)?;
    out.write("spectrum.csv", |w| res.write_csv(w))?;
    for j in 0..nvec.min(k) {
        out.write(&format!("eigenvector_{}.csv", j + 1), |w| res.write_eigenvector_csv(j, w))?;
    }
    let gap = 0.9 * (1.0 - gamma * gamma);
    let mut r = Report::default();
    for (j, (l, res)) in res.eigenvalues.iter().zip(&res.residuals).enumerate() {
        let t = match j {
            0 => "5e-4".to_string(),
            1 => format!(">={gap}"),
            _ => String::new(),
        };
        r.num(&format!("lambda{}", j + 1), *l, &t);
        r.num(&format!("residual{}", j + 1), *res, "1e-8");
    }
    r.num("lambda_h1", c.lambda_h1, ">0");
    r.num("lambda_h2", c.lambda_h2, ">0");
    r.num("lambda_h1_free", c.lambda_h1_free, "");
    r.num("lambda_h2_free", c.lambda_h2_free, "");
    r.save(out, "")
}

pub fn relax(cfg: &Config, out: &mut OutputDir) -> Result<(), CliError> {
    let g = grid(cfg)?;
    let gamma: f64 = cfg.get("physics.gamma")?;
    let s = sign(cfg)?;
    let m0 = initial_field(cfg, &g)?;
    let rep = relax_to_wall(&m0, gamma, cfg.get("relax.max_steps")?, cfg.get("relax.tol")?)?;
    let seed = initial_gauge_guess(&rep.field, s)?;
    let fit = fit_gauge(&rep.field, gamma, s, seed)?;
    out.write("relaxed.csv", |w| rep.field.write_csv(w))?;
    out.write("energies.csv", |w| {
        writeln!(w, "step,energy")?;
        for (i, e) in rep.energies.iter().enumerate() {
            writeln!(w, "{i},{e:.16e}")?;
        }
        Ok(())
    })?;
    let model = EnergyModel::new(gamma)?;
    let mut r = Report::default();
    r.text("steps", rep.steps);
    r.text("rejected", rep.rejected);
    r.text("converged", rep.converged);
    r.num("residual", rep.residual, cfg.raw("relax.tol"));
    r.num("euler_lagrange_residual", euler_lagrange_residual(&rep.field, &model), "");
    r.num("energy_initial", rep.energy_initial, "");
    r.num("energy_final", rep.energy_final, "");
    r.num("gauge_y", fit.gauge.y, "");
    r.num("gauge_phi", fit.gauge.phi, "");
    r.num("distance_to_orbit", fit.eps_h1, "1e-3");
    r.save(out, "")
}

struct Cell {
    gamma: f64,
    alpha: f64,
    h: f64,
    amplitude: f64,
}

fn sweep_axis(cfg: &Config, sweep_key: &str, key: &str) -> Result<Vec<f64>, CliError> {
    match cfg.list(sweep_key)? {
        Some(v) => Ok(v),
        None => Ok(vec![cfg.get(key)?]),
    }
}

fn run_cell(cfg: &Config, cell: &Cell) -> Result<StabilityReport, CliError> {
    let mut c = cfg.clone();
    c.set("physics.gamma", &cell.gamma.to_string())?;
    c.set("physics.alpha", &cell.alpha.to_string())?;
    c.set("field.h", &cell.h.to_string())?;
    c.set("field.schedule", "")?;
    c.set("field.file", "")?;
    c.set("perturbation.amplitude", &cell.amplitude.to_string())?;
    let sc = stability_config(&c)?;
    sc.llg_params().validate(&sc.grid)?;
    Ok(run_stability(&sc)?)
}

fn threads() -> Result<Option<usize>, CliError> {
    match std::env::var("DMIWALL_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .map(Some)
            .ok_or_else(|| CliError::Config(format!("DMIWALL_THREADS must be a positive integer (got `{v}`)"))),
        Err(_) => Ok(None),
    }
}

fn csv_field(s: &str) -> String {
    s.replace(['\n', '\r'], " ").replace(',', ";")
}

pub fn sweep(cfg: &Config, out: &mut OutputDir) -> Result<(), CliError> {
    let gammas = sweep_axis(cfg, "sweep.gamma", "physics.gamma")?;
    let alphas = sweep_axis(cfg, "sweep.alpha", "physics.alpha")?;
    let hs = sweep_axis(cfg, "sweep.h", "field.h")?;
    let amps = sweep_axis(cfg, "sweep.amplitude", "perturbation.amplitude")?;
    let mut cells = Vec::new();
    for &gamma in &gammas {
        for &alpha in &alphas {
            for &h in &hs {
                for &amplitude in &amps {
                    cells.push(Cell { gamma, alpha, h, amplitude });
                }
            }
        }
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads()? {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("cannot start thread pool: {e}")))?;
    let root = out.root().to_path_buf();
    let results: Vec<(Result<StabilityReport, CliError>, Vec<String>)> = pool.install(|| {
        cells
            .par_iter()
            .enumerate()
            .map(|(i, cell)| {
                let res = run_cell(cfg, cell);
                let files = match &res {
                    Ok(rep) => write_cell(&root, i, rep),
                    Err(_) => Ok(Vec::new()),
                };
                match files {
                    Ok(f) => (res, f),
                    Err(e) => (Err(e), Vec::new()),
                }
            })
            .collect()
    });
    let mut rows = Vec::with_capacity(cells.len());
    for (cell, (res, files)) in cells.iter().zip(results) {
        out.adopt(files);
        let num = |v: f64| format!("{v:.16e}");
        let row = match res {
            Ok(rep) => {
                let (sigma, r2) = match &rep.fit {
                    FitOutcome::Fitted(f) => (num(f.sigma), num(f.r_squared)),
                    FitOutcome::AlreadyOnOrbit => (String::new(), String::new()),
                };
                format!(
                    "{},{},{},{},{sigma},{r2},{},{},{},",
                    cell.gamma,
                    cell.alpha,
                    cell.h,
                    cell.amplitude,
                    num(rep.g_inf.norm()),
                    num(rep.g_inf_ratio()),
                    num(rep.record.max_dissipation_residual())
                )
            }
            Err(e) => format!(
                "{},{},{},{},,,,,,{}",
                cell.gamma,
                cell.alpha,
                cell.h,
                cell.amplitude,
                csv_field(&e.to_string())
            ),
        };
        rows.push(row);
    }
    out.write("sweep.csv", |w| {
        writeln!(w, "gamma,alpha,h,amplitude,sigma,r_squared,g_inf,g_inf_ratio,max_dissipation_residual,error")?;
        for row in &rows {
            writeln!(w, "{row}")?;
        }
        Ok(())
    })
}

fn write_cell(root: &Path, i: usize, rep: &StabilityReport) -> Result<Vec<String>, CliError> {
    let prefix = format!("cell_{i:04}/");
    let mut dir = OutputDir::create(root)?;
    write_stability(rep, &mut dir, &prefix)?;
    Ok(dir.into_files())
}
