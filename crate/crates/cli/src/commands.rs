//! The five subcommands. Each writes its files into the output directory and
//! prints a short `key: value` summary.

use flocstab::criteria::{characteristic_trace, nontrivial_verdict, zero_report};
use flocstab::linearization::{assemble_matrix, build_coefficients, spectral_abscissa};
use flocstab::model::RateTables;
use flocstab::simulator::{default_shape, perturbation_experiment, run, SimOptions};
use flocstab::steady_state::{check_existence, solve_fixed_point, solve_multi_start, SteadyStateResult};
use flocstab::sweep::{run_sweep, run_zero_sweep, SweepConfig};
use flocstab::Samples;
use serde_json::json;

use crate::config::{Initial, ModelKind, Problem, RunConfig};
use crate::output::{fmt12, read_pstar_csv, write_steady_csv, OutDir};
use crate::svg::render_sweep;
use crate::CliError;

fn line(key: &str, value: impl std::fmt::Display) {
    println!("{key}: {value}");
}

fn num(key: &str, x: f64) {
    line(key, fmt12(x));
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, fmt12)
}

fn model_json(p: &Problem) -> serde_json::Value {
    match p.kind {
        ModelKind::Example1 { b } => json!({"preset": "example1", "b": b}),
        ModelKind::Example2(e) => json!({"preset": "example2", "a": e.a, "b": e.b, "c": e.c, "d": e.d}),
        ModelKind::Custom => json!({"custom": true}),
    }
}

fn write_spectrum(out: &mut OutDir, t: &RateTables, p: &Samples) -> Result<(), CliError> {
    let spec = spectral_abscissa(&assemble_matrix(&build_coefficients(t, p)?, t))?;
    out.csv("spectrum.csv", &["re", "im"], spec.eigenvalues.iter().map(|z| vec![fmt12(z.re), fmt12(z.im)]))
}

pub fn check_zero(p: &Problem, cfg: &RunConfig, out: &mut OutDir) -> Result<(), CliError> {
    let report = zero_report(&p.tables, true)?;
    line("verdict", report.verdict);
    num("instability_integral", report.instability_integral);
    num("stability_margin", report.stability_margin);
    if let Some(s) = report.spectral_abscissa {
        num("spectral_abscissa", s);
    }
    out.json(
        "check_zero.json",
        &json!({"model": model_json(p), "grid": p.grid.n_cells(), "report": report}),
    )?;
    if cfg.spectrum_csv {
        write_spectrum(out, &p.tables, &Samples::zeros(p.grid))?;
    }
    Ok(())
}

/// Index of the run to report: the first nontrivial distinct fixed point,
/// else the first converged run, else the first run.
fn select(runs: &[SteadyStateResult], distinct: &[usize]) -> usize {
    distinct
        .iter()
        .copied()
        .find(|&k| !runs[k].trivial)
        .or_else(|| runs.iter().position(|r| r.converged))
        .unwrap_or(0)
}

pub fn steady(p: &Problem, cfg: &RunConfig, out: &mut OutDir) -> Result<(), CliError> {
    let existence = check_existence(&p.tables);
    let multi = solve_multi_start(&p.tables, &cfg.solver, &cfg.starts)?;
    let k = select(&multi.runs, &multi.distinct);
    let best = &multi.runs[k];
    let s = best.summary();
    line("converged", s.converged);
    line("trivial", s.trivial);
    num("phi_residual", s.phi_residual);
    num("f_residual", s.f_residual);
    line("iterations", s.iterations);
    num("sup_f_star", s.sup_f_star);
    line("distinct_fixed_points", multi.distinct.len());
    write_steady_csv(out, "steady_state.csv", &best.f_star, &best.p_star)?;
    let runs: Vec<_> = multi
        .runs
        .iter()
        .zip(&cfg.starts)
        .map(|(r, s)| json!({"f0_scale": s, "summary": r.summary()}))
        .collect();
    out.json(
        "steady_state.json",
        &json!({
            "model": model_json(p),
            "grid": p.grid.n_cells(),
            "existence": existence,
            "selected": k,
            "distinct": multi.distinct,
            "runs": runs,
        }),
    )?;
    if !s.converged {
        return Err(CliError::NotConverged("no start converged".into()));
    }
    if s.trivial {
        return Err(CliError::NotConverged("only the zero steady state was found".into()));
    }
    Ok(())
}

/// The steady state from `pstar_csv`, or a single solve from the first start.
fn steady_point(p: &Problem, cfg: &RunConfig) -> Result<(Samples, String), CliError> {
    if let Some(path) = &cfg.pstar_csv {
        return Ok((read_pstar_csv(path, p.grid)?, path.display().to_string()));
    }
    let opts = flocstab::SolverOptions { f0_scale: cfg.starts[0], ..cfg.solver };
    let r = solve_fixed_point(&p.tables, &opts)?;
    if !r.converged {
        return Err(CliError::NotConverged(format!(
            "steady-state solve did not converge (phi residual {})",
            fmt12(r.phi_residual)
        )));
    }
    Ok((r.p_star, "solver".into()))
}

pub fn check_steady(p: &Problem, cfg: &RunConfig, out: &mut OutDir) -> Result<(), CliError> {
    let (p_star, source) = steady_point(p, cfg)?;
    let t = p.bound_tables(&p_star)?;
    let report = nontrivial_verdict(&t, &p_star)?;
    line("verdict", report.verdict);
    num("instability_integral", report.instability_integral);
    num("k_0", report.k_0);
    num("a12_0", report.a12_0);
    num("a21_0", report.a21_0);
    num("c1", report.c1);
    line("positivity_ok", report.positivity_ok);
    num("spectral_abscissa", report.spectral_abscissa);
    if let Some(l) = report.negative_root {
        num("negative_root", l);
    }
    let fit = match cfg.perturbation {
        Some(spec) => {
            let opts = SimOptions { t_end: spec.t_end, ..cfg.simulation.options() };
            let fit = perturbation_experiment(&p_star, &t, spec.epsilon, None, &opts)?;
            num("perturbation_rate", fit.rate);
            Some(fit)
        }
        None => None,
    };
    out.json(
        "check_steady.json",
        &json!({
            "model": model_json(p),
            "grid": p.grid.n_cells(),
            "p_star_source": source,
            "sup_p_star": p_star.sup_norm(),
            "report": report,
            "perturbation": fit,
        }),
    )?;
    if let Some(lambdas) = &cfg.k_trace {
        let coeffs = build_coefficients(&t, &p_star)?;
        let trace = characteristic_trace(&t, &coeffs, report.c1, lambdas)?;
        out.csv(
            "k_trace.csv",
            &["lambda", "a11", "a12", "a21", "a22", "k"],
            trace.iter().map(|e| [e.lambda, e.a11, e.a12, e.a21, e.a22, e.k].map(fmt12)),
        )?;
    }
    if cfg.spectrum_csv {
        write_spectrum(out, &t, &p_star)?;
    }
    Ok(())
}

pub fn simulate(p: &Problem, cfg: &RunConfig, out: &mut OutDir) -> Result<(), CliError> {
    let spec = cfg.simulation;
    let needs_steady = spec.initial == Initial::Steady || matches!(p.kind, ModelKind::Example2(_));
    let (t, p_star) = if needs_steady {
        let (ps, _) = steady_point(p, cfg)?;
        (p.bound_tables(&ps)?, Some(ps))
    } else {
        (p.tables.clone(), None)
    };
    let shape = default_shape(&p.grid);
    let bump = |base: &[f64]| -> Vec<f64> {
        base.iter().zip(shape.values()).map(|(b, s)| b + spec.amplitude * s).collect()
    };
    let p0 = match (spec.initial, &p_star) {
        (Initial::Zero, _) => Samples::zeros(p.grid),
        (Initial::Steady, Some(ps)) => Samples::new(p.grid, bump(ps.values()))?,
        _ => Samples::new(p.grid, bump(&vec![0.0; p.grid.n_nodes()]))?,
    };
    let traj = run(&p0, &t, &spec.options())?;
    let last = traj.diagnostics.last().expect("initial state is recorded");
    line("steps", traj.steps);
    num("dt", traj.dt);
    line("blow_up", traj.blow_up);
    num("final_time", last.t);
    num("final_number", last.number);
    num("final_mass", last.mass);
    num("worst_negativity", traj.worst_negativity);
    let nodes = p.grid.nodes();
    out.csv(
        "trajectory.csv",
        &["t", "node", "x", "p"],
        traj.times.iter().zip(&traj.states).flat_map(|(&time, s)| {
            let nodes = &nodes;
            s.values()
                .iter()
                .enumerate()
                .map(move |(i, &v)| vec![fmt12(time), i.to_string(), fmt12(nodes[i]), fmt12(v)])
                .collect::<Vec<_>>()
        }),
    )?;
    out.csv(
        "diagnostics.csv",
        &["t", "number", "mass", "influx", "outflux", "number_balance_residual", "mass_balance_residual"],
        traj.diagnostics.iter().map(|d| {
            [d.t, d.number, d.mass, d.influx, d.outflux, d.number_balance_residual, d.mass_balance_residual]
                .map(fmt12)
        }),
    )?;
    out.json(
        "simulate.json",
        &json!({
            "model": model_json(p),
            "grid": p.grid.n_cells(),
            "options": spec,
            "dt": traj.dt,
            "steps": traj.steps,
            "records": traj.times.len(),
            "blow_up": traj.blow_up,
            "worst_negativity": traj.worst_negativity,
            "final": last,
        }),
    )
}

pub fn sweep(p: &Problem, cfg: &RunConfig, out: &mut OutDir, jobs: usize) -> Result<(), CliError> {
    let n = p.grid.n_cells();
    match p.kind {
        ModelKind::Example1 { .. } => {
            let recs = run_zero_sweep(&cfg.sweep.example1_b_values, n, jobs)?;
            let unstable = recs.iter().filter(|r| r.report.verdict == flocstab::Verdict::Unstable).count();
            let stable = recs.iter().filter(|r| r.report.verdict == flocstab::Verdict::Stable).count();
            line("points", recs.len());
            line("unstable", unstable);
            line("stable", stable);
            out.csv(
                "sweep_example1.csv",
                &[
                    "b",
                    "instability_integral",
                    "instability_triggered",
                    "stability_margin",
                    "stability_triggered",
                    "verdict",
                    "spectral_abscissa",
                ],
                recs.iter().map(|r| {
                    let z = &r.report;
                    vec![
                        fmt12(r.b),
                        fmt12(z.instability_integral),
                        z.instability_triggered.to_string(),
                        fmt12(z.stability_margin),
                        z.stability_triggered.to_string(),
                        z.verdict.to_string(),
                        opt(z.spectral_abscissa),
                    ]
                }),
            )?;
            out.json("sweep_example1.json", &json!({"grid": n, "points": recs.len(), "unstable": unstable, "stable": stable}))
        }
        ModelKind::Example2(_) => {
            let sc = SweepConfig {
                a_values: cfg.sweep.a_values.clone(),
                b_values: cfg.sweep.b_values.clone(),
                c_values: cfg.sweep.c_values.clone(),
                d: cfg.sweep.d,
                n_cells: n,
                solver: cfg.solver,
                jobs,
            };
            let res = run_sweep(&sc)?;
            line("points", res.records.len());
            for s in &res.summaries {
                println!("a: {} feasible: {} area: {}", fmt12(s.a), s.feasible_count, fmt12(s.area));
            }
            out.csv(
                "sweep.csv",
                &[
                    "index",
                    "a",
                    "b",
                    "c",
                    "c1_holds",
                    "c1_margin",
                    "c2_holds",
                    "c2_sup",
                    "converged",
                    "trivial",
                    "sup_p_star",
                    "verdict",
                    "instability_integral",
                    "k_0",
                    "a12_0",
                    "a21_0",
                    "spectral_abscissa",
                    "negative_root",
                    "feasible",
                    "error",
                ],
                res.records.iter().map(|r| {
                    vec![
                        r.index.to_string(),
                        fmt12(r.a),
                        fmt12(r.b),
                        fmt12(r.c),
                        r.c1_holds.to_string(),
                        fmt12(r.c1_margin),
                        r.c2_holds.to_string(),
                        fmt12(r.c2_sup),
                        r.converged.to_string(),
                        r.trivial.to_string(),
                        fmt12(r.sup_p_star),
                        r.verdict.map_or_else(String::new, |v| v.to_string()),
                        opt(r.instability_integral),
                        opt(r.k_0),
                        opt(r.a12_0),
                        opt(r.a21_0),
                        opt(r.spectral_abscissa),
                        opt(r.negative_root),
                        r.feasible.to_string(),
                        r.error.clone().unwrap_or_default(),
                    ]
                }),
            )?;
            out.json(
                "sweep_summary.json",
                &json!({
                    "grid": n,
                    "d": sc.d,
                    "points": res.records.len(),
                    "cell_area": res.cell_area,
                    "summaries": res.summaries,
                }),
            )?;
            out.text("sweep.svg", &render_sweep(&res, &sc.a_values, &sc.b_values, &sc.c_values))
        }
        ModelKind::Custom => Err(CliError::Config("sweep needs the example1 or example2 preset".into())),
    }
}
