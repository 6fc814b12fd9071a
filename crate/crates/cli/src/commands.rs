use std::path::Path;

use fraclab_core::kernels::psi_radial;
use fraclab_core::liouville::{fit_slope, liouville_decay_experiment};
use fraclab_core::poisson::{extension_field, poisson_extend};
use fraclab_core::{
    adjudicate_alpha, build_exit_sampler, cauchy_estimate_record, constants_for, frac_laplacian_point, riesz_potential,
    wos_solve_with, Ball, FracParams, Point, QuadResult, QuadSpec,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::acceptance::{run_acceptance_suite, AcceptOptions};
use crate::builtins;
use crate::{CliError, Command, EstimateArgs, Finished, Output, Params, RunConfig, Spacing, EXIT_FAILED, EXIT_NUMERICAL, EXIT_OK};

fn params(p: &Params) -> Result<FracParams, CliError> {
    Ok(FracParams::new(p.n, p.s)?)
}

fn read_points(path: &Path, n: usize) -> Result<Vec<Point>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut points = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let coords = rec
            .iter()
            .map(|t| t.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| CliError::Usage(format!("{}: row {} is not numeric", path.display(), i + 1)))?;
        if coords.len() != n {
            return Err(CliError::Usage(format!("{}: row {} has {} columns, expected {n}", path.display(), i + 1, coords.len())));
        }
        points.push(Point::new(&coords)?);
    }
    Ok(points)
}

fn csv_text(header: &[String], rows: &[Vec<f64>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string())).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

fn coordinate_header(n: usize, tail: &[&str]) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).chain(tail.iter().map(|t| t.to_string())).collect()
}

/// CSV of `point..., value, error_estimate` from per-point quadratures.
fn pointwise(cfg: &RunConfig, points: &[Point], results: Vec<QuadResult>) -> Finished {
    let n = points.first().map_or(0, |p| p.dim());
    let rows: Vec<Vec<f64>> = points
        .iter()
        .zip(&results)
        .map(|(p, r)| p.coords().iter().copied().chain([r.value, r.error_estimate]).collect())
        .collect();
    let unconverged = results.iter().filter(|r| !r.converged).count();
    Finished {
        output: Output::Csv {
            text: csv_text(&coordinate_header(n, &["value", "error_estimate"]), &rows),
            sidecar: json!({ "config": cfg, "points": points.len(), "unconverged": unconverged }),
        },
        exit: if unconverged == 0 { EXIT_OK } else { EXIT_NUMERICAL },
    }
}

fn estimate_table(cfg: &RunConfig, a: &EstimateArgs, decay: bool, spec: &QuadSpec) -> Result<Finished, CliError> {
    let p = params(&a.params)?;
    let n = p.n();
    let gamma = builtins::parse_multi_index(&a.gamma, n)?;
    let radii = builtins::parse_list(&a.radii)?;
    let g = builtins::exterior(&a.data, n)?;
    let header: Vec<String> = ["R", "lhs", "tail", "rhs_factor", "ratio"].iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    let mut converged = true;
    let summary = if decay {
        let rep = liouville_decay_experiment(p, &g, &gamma, &radii, spec)?;
        converged = rep.converged;
        let bound = g.bound_hint().unwrap_or(f64::NAN);
        let s = p.s();
        for (i, &r) in rep.radii.iter().enumerate() {
            // tail of |g| |y|^{-n-2s} beyond R/4 for |g| <= bound
            let tail = bound * fraclab_core::constants::sphere_area(n) * (r / 4.0).powf(-2.0 * s) / (2.0 * s);
            let rhs = rep.bound_curve[i];
            rows.push(vec![r, rep.derivatives[i], tail, rhs, rep.derivatives[i] / rhs]);
        }
        json!({
            "fitted_slope": rep.fitted_slope, "drop_factor": rep.drop_factor,
            "monotone": rep.monotone, "converged": rep.converged
        })
    } else {
        for &r in &radii {
            let u = extension_field(p, Ball::centered(n, r)?, &g, *spec);
            let rec = cauchy_estimate_record(p, &u, &gamma, r, spec)?;
            converged &= rec.converged;
            rows.push(vec![r, rec.lhs, rec.tail, rec.rhs_factor, rec.ratio.unwrap_or(f64::NAN)]);
        }
        let ln_r: Vec<f64> = rows.iter().map(|r| r[0].ln()).collect();
        let ln_l: Vec<f64> = rows.iter().map(|r| r[1].max(f64::MIN_POSITIVE).ln()).collect();
        let ratios: Vec<f64> = rows.iter().map(|r| r[4]).filter(|v| v.is_finite()).collect();
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        json!({
            "fitted_slope": if rows.len() >= 2 { Some(fit_slope(&ln_r, &ln_l)) } else { None },
            "ratio_max_over_min": if ratios.is_empty() { None } else { Some(hi / lo) },
            "converged": converged
        })
    };
    Ok(Finished {
        output: Output::Csv { text: csv_text(&header, &rows), sidecar: json!({ "config": cfg, "summary": summary }) },
        exit: if converged { EXIT_OK } else { EXIT_NUMERICAL },
    })
}

pub(crate) fn execute(cfg: &RunConfig) -> Result<Finished, CliError> {
    let spec = &cfg.quad;
    spec.validate()?;
    match &cfg.command {
        Command::Constants(a) => {
            let t = constants_for(params(a)?);
            Ok(Finished {
                output: Output::Json(json!({ "config": cfg, "c_ns": t.c_ns, "beta_ns": t.beta_ns, "alpha_ns": t.alpha_ns })),
                exit: EXIT_OK,
            })
        }
        Command::PsiTable(a) => {
            let p = params(&a.params)?;
            if !(a.r_min >= 0.0 && a.r_max > a.r_min && a.points >= 2) {
                return Err(CliError::Usage("need 0 <= r-min < r-max and at least two points".into()));
            }
            if a.spacing == Spacing::Log && a.r_min == 0.0 {
                return Err(CliError::Usage("log spacing needs r-min > 0".into()));
            }
            let decay = p.n() as f64 + 2.0 * p.s();
            let rows: Vec<Vec<f64>> = (0..a.points)
                .map(|i| {
                    let t = i as f64 / (a.points - 1) as f64;
                    let r = match a.spacing {
                        Spacing::Linear => a.r_min + t * (a.r_max - a.r_min),
                        Spacing::Log => a.r_min * (a.r_max / a.r_min).powf(t),
                    };
                    let v = psi_radial(p, r);
                    vec![r, v, v * r.powf(decay)]
                })
                .collect();
            let header = ["radius", "psi", "psi_times_decay_power"].map(String::from);
            Ok(Finished {
                output: Output::Csv { text: csv_text(&header, &rows), sidecar: json!({ "config": cfg }) },
                exit: EXIT_OK,
            })
        }
        Command::FraclapEval(a) => {
            let p = params(&a.params)?;
            let u = builtins::field(&a.field, p)?;
            let points = read_points(&a.points, p.n())?;
            let results = points.par_iter().map(|x| frac_laplacian_point(p, &u, x, spec)).collect::<Result<Vec<_>, _>>()?;
            Ok(pointwise(cfg, &points, results))
        }
        Command::PoissonSolve(a) => {
            let p = params(&a.params)?;
            let ball = Ball::centered(p.n(), a.radius)?;
            let g = builtins::exterior(&a.data, p.n())?;
            let points = read_points(&a.points, p.n())?;
            let results = points.par_iter().map(|x| poisson_extend(p, &ball, &g, x, spec)).collect::<Result<Vec<_>, _>>()?;
            Ok(pointwise(cfg, &points, results))
        }
        Command::Riesz(a) => {
            let p = params(&a.params)?;
            let f = builtins::density(&a.density, p.n())?;
            let points = read_points(&a.points, p.n())?;
            let (normalization, source, verdict) = if a.adjudicate {
                let v = adjudicate_alpha(p, spec)?;
                let c = v.adopted.ok_or_else(|| CliError::Numerical(format!("adjudication was inconclusive: {v:?}")))?;
                (c, "adjudicated", Some(v))
            } else {
                (a.normalization.unwrap_or(1.0), if a.normalization.is_some() { "given" } else { "unit" }, None)
            };
            let results =
                points.par_iter().map(|x| riesz_potential(p, &f, x, normalization, spec)).collect::<Result<Vec<_>, _>>()?;
            let converged = results.iter().all(|r| r.converged);
            let rows: Vec<Value> = points
                .iter()
                .zip(&results)
                .map(|(x, r)| json!({ "x": x.coords(), "value": r.value, "error_estimate": r.error_estimate, "converged": r.converged }))
                .collect();
            Ok(Finished {
                output: Output::Json(json!({
                    "config": cfg, "normalization": normalization, "normalization_source": source,
                    "points": rows, "adjudication": verdict
                })),
                exit: if converged { EXIT_OK } else { EXIT_NUMERICAL },
            })
        }
        Command::Cauchy(a) => estimate_table(cfg, a, false, spec),
        Command::LiouvilleDecay(a) => estimate_table(cfg, a, true, spec),
        Command::Wos(a) => {
            let p = params(&a.params)?;
            let omega = builtins::parse_domain(&a.domain)?;
            if omega.dim() != p.n() {
                return Err(CliError::Usage(format!("domain has dimension {}, expected {}", omega.dim(), p.n())));
            }
            let g = builtins::exterior(&a.data, p.n())?;
            let x0 = builtins::parse_point(&a.x0, p.n())?;
            let sampler = build_exit_sampler(p, a.table_size, spec)?;
            let r = wos_solve_with(&sampler, &omega, &g, &x0, a.samples, a.max_steps, a.seed)?;
            Ok(Finished {
                output: Output::Json(json!({
                    "config": cfg, "estimate": r.estimate, "std_error": r.std_error, "samples": r.samples,
                    "mean_steps": r.mean_steps, "max_steps_hit": r.max_steps_hit, "flagged": r.flagged, "seed": r.seed
                })),
                exit: if r.flagged { EXIT_NUMERICAL } else { EXIT_OK },
            })
        }
        Command::Accept(a) => {
            let opts = AcceptOptions { tier: a.tier, beta_scale: a.corrupt_beta };
            let report = run_acceptance_suite(&opts, |c| eprintln!("{}", c.line()));
            Ok(Finished {
                exit: if report.passed { EXIT_OK } else { EXIT_FAILED },
                output: Output::Json(json!({ "config": cfg, "report": report })),
            })
        }
    }
}
