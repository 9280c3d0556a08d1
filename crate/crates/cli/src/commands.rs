use std::path::PathBuf;

use normsol::concentration::{
    build_global_potential, find_critical_point, predict_critical, predict_noncritical, predict_tau_critical,
    CriticalPoint, PotentialModel,
};
use normsol::linearized::{
    compute_alpha, compute_alpha_with, format_sweep_tsv, sweep_alpha, sweep_file_name, sweep_grid,
};
use normsol::radial::{check_exponent, shoot_ground_state, sobolev_exponent, GroundState, ShootingPolicy};
use normsol::synchronized::{
    check_nondegeneracy, solve_sigma, CouplingMatrix, SigmaOutcome, SpectrumPolicy, SynchronizedState, Verdict,
};
use normsol::Error;
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{FigureArgs, GroundArgs, MatrixArgs, PredictArgs, SpectrumMode, SweepArgs, SyncArgs};
use crate::output::{print, to_json, write_file};
use crate::{CliError, Status};

#[derive(Serialize)]
struct GroundReport {
    u0: f64,
    u0_bracket: [f64; 2],
    gamma: f64,
    gamma_tilde: f64,
    radial_mass: f64,
    r_max: f64,
    residual: f64,
}

pub fn ground(args: &GroundArgs) -> Result<Status, CliError> {
    if !(args.tol > 0.0) || !(args.step > 0.0) {
        return Err(CliError::Usage("--tol and --step must be positive".into()));
    }
    let policy = ShootingPolicy { tol: args.tol, step: args.step, ..ShootingPolicy::default() };
    let g = shoot_ground_state(args.dim, args.p, &policy)?;
    let report = GroundReport {
        u0: g.u0,
        u0_bracket: [g.u0_bracket.0, g.u0_bracket.1],
        gamma: g.gamma,
        gamma_tilde: g.gamma_tilde,
        radial_mass: g.radial_mass,
        r_max: g.r_max,
        residual: g.ode_residual(),
    };
    if args.json {
        print(&to_json("ground", args, &report)?)?;
    } else {
        print(&format!(
            "N = {}\np = {}\nu0 = {:.12}\ngamma = {:.12}\ngamma_tilde = {:.12}\nr_max = {}\nresidual = {:.3e}\n",
            args.dim, args.p, report.u0, report.gamma, report.gamma_tilde, report.r_max, report.residual
        ))?;
    }
    Ok(Status::Success)
}

fn sweep_header(dim: usize, p_min: f64, p_max: f64, n: usize) -> String {
    format!("normsol alpha-sweep N={dim} p_min={p_min} p_max={p_max} n={n} columns=p,alpha_radial")
}

pub fn alpha_sweep(args: &SweepArgs) -> Result<Status, CliError> {
    if args.n == 0 {
        return Err(CliError::Usage("-n must be at least 1".into()));
    }
    let points = sweep_alpha(args.dim, args.p_min, args.p_max, args.n)?;
    let text = format_sweep_tsv(&[sweep_header(args.dim, args.p_min, args.p_max, args.n)], &points);
    let path = args.out.join(sweep_file_name(args.dim));
    write_file(&path, &text)?;
    let failed = points.iter().filter(|p| p.point.is_none()).count();
    eprintln!("wrote {} ({} rows, {failed} failed)", path.display(), points.len() - failed);
    Ok(if failed == 0 { Status::Success } else { Status::NumericalFailure })
}

fn parse_matrix(args: &MatrixArgs) -> Result<CouplingMatrix, CliError> {
    let (text, row_sep) = match (&args.matrix, &args.matrix_file) {
        (Some(inline), _) => (inline.clone(), ';'),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            (text, '\n')
        }
        (None, None) => return Err(CliError::Usage("a coupling matrix is required".into())),
    };
    let rows = text
        .split(row_sep)
        .map(str::trim)
        .filter(|row| !row.is_empty() && !row.starts_with('#'))
        .map(|row| {
            row.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<f64>().map_err(|_| CliError::Usage(format!("bad matrix entry '{t}'"))))
                .collect::<Result<Vec<f64>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    if rows.is_empty() || rows.iter().any(|r| r.len() != rows.len()) {
        return Err(CliError::Usage(format!("matrix must be square, got {} rows", rows.len())));
    }
    CouplingMatrix::from_rows(&rows).map_err(|e| CliError::Usage(e.to_string()))
}

pub fn sync_check(args: &SyncArgs) -> Result<Status, CliError> {
    let b = parse_matrix(&args.matrix)?;
    let policy = match args.spectrum {
        SpectrumMode::Compute => {
            SpectrumPolicy::Compute { dim: args.spectrum_dim, sector_max: args.sector_max, lambda_max: args.lambda_max }
        }
        SpectrumMode::Skip => SpectrumPolicy::Skip,
    };
    let report = check_nondegeneracy(&b, &policy)?;
    print(&to_json("sync-check", args, &report)?)?;
    Ok(match report.verdict {
        Verdict::NondegenerateSufficient | Verdict::NondegenerateSpectral => Status::Success,
        Verdict::DegenerateRisk => Status::Inadmissible,
        Verdict::NoSynchronizedState => Status::NoSynchronizedState,
    })
}

#[derive(Serialize, Default)]
struct PredictReport {
    regime: &'static str,
    mu: f64,
    mu0: Option<f64>,
    admissible: bool,
    epsilon: Option<f64>,
    lambda: Option<f64>,
    reason: Option<String>,
    /// λ ∝ (μ0/μ)^lambda_exponent away from N=2
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_exponent: Option<f64>,
    /// the exponent 3/(N-2) quoted elsewhere for the same law; reported, not used
    #[serde(skip_serializing_if = "Option::is_none")]
    quoted_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_full: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta_gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_delta_gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    critical_point: Option<CriticalPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau: Option<Vec<f64>>,
}

fn cubic_ground(dim: usize) -> Result<GroundState, CliError> {
    Ok(shoot_ground_state(dim, 3.0, &ShootingPolicy::default())?)
}

pub fn predict(args: &PredictArgs) -> Result<Status, CliError> {
    let regime = match args.dim {
        1 => "subcritical",
        2 => "critical",
        3 => "supercritical",
        n => return Err(CliError::Usage(format!("-N must be 1, 2 or 3, got {n}"))),
    };
    let mut report = PredictReport { regime, mu: args.mu, ..PredictReport::default() };
    let emit = |report: &PredictReport, status: Status| -> Result<Status, CliError> {
        print(&to_json("predict", args, report)?)?;
        Ok(status)
    };

    let matrix = MatrixArgs { matrix: args.matrix.clone(), matrix_file: args.matrix_file.clone() };
    let needs_ground = args.matrix.is_some() || args.matrix_file.is_some();
    let ground = if needs_ground { Some(cubic_ground(args.dim)?) } else { None };
    let sync: Option<SynchronizedState> = match needs_ground {
        false => None,
        true => match solve_sigma(&parse_matrix(&matrix)?)? {
            SigmaOutcome::State(s) => Some(s),
            SigmaOutcome::NoSynchronizedState { offending, .. } => {
                report.reason = Some(format!("no synchronized state: σ_i² <= 0 for i in {offending:?}"));
                return emit(&report, Status::NoSynchronizedState);
            }
        },
    };
    if let Some(s) = &sync {
        report.sigma = Some(s.sigma.clone());
    }
    let mu0 = match (args.mu0, &ground, &sync) {
        (Some(m), _, _) => m,
        (None, Some(g), Some(s)) => g.gamma * s.sigma_squared.iter().sum::<f64>(),
        _ => return Err(CliError::Usage("--mu0 or a coupling matrix is required".into())),
    };
    report.mu0 = Some(mu0);

    if args.dim != 2 {
        report.lambda_exponent = Some(2.0 / (args.dim as f64 - 2.0));
        report.quoted_exponent = Some(3.0 / (args.dim as f64 - 2.0));
        return match predict_noncritical(args.dim, args.mu, mu0) {
            Ok(p) => {
                report.admissible = true;
                report.epsilon = Some(p.epsilon);
                report.lambda = Some(p.lambda);
                emit(&report, Status::Success)
            }
            Err(Error::Precondition(reason)) => {
                report.reason = Some(reason);
                emit(&report, Status::Inadmissible)
            }
            Err(e) => Err(e.into()),
        };
    }

    let (alpha, delta_gamma) = match (&args.model, args.alpha_delta_gamma) {
        (Some(path), _) => {
            let (ground, sync) = (ground.as_ref().expect("matrix present"), sync.as_ref().expect("state present"));
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let model = PotentialModel::from_toml(&text).map_err(|e| CliError::Usage(e.to_string()))?;
            if model.k() != sync.sigma.len() {
                return Err(CliError::Usage(format!(
                    "model has {} potentials but the matrix is {}x{}",
                    model.k(),
                    sync.sigma.len(),
                    sync.sigma.len()
                )));
            }
            let gp = build_global_potential(ground, sync, model).map_err(|e| CliError::Usage(e.to_string()))?;
            let start = args.xi_start.clone().unwrap_or_else(|| vec![0.0; 2]);
            let cp = find_critical_point(&gp, &start)?;
            let delta_gamma = gp.laplacian(&cp.xi0);
            let alpha = compute_alpha_with(ground)?.alpha_full;
            report.alpha_full = Some(alpha);
            report.delta_gamma = Some(delta_gamma);
            let nondegenerate = cp.nondegenerate;
            report.tau = predict_tau_critical(&gp, &cp.xi0).ok();
            report.critical_point = Some(cp);
            if !nondegenerate {
                report.reason = Some("critical point of Γ is degenerate".into());
                return emit(&report, Status::Inadmissible);
            }
            (alpha, delta_gamma)
        }
        (None, Some(product)) => (1.0, product),
        (None, None) => return Err(CliError::Usage("N=2 needs --model or --alpha-delta-gamma".into())),
    };
    report.alpha_delta_gamma = Some(alpha * delta_gamma);
    let prediction = predict_critical(args.mu, mu0, alpha, delta_gamma).map_err(|e| match e {
        Error::Precondition(m) => CliError::Usage(m),
        other => other.into(),
    })?;
    report.admissible = prediction.admissible;
    report.epsilon = prediction.epsilon;
    report.lambda = prediction.lambda;
    report.reason = prediction.reason;
    let status = if report.admissible { Status::Success } else { Status::Inadmissible };
    emit(&report, status)
}

/// Exponent range drawn for dimension `dim`, kept 5% of `p_c - 1` below the
/// critical exponent `p_c` where the range would reach it.
pub fn figure_range(dim: usize) -> (f64, f64) {
    let hi: f64 = if dim <= 4 { 5.05 } else { 2.3 };
    let crit = sobolev_exponent(dim);
    (1.35, hi.min(crit - 0.05 * (crit - 1.0)))
}

#[derive(Serialize)]
struct FigurePanel {
    #[serde(rename = "N")]
    dim: usize,
    file: String,
    p_range: [f64; 2],
    rows: usize,
    failed_rows: usize,
    p: f64,
    alpha_radial: Option<f64>,
    alpha_full: Option<f64>,
    positive: bool,
    error: Option<String>,
}

#[derive(Serialize)]
struct FigureSummary {
    panels: Vec<FigurePanel>,
    all_positive: bool,
}

#[derive(Serialize)]
struct FigureConfig<'a> {
    out_dir: &'a PathBuf,
    n: usize,
}

pub fn reproduce_figure(args: &FigureArgs) -> Result<Status, CliError> {
    if args.n == 0 {
        return Err(CliError::Usage("-n must be at least 1".into()));
    }
    std::fs::create_dir_all(&args.out_dir).map_err(|e| CliError::Io(format!("{}: {e}", args.out_dir.display())))?;

    // the p = 1 + 4/N points are independent of the panels
    let checks: Vec<_> = (1..=8usize)
        .into_par_iter()
        .map(|dim| {
            let p = 1.0 + 4.0 / dim as f64;
            (p, check_exponent(dim, p).and_then(|_| compute_alpha(dim, p)))
        })
        .collect();

    let mut panels = Vec::with_capacity(8);
    for (dim, (p, check)) in (1..=8usize).zip(checks) {
        let (lo, hi) = figure_range(dim);
        let points = sweep_alpha(dim, lo, hi, args.n)?;
        debug_assert_eq!(points.len(), sweep_grid(lo, hi, args.n).len());
        let file = sweep_file_name(dim);
        write_file(&args.out_dir.join(&file), &format_sweep_tsv(&[sweep_header(dim, lo, hi, args.n)], &points))?;
        let failed_rows = points.iter().filter(|p| p.point.is_none()).count();
        let (alpha_radial, alpha_full, error) = match check {
            Ok(a) => (Some(a.alpha_radial), Some(a.alpha_full), None),
            Err(e) => (None, None, Some(e.to_string())),
        };
        panels.push(FigurePanel {
            dim,
            file,
            p_range: [lo, hi],
            rows: points.len() - failed_rows,
            failed_rows,
            p,
            alpha_radial,
            alpha_full,
            positive: alpha_radial.is_some_and(|a| a > 0.0),
            error,
        });
    }
    let all_positive = panels.iter().all(|p| p.positive);
    let failed = panels.iter().any(|p| p.error.is_some() || p.failed_rows > 0);
    let summary = FigureSummary { panels, all_positive };
    let config = FigureConfig { out_dir: &args.out_dir, n: args.n };
    let text = to_json("reproduce-figure", &config, &summary)?;
    write_file(&args.out_dir.join("summary.json"), &text)?;
    print(&text)?;
    Ok(if failed { Status::NumericalFailure } else { Status::Success })
}
