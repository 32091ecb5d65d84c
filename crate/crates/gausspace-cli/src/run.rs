//! Scenario execution: evaluates moment trajectories on the requested
//! engines, writes the CSV table and the JSON summary, and reports the
//! cross-engine deviation.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;

use gausspace::fock::{self, FockDensity, FockSpace};
use gausspace::linalg::CMatrix;
use gausspace::schema::{matrix_to_schema, vector_to_schema, ComplexPair};
use gausspace::{
    drift_matrices, lindblad_to_qme, moment_trajectory, propagate_imaginary_time,
    propagate_imaginary_time_ode, validate_trace_preserving, Engine, FirstMoments, GaussianParams,
    LindbladSpec, MomentSample, OdeOptions, QmeError, SecondMoments,
};

use crate::config::{EngineChoice, GaussianInitial, Scenario, ScenarioConfig};
use crate::CliError;

/// One engine's moments at one sample time, weight-averaged over ensemble
/// members.
#[derive(Debug, Clone)]
struct MomentRow {
    t: f64,
    omega: Complex64,
    first: FirstMoments,
    second: SecondMoments,
}

pub struct RunOutput {
    pub csv_path: PathBuf,
    pub summary_path: PathBuf,
    pub max_deviation: Option<f64>,
    pub comparison_ok: bool,
}

pub fn run(
    config: &ScenarioConfig,
    out_override: Option<&Path>,
    engine_override: Option<EngineChoice>,
) -> Result<RunOutput, CliError> {
    let engine = engine_override.unwrap_or_else(|| config.engine());
    let times = config.time_grid.times()?;
    let initial = config.initial()?;
    if initial.modes() != config.modes {
        return Err(CliError::Config(format!(
            "initial_state: has {} modes but modes = {}",
            initial.modes(),
            config.modes
        )));
    }

    let (gauss, oracle) = match config.scenario {
        Scenario::ThermalEquilibrium => run_imaginary(config, engine, &times)?,
        _ => run_real(config, engine, &times, &initial)?,
    };

    let deviation = match (&gauss, &oracle) {
        (Some(g), Some(o)) => Some(max_deviation(g, o)),
        _ => None,
    };
    let comparison_ok = deviation.map_or(true, |d| d <= config.comparison_tolerance);

    let out_dir = out_override
        .map(Path::to_path_buf)
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out_dir).map_err(|e| CliError::Numeric(format!("output dir: {e}")))?;

    let csv_path = out_dir.join("moments.csv");
    let csv = render_csv(config.modes, gauss.as_deref(), oracle.as_deref());
    fs::write(&csv_path, csv).map_err(|e| CliError::Numeric(format!("writing CSV: {e}")))?;

    let summary_path = out_dir.join("summary.json");
    let summary = build_summary(config, engine, &initial, deviation)?;
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| CliError::Numeric(format!("summary: {e}")))?;
    fs::write(&summary_path, json + "\n")
        .map_err(|e| CliError::Numeric(format!("writing summary: {e}")))?;

    Ok(RunOutput {
        csv_path,
        summary_path,
        max_deviation: deviation,
        comparison_ok,
    })
}

type EnginePair = (Option<Vec<MomentRow>>, Option<Vec<MomentRow>>);

fn run_real(
    config: &ScenarioConfig,
    engine: EngineChoice,
    times: &[f64],
    initial: &GaussianInitial,
) -> Result<EnginePair, CliError> {
    let spec = config
        .lindblad()?
        .expect("real-time scenarios have Lindblad data");
    let q = lindblad_to_qme(&spec);
    let opts = OdeOptions::default();

    let gauss = match engine {
        EngineChoice::ClosedForm | EngineChoice::Both => Some(gauss_rows(
            &q,
            initial,
            times,
            Engine::ClosedForm,
            &opts,
        )?),
        EngineChoice::Ode => Some(gauss_rows(&q, initial, times, Engine::Ode, &opts)?),
        EngineChoice::Oracle => None,
    };
    let oracle = match engine {
        EngineChoice::Oracle | EngineChoice::Both => {
            Some(oracle_rows(config, &spec, initial, times, &opts)?)
        }
        _ => None,
    };
    Ok((gauss, oracle))
}

fn gauss_rows(
    q: &gausspace::QuadraticMe,
    initial: &GaussianInitial,
    times: &[f64],
    engine: Engine,
    opts: &OdeOptions,
) -> Result<Vec<MomentRow>, CliError> {
    let members = initial.members();
    let mut per_member: Vec<Vec<MomentSample>> = Vec::with_capacity(members.len());
    for g in &members {
        let samples = moment_trajectory(q, g, times, engine, opts).map_err(map_qme_error)?;
        per_member.push(samples);
    }
    Ok(average_rows(&per_member))
}

/// Weight-averages per-member kernel moments into ensemble moments; the
/// aggregate weight column is the weight sum.
fn average_rows(per_member: &[Vec<MomentSample>]) -> Vec<MomentRow> {
    let n_times = per_member[0].len();
    let modes = per_member[0][0].first.a.len();
    let mut rows = Vec::with_capacity(n_times);
    for ti in 0..n_times {
        let mut total = Complex64::new(0.0, 0.0);
        let mut first = FirstMoments {
            a: gausspace::CVector::zeros(modes),
            adag: gausspace::CVector::zeros(modes),
        };
        let mut second = SecondMoments {
            aa: CMatrix::zeros(modes, modes),
            normal_a_adag: CMatrix::zeros(modes, modes),
            adag_adag: CMatrix::zeros(modes, modes),
        };
        for member in per_member {
            let s = &member[ti];
            total += s.omega;
            first.a += &s.first.a * s.omega;
            first.adag += &s.first.adag * s.omega;
            second.aa += &s.second.aa * s.omega;
            second.normal_a_adag += &s.second.normal_a_adag * s.omega;
            second.adag_adag += &s.second.adag_adag * s.omega;
        }
        first.a /= total;
        first.adag /= total;
        second.aa /= total;
        second.normal_a_adag /= total;
        second.adag_adag /= total;
        rows.push(MomentRow {
            t: per_member[0][ti].t,
            omega: total,
            first,
            second,
        });
    }
    rows
}

fn oracle_rows(
    config: &ScenarioConfig,
    spec: &LindbladSpec,
    initial: &GaussianInitial,
    times: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<MomentRow>, CliError> {
    let space = FockSpace::new(config.modes, config.oracle_nmax());
    // an ensemble of kernels sums to one operator before evolving
    let mut rho_matrix = CMatrix::zeros(space.dim(), space.dim());
    for g in initial.members() {
        let kernel = fock::build_kernel(&space, g).map_err(map_fock_error)?;
        rho_matrix += kernel.matrix();
    }
    let mut rho = FockDensity::kernel(rho_matrix);

    let mut rows = Vec::with_capacity(times.len());
    let mut t_prev = 0.0;
    for &t in times {
        if t != t_prev {
            rho = fock::evolve_lindblad_monitored(
                &space,
                spec,
                &rho,
                t - t_prev,
                opts,
                config.oracle.edge_tol,
            )
            .map_err(map_fock_error)?;
            t_prev = t;
        }
        let (first, second) = fock::moments_fock(&space, &rho).map_err(map_fock_error)?;
        rows.push(MomentRow {
            t,
            omega: rho.trace(),
            first,
            second,
        });
    }
    Ok(rows)
}

fn run_imaginary(
    config: &ScenarioConfig,
    engine: EngineChoice,
    taus: &[f64],
) -> Result<EnginePair, CliError> {
    let omega = config.omega_modes()?;
    let tau0 = config.tau0;
    let opts = OdeOptions::default();

    let analytic = |taus: &[f64]| -> Result<Vec<MomentRow>, CliError> {
        taus.iter()
            .map(|&tau| {
                let g = propagate_imaginary_time(&omega, tau0, tau, None).map_err(map_qme_error)?;
                Ok(state_row(tau, &g))
            })
            .collect()
    };
    let by_ode = |taus: &[f64]| -> Result<Vec<MomentRow>, CliError> {
        taus.iter()
            .map(|&tau| {
                let g = propagate_imaginary_time_ode(&omega, tau0, tau, None, &opts)
                    .map_err(map_qme_error)?;
                Ok(state_row(tau, &g))
            })
            .collect()
    };

    let gauss = match engine {
        EngineChoice::ClosedForm | EngineChoice::Both => Some(analytic(taus)?),
        EngineChoice::Ode => Some(by_ode(taus)?),
        EngineChoice::Oracle => None,
    };
    let oracle = match engine {
        EngineChoice::Oracle | EngineChoice::Both => {
            let nmax = config.oracle_nmax();
            let rows = taus
                .iter()
                .map(|&tau| {
                    let (trace, nbars) = fock::thermal_trace_oracle(&omega, tau, nmax);
                    let modes = omega.len();
                    let mut second = SecondMoments {
                        aa: CMatrix::zeros(modes, modes),
                        normal_a_adag: CMatrix::zeros(modes, modes),
                        adag_adag: CMatrix::zeros(modes, modes),
                    };
                    for (k, nb) in nbars.iter().enumerate() {
                        second.normal_a_adag[(k, k)] = Complex64::new(*nb, 0.0);
                    }
                    MomentRow {
                        t: tau,
                        omega: Complex64::new(trace, 0.0),
                        first: FirstMoments {
                            a: gausspace::CVector::zeros(modes),
                            adag: gausspace::CVector::zeros(modes),
                        },
                        second,
                    }
                })
                .collect();
            Some(rows)
        }
        _ => None,
    };
    Ok((gauss, oracle))
}

fn state_row(t: f64, g: &GaussianParams) -> MomentRow {
    MomentRow {
        t,
        omega: g.omega(),
        first: g.first_moments(),
        second: g.second_moments(),
    }
}

fn map_qme_error(e: QmeError) -> CliError {
    match e {
        QmeError::SteadyStateUnavailable => CliError::Numeric(format!(
            "{e}; rerun with --engine ode"
        )),
        other => CliError::Numeric(other.to_string()),
    }
}

fn map_fock_error(e: fock::FockError) -> CliError {
    CliError::Numeric(format!("oracle: {e}"))
}

fn entry_max<'a, I: IntoIterator<Item = &'a Complex64>>(iter: I) -> f64 {
    iter.into_iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn max_deviation(a: &[MomentRow], b: &[MomentRow]) -> f64 {
    let mut worst: f64 = 0.0;
    for (ra, rb) in a.iter().zip(b) {
        worst = worst.max((ra.omega - rb.omega).norm());
        worst = worst.max(entry_max((&ra.first.a - &rb.first.a).iter()));
        worst = worst.max(entry_max((&ra.first.adag - &rb.first.adag).iter()));
        worst = worst.max(entry_max((&ra.second.aa - &rb.second.aa).iter()));
        worst = worst.max(entry_max(
            (&ra.second.normal_a_adag - &rb.second.normal_a_adag).iter(),
        ));
        worst = worst.max(entry_max(
            (&ra.second.adag_adag - &rb.second.adag_adag).iter(),
        ));
    }
    worst
}

/// 17 significant digits, enough to reproduce the f64 bit pattern.
fn fmt(x: f64) -> String {
    format!("{:.16e}", x)
}

fn push_complex(cols: &mut Vec<String>, z: Complex64) {
    cols.push(fmt(z.re));
    cols.push(fmt(z.im));
}

fn moment_headers(modes: usize, label: &str, out: &mut Vec<String>) {
    let mut push = |name: String| {
        out.push(format!("re_{name}_{label}"));
        out.push(format!("im_{name}_{label}"));
    };
    push("omega".to_string());
    for i in 0..modes {
        push(format!("a{i}"));
    }
    for i in 0..modes {
        push(format!("adag{i}"));
    }
    for i in 0..modes {
        for j in i..modes {
            push(format!("aa{i}{j}"));
        }
    }
    for i in 0..modes {
        for j in 0..modes {
            push(format!("nad{i}{j}"));
        }
    }
    for i in 0..modes {
        for j in i..modes {
            push(format!("adagadag{i}{j}"));
        }
    }
}

fn moment_columns(modes: usize, row: &MomentRow, out: &mut Vec<String>) {
    push_complex(out, row.omega);
    for i in 0..modes {
        push_complex(out, row.first.a[i]);
    }
    for i in 0..modes {
        push_complex(out, row.first.adag[i]);
    }
    for i in 0..modes {
        for j in i..modes {
            push_complex(out, row.second.aa[(i, j)]);
        }
    }
    for i in 0..modes {
        for j in 0..modes {
            push_complex(out, row.second.normal_a_adag[(i, j)]);
        }
    }
    for i in 0..modes {
        for j in i..modes {
            push_complex(out, row.second.adag_adag[(i, j)]);
        }
    }
}

fn render_csv(modes: usize, gauss: Option<&[MomentRow]>, oracle: Option<&[MomentRow]>) -> String {
    let mut header = vec!["t".to_string()];
    if gauss.is_some() {
        moment_headers(modes, "gauss", &mut header);
    }
    if oracle.is_some() {
        moment_headers(modes, "oracle", &mut header);
    }
    let n_rows = gauss
        .map(|g| g.len())
        .or_else(|| oracle.map(|o| o.len()))
        .unwrap_or(0);
    let mut out = header.join(",");
    out.push('\n');
    for i in 0..n_rows {
        let mut cols = Vec::with_capacity(header.len());
        let t = gauss
            .map(|g| g[i].t)
            .or_else(|| oracle.map(|o| o[i].t))
            .unwrap_or(0.0);
        cols.push(fmt(t));
        if let Some(g) = gauss {
            moment_columns(modes, &g[i], &mut cols);
        }
        if let Some(o) = oracle {
            moment_columns(modes, &o[i], &mut cols);
        }
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct Summary {
    scenario: &'static str,
    engine: &'static str,
    modes: usize,
    time_grid: SummaryGrid,
    trace_preserving: Option<SummaryTrace>,
    e_spectrum: Option<Vec<ComplexPair>>,
    steady_state: Option<SummarySteadyState>,
    initial_state_physical: Option<SummaryPhysicality>,
    comparison: Option<SummaryComparison>,
    csv: &'static str,
}

#[derive(Serialize)]
struct SummaryGrid {
    start: f64,
    end: f64,
    samples: usize,
}

#[derive(Serialize)]
struct SummaryTrace {
    linear_terms_opposite: bool,
    trace_identity: bool,
    d_anti_symmetric: bool,
    max_defect: f64,
    is_trace_preserving: bool,
}

#[derive(Serialize)]
struct SummarySteadyState {
    alpha0: Option<Vec<ComplexPair>>,
    sigma0: Option<Vec<Vec<ComplexPair>>>,
    attracting: bool,
    e_singular: bool,
    pencil_singular: bool,
}

#[derive(Serialize)]
struct SummaryPhysicality {
    is_physical: bool,
    failures: Vec<String>,
}

#[derive(Serialize)]
struct SummaryComparison {
    max_abs_deviation: f64,
    tolerance: f64,
    within_tolerance: bool,
}

fn build_summary(
    config: &ScenarioConfig,
    engine: EngineChoice,
    initial: &GaussianInitial,
    deviation: Option<f64>,
) -> Result<Summary, CliError> {
    let (trace_preserving, e_spectrum, steady_state) = match config.lindblad()? {
        Some(spec) => {
            let q = lindblad_to_qme(&spec);
            let report = validate_trace_preserving(&q);
            let drift = drift_matrices(&q).map_err(map_qme_error)?;
            (
                Some(SummaryTrace {
                    linear_terms_opposite: report.linear_terms_opposite,
                    trace_identity: report.trace_identity,
                    d_anti_symmetric: report.d_anti_symmetric,
                    max_defect: report.max_defect,
                    is_trace_preserving: report.is_trace_preserving(),
                }),
                Some(
                    drift
                        .e_spectrum
                        .iter()
                        .map(|z| ComplexPair::from(*z))
                        .collect(),
                ),
                Some(SummarySteadyState {
                    alpha0: drift.alpha0.as_ref().map(|v| vector_to_schema(v)),
                    sigma0: drift.sigma0.as_ref().map(|m| matrix_to_schema(m)),
                    attracting: drift.attracting,
                    e_singular: drift.e_singular,
                    pencil_singular: drift.pencil_singular,
                }),
            )
        }
        None => (None, None, None),
    };

    // physicality of the initial kernel(s): every member must pass for the
    // aggregate to be labelled physical
    let phys = initial.members().iter().map(|g| g.check_physical()).fold(
        SummaryPhysicality {
            is_physical: true,
            failures: Vec::new(),
        },
        |mut acc, report| {
            if !report.is_physical() {
                acc.is_physical = false;
                for f in report.failures() {
                    let f = f.to_string();
                    if !acc.failures.contains(&f) {
                        acc.failures.push(f);
                    }
                }
            }
            acc
        },
    );

    Ok(Summary {
        scenario: config.scenario.name(),
        engine: engine.name(),
        modes: config.modes,
        time_grid: SummaryGrid {
            start: config.time_grid.start,
            end: config.time_grid.end,
            samples: config.time_grid.samples,
        },
        trace_preserving,
        e_spectrum,
        steady_state,
        initial_state_physical: Some(phys),
        comparison: deviation.map(|d| SummaryComparison {
            max_abs_deviation: d,
            tolerance: config.comparison_tolerance,
            within_tolerance: d <= config.comparison_tolerance,
        }),
        csv: "moments.csv",
    })
}

/// Human-readable validation listing; `Err` only for configs that cannot
/// be built at all.
pub fn validate(config: &ScenarioConfig) -> Result<String, CliError> {
    let mut lines = Vec::new();
    lines.push(format!(
        "scenario: {} ({} mode{})",
        config.scenario.name(),
        config.modes,
        if config.modes == 1 { "" } else { "s" }
    ));

    let times = config.time_grid.times()?;
    lines.push(format!(
        "time grid: {} samples over [{}, {}]: ok",
        times.len(),
        config.time_grid.start,
        config.time_grid.end
    ));

    match config.scenario {
        Scenario::ThermalEquilibrium => {
            let omega = config.omega_modes()?;
            if omega.iter().any(|&w| w <= 0.0) {
                return Err(CliError::Config(
                    "parameters.omega_modes: frequencies must be positive".into(),
                ));
            }
            if times.iter().any(|&tau| tau < config.tau0) {
                return Err(CliError::Config(format!(
                    "time_grid: imaginary-time samples must be >= tau0 = {}",
                    config.tau0
                )));
            }
            lines.push("imaginary-time flow: ok".to_string());
        }
        _ => {
            let spec = config.lindblad()?.expect("real-time scenario");
            let q = lindblad_to_qme(&spec);
            let report = validate_trace_preserving(&q);
            lines.push(format!(
                "master equation: trace preserving: {} (max defect {:.3e})",
                if report.is_trace_preserving() {
                    "pass"
                } else {
                    "FAIL"
                },
                report.max_defect
            ));
        }
    }

    let initial = config.initial()?;
    let mut all_physical = true;
    let mut failures: Vec<String> = Vec::new();
    for g in initial.members() {
        let report = g.check_physical();
        if !report.is_physical() {
            all_physical = false;
            for f in report.failures() {
                let f = f.to_string();
                if !failures.contains(&f) {
                    failures.push(f);
                }
            }
        }
    }
    if all_physical {
        lines.push("initial state: physical".to_string());
    } else {
        lines.push(format!(
            "initial state: unphysical basis member ({}); run still permitted",
            failures.join("; ")
        ));
    }

    Ok(lines.join("\n"))
}
