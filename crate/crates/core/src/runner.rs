//! The four CLI commands, runnable in-process.

use std::fs::File;
use std::io::{BufWriter, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Command, RunConfig, Stepping};
use crate::diagnostics::{continuation_monitor, emit_records, DiagnosticsRecord, MonitorConfig, MonitorVerdict, Recorder, SliceAnalysis};
use crate::error::{BrError, Result};
use crate::evolution::{kasner_initial_data_warped, perturb, rescale, stable_dt, time_step, EvolutionConfig, RescaleFactor, SliceState};
use crate::geometry::ConstraintNorms;
use crate::grid::{sup_norm_with, Field, GridSpec, MetricData};
use crate::kasner::{proper_time, CoordinateWarp, KasnerOracle};
use crate::lapse::{solve_lapse, LapseSolverConfig};
use crate::snapshot::write_snapshot;
use crate::tensor::{christoffels_with, cross_with, curl_with, trace_with, wedge_with, Orientation};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        CheckResult {
            name: name.to_string(),
            passed,
            detail,
        }
    }

    /// `max(value) ≤ tol`, treating NaN as failure.
    fn within(name: &str, value: f64, tol: f64) -> Self {
        Self::new(name, value <= tol, format!("value {value:.3e}, tolerance {tol:.3e}"))
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub command: Command,
    pub checks: Vec<CheckResult>,
    pub records: Vec<DiagnosticsRecord>,
    pub verdict: Option<MonitorVerdict>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Result of the `evolve` command without any I/O.
#[derive(Debug, Clone)]
pub struct EvolutionRun {
    pub initial_constraints: ConstraintNorms,
    pub records: Vec<DiagnosticsRecord>,
    pub final_state: SliceState,
    pub verdict: MonitorVerdict,
    pub steps: usize,
    pub max_cmc_drift: f64,
    pub lapse_bounds_hold: bool,
}

fn solver_config(cfg: &RunConfig) -> LapseSolverConfig {
    LapseSolverConfig {
        tol: cfg.solver_tol,
        max_iterations: cfg.solver_max_iter,
    }
}

fn evolution_config(cfg: &RunConfig) -> EvolutionConfig {
    let base = EvolutionConfig::default();
    EvolutionConfig {
        solver: solver_config(cfg),
        cfl: match cfg.stepping {
            Stepping::Cfl(c) => c,
            Stepping::Fixed(_) => base.cfl,
        },
        cmc_drift_tol: cfg.cmc_drift_tol,
        trace_correction: cfg.trace_correction,
    }
}

/// Kasner data from the configuration, warped and perturbed as requested.
pub fn initial_state(cfg: &RunConfig) -> Result<(SliceState, ConstraintNorms)> {
    let grid = cfg.grid()?;
    let warp = CoordinateWarp::new(cfg.warp, grid.period());
    let exact = kasner_initial_data_warped(cfg.kasner, cfg.t0, grid, &warp)?;
    perturb(&exact, cfg.perturb_amplitude, cfg.seed, &solver_config(cfg))
}

/// Runs the configured evolution from `t0` to `t_end`.
pub fn evolve(cfg: &RunConfig) -> Result<EvolutionRun> {
    cfg.validate()?;
    let (mut state, initial_constraints) = initial_state(cfg)?;
    let econf = evolution_config(cfg);
    let direction = (cfg.t_end - cfg.t0).signum();
    let total = (cfg.t_end - cfg.t0).abs();
    let fixed_steps = match cfg.stepping {
        Stepping::Fixed(dt) => Some(((total / dt) - 1e-9).ceil().max(1.0) as usize),
        Stepping::Cfl(_) => None,
    };

    let mut recorder = Recorder::new(cfg.lambda, cfg.solver_tol);
    let mut records = vec![recorder.observe(&state)?];
    let mut steps = 0;
    let mut max_cmc_drift: f64 = 0.0;
    let mut lapse_bounds_hold = records[0].lapse_margin_lower >= 0.0 && records[0].lapse_margin_upper >= 0.0;
    let end_slack = 1e-12 * cfg.t_end.abs();
    loop {
        let remaining = (cfg.t_end - state.t) * direction;
        if remaining <= end_slack {
            break;
        }
        let dt = match fixed_steps {
            Some(n) => {
                if steps + 1 == n {
                    remaining
                } else {
                    total / n as f64
                }
            }
            None => stable_dt(&state, econf.cfl).min(remaining),
        };
        let outcome = time_step(&state, direction * dt, &econf)?;
        steps += 1;
        max_cmc_drift = max_cmc_drift.max(outcome.cmc_drift);
        lapse_bounds_hold &= outcome.lapse_margins.holds() && outcome.stage_margins.iter().all(|m| m.holds());
        state = outcome.state;
        if fixed_steps == Some(steps) {
            state.t = cfg.t_end;
        }
        let record = recorder.observe(&state)?;
        let last = (cfg.t_end - state.t) * direction <= end_slack;
        if steps % cfg.output_cadence == 0 || last {
            records.push(record);
        }
    }
    let (lo, hi) = if cfg.t0 < cfg.t_end { (cfg.t0, cfg.t_end) } else { (cfg.t_end, cfg.t0) };
    let mut mconf = MonitorConfig::new(cfg.lambda, lo, hi)?;
    mconf.growth_factor = cfg.growth_factor;
    let verdict = continuation_monitor(&records, &mconf)?;
    Ok(EvolutionRun {
        initial_constraints,
        records,
        final_state: state,
        verdict,
        steps,
        max_cmc_drift,
        lapse_bounds_hold,
    })
}

/// Discretization errors of exact Kasner data on one grid, each in units of
/// the natural scale of the quantity.
fn kasner_errors(cfg: &RunConfig, grid: GridSpec) -> Result<[f64; 6]> {
    let warp = CoordinateWarp::new(cfg.warp, grid.period());
    let oracle = KasnerOracle::new(cfg.kasner);
    let t = cfg.t0;
    let state = kasner_initial_data_warped(cfg.kasner, t, grid, &warp)?;
    let a = SliceAnalysis::new(&state)?;
    let curvature = t * t;
    let norms = a.constraint_norms();
    let e_exact = Field::from_fn(grid, |x| oracle.electric(t, &warp, x));
    let volume = grid.coordinate_volume();
    let energy_scale = volume * curvature * curvature / oracle.volume_density(t);
    Ok([
        norms.hamiltonian / curvature,
        norms.momentum / curvature,
        sup_norm_with(&a.weyl.b, &a.metric) / curvature,
        sup_norm_with(&a.weyl.e.sub(&e_exact), &a.metric) / curvature,
        (a.br_energy() - oracle.br_energy(t, volume)).abs() / energy_scale,
        (a.br_flux() - oracle.br_energy_rate(t, volume)).abs() / (energy_scale / t.abs()),
    ])
}

const VERIFY_FLOOR: f64 = 1e-10;
const VERIFY_MIN_ORDER: f64 = 3.5;

fn verify_checks(cfg: &RunConfig) -> Result<Vec<CheckResult>> {
    let grid = cfg.grid()?;
    let fine = GridSpec::new(2 * grid.n(), grid.period())?;
    let coarse_err = kasner_errors(cfg, grid)?;
    let fine_err = kasner_errors(cfg, fine)?;
    let names = [
        "hamiltonian-constraint",
        "momentum-constraint",
        "magnetic-part-vanishes",
        "electric-part-matches",
        "br-energy-matches",
        "flux-matches-energy-rate",
    ];
    let mut checks: Vec<CheckResult> = names
        .iter()
        .zip(coarse_err.iter().zip(&fine_err))
        .map(|(name, (&ec, &ef))| {
            if ec.max(ef) <= VERIFY_FLOOR {
                CheckResult::new(name, true, format!("error {ef:.3e} at rounding level"))
            } else {
                let order = (ec / ef).log2();
                CheckResult::new(
                    name,
                    order >= VERIFY_MIN_ORDER || ef <= VERIFY_FLOOR,
                    format!("error {ec:.3e} -> {ef:.3e}, observed order {order:.2}"),
                )
            }
        })
        .collect();

    let oracle = KasnerOracle::new(cfg.kasner);
    let t = cfg.t0;
    let warp = CoordinateWarp::new(cfg.warp, grid.period());
    let state = kasner_initial_data_warped(cfg.kasner, t, grid, &warp)?;
    let a = SliceAnalysis::new(&state)?;
    let (n, report) = solve_lapse(&state.g, &state.k, &solver_config(cfg))?;
    let n_exact = oracle.lapse(t);
    let lapse_err = n.values().iter().fold(0.0_f64, |m, v| m.max((v - n_exact).abs())) / n_exact;
    checks.push(CheckResult::new(
        "lapse-solve",
        lapse_err <= 1e-8 && report.converged,
        format!("relative error {lapse_err:.3e} after {} iterations", report.iterations),
    ));
    let margins = a.lapse_margins(cfg.solver_tol)?;
    checks.push(CheckResult::new(
        "lapse-bounds",
        margins.holds(),
        format!("lower margin {:.3e}, upper margin {:.3e}", margins.lower, margins.upper),
    ));

    // Algebraic identities on a generic slice.
    let (sample, _) = perturb(&state, 0.05, cfg.seed, &solver_config(cfg))?;
    let md = MetricData::new(&sample.g)?;
    let e_like = sample.k.add(&sample.g.scale(0.3));
    let k_scale = sample.k.max_abs_component().powi(2).max(1e-300);
    checks.push(CheckResult::within(
        "wedge-antisymmetric",
        wedge_with(&sample.k, &sample.k, &md, Orientation::RightHanded).max_abs_component() / k_scale,
        1e-12,
    ));
    let cross_asym = cross_with(&sample.k, &e_like, &sample.g, &md).sub(&cross_with(&e_like, &sample.k, &sample.g, &md));
    checks.push(CheckResult::within(
        "cross-symmetric",
        cross_asym.max_abs_component() / k_scale,
        1e-12,
    ));
    let gamma = christoffels_with(&sample.g, &md);
    let curl_trace = trace_with(&curl_with(&sample.k, &gamma, &md, Orientation::RightHanded), &md).max_abs_component();
    checks.push(CheckResult::within(
        "curl-traceless",
        curl_trace / sample.k.max_abs_component().max(1e-300),
        1e-10,
    ));

    let k_ratio = a.k_ratio();
    checks.push(CheckResult::new(
        "k-ratio-lower-bound",
        k_ratio * k_ratio >= 1.0 / 3.0 - 1e-12,
        format!("value {k_ratio:.6}"),
    ));
    Ok(checks)
}

fn rescale_checks(cfg: &RunConfig) -> Result<Vec<CheckResult>> {
    let grid = cfg.grid()?;
    let warp = CoordinateWarp::new(cfg.warp, grid.period());
    let exact = kasner_initial_data_warped(cfg.kasner, cfg.t0, grid, &warp)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst = [0.0_f64; 6];
    for trial in 0..cfg.rescale_trials {
        let amplitude = if cfg.perturb_amplitude > 0.0 { cfg.perturb_amplitude } else { 1e-3 };
        let (state, _) = perturb(&exact, amplitude, cfg.seed.wrapping_add(trial as u64), &solver_config(cfg))?;
        let r = 10f64.powf(rng.gen_range(-1.0..1.0));
        let scaled = rescale(&state, RescaleFactor::new(r)?);
        let a = SliceAnalysis::new(&state)?;
        let b = SliceAnalysis::new(&scaled)?;
        let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(1e-300);
        worst[0] = worst[0].max(rel(b.br_energy(), r * a.br_energy()));
        worst[1] = worst[1].max(rel(b.br_flux(), a.br_flux()));
        worst[2] = worst[2].max(rel(b.k_ratio(), a.k_ratio()));
        worst[3] = worst[3].max(rel(b.curvature_radius(), a.curvature_radius() / r));
        worst[4] = worst[4].max(rel(
            b.gradient_lapse_check(cfg.lambda, b.curvature_radius()).c_fit,
            a.gradient_lapse_check(cfg.lambda, a.curvature_radius()).c_fit,
        ));
        let back = rescale(&scaled, RescaleFactor::new(r)?.inverse());
        let round_trip = back
            .g
            .sub(&state.g)
            .max_abs_component()
            .max(back.k.sub(&state.k).max_abs_component() / state.k.max_abs_component())
            .max(rel(back.t, state.t))
            .max((back.scale - 1.0).abs());
        worst[5] = worst[5].max(round_trip);
    }
    let tol = 1e-10;
    Ok(vec![
        CheckResult::within("energy-scales-linearly", worst[0], tol),
        CheckResult::within("flux-invariant", worst[1], tol),
        CheckResult::within("k-ratio-invariant", worst[2], tol),
        CheckResult::within("curvature-radius-scales-inversely", worst[3], tol),
        CheckResult::within("gradient-constant-invariant", worst[4], tol),
        CheckResult::within("rescale-round-trip", worst[5], 1e-14),
    ])
}

fn oracle_table<W: Write>(cfg: &RunConfig, out: &mut W) -> Result<()> {
    let grid = cfg.grid()?;
    let oracle = KasnerOracle::new(cfg.kasner);
    let volume = grid.coordinate_volume();
    let times = if cfg.oracle_times.is_empty() {
        vec![cfg.t0, cfg.t_end]
    } else {
        cfg.oracle_times.clone()
    };
    let p = cfg.kasner.exponents();
    writeln!(out, "# kasner exponents {} {} {}; volume {volume}", p[0], p[1], p[2])?;
    writeln!(out, "# decay exponent {}", oracle.decay_exponent())?;
    writeln!(
        out,
        "t,tau,g_11,g_22,g_33,k_11,k_22,k_33,lapse,e_1,e_2,e_3,energy_density,e_br,e_br_rate,r_c"
    )?;
    for &t in &times {
        let g = oracle.metric_diag(t);
        let k = oracle.extrinsic_diag(t);
        let e = oracle.electric_eigenvalues(t);
        let row = [
            t,
            proper_time(t),
            g[0],
            g[1],
            g[2],
            k[0],
            k[1],
            k[2],
            oracle.lapse(t),
            e[0],
            e[1],
            e[2],
            oracle.energy_density(t),
            oracle.br_energy(t, volume),
            oracle.br_energy_rate(t, volume),
            oracle.curvature_radius(t),
        ];
        let row: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

fn print_checks<W: Write>(checks: &[CheckResult], out: &mut W) -> Result<()> {
    for c in checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        writeln!(out, "[{tag}] {}: {}", c.name, c.detail)?;
    }
    Ok(())
}

/// Executes the configured command, printing progress to `out`.
pub fn run<W: Write>(cfg: &RunConfig, out: &mut W) -> Result<RunReport> {
    cfg.validate()?;
    let mut report = RunReport {
        command: cfg.command,
        checks: Vec::new(),
        records: Vec::new(),
        verdict: None,
    };
    match cfg.command {
        Command::Verify => {
            report.checks = verify_checks(cfg)?;
            print_checks(&report.checks, out)?;
        }
        Command::RescaleTest => {
            report.checks = rescale_checks(cfg)?;
            print_checks(&report.checks, out)?;
        }
        Command::Oracle => oracle_table(cfg, out)?,
        Command::Evolve => {
            let run = evolve(cfg)?;
            let file = File::create(&cfg.output_path).map_err(|e| BrError::Sink(format!("{}: {e}", cfg.output_path)))?;
            emit_records(&run.records, &mut BufWriter::new(file))?;
            if let Some(path) = &cfg.snapshot_path {
                let file = File::create(path).map_err(|e| BrError::Sink(format!("{path}: {e}")))?;
                write_snapshot(&run.final_state, &mut BufWriter::new(file))?;
            }
            writeln!(
                out,
                "evolved {} steps from t = {} to t = {}; initial constraints H = {:.3e}, M = {:.3e}",
                run.steps, cfg.t0, run.final_state.t, run.initial_constraints.hamiltonian, run.initial_constraints.momentum
            )?;
            writeln!(out, "wrote {} records to {}", run.records.len(), cfg.output_path)?;
            writeln!(out, "monitor: {}", run.verdict.summary())?;
            report.checks = vec![
                CheckResult::new(
                    "lapse-bounds",
                    run.lapse_bounds_hold,
                    "maximum-principle margins at every step".into(),
                ),
                if cfg.trace_correction {
                    CheckResult::new(
                        "cmc-drift",
                        true,
                        format!("largest per-step drift {:.3e}, removed by trace correction", run.max_cmc_drift),
                    )
                } else {
                    CheckResult::within("cmc-drift", run.max_cmc_drift, cfg.cmc_drift_tol)
                },
                CheckResult::new(
                    "no-theorem-tension",
                    !run.verdict.theorem_tension,
                    format!("energy growth bound {}", cfg.growth_factor),
                ),
            ];
            print_checks(&report.checks, out)?;
            report.records = run.records;
            report.verdict = Some(run.verdict);
        }
    }
    Ok(report)
}
