//! Flat `key = value` run configuration.
//!
//! One key per line, `#` starts a comment, blank lines are ignored and unknown
//! keys are rejected. Every key except `command` has a default.

use std::fmt::Write as _;

use crate::error::{BrError, Result};
use crate::grid::GridSpec;
use crate::kasner::KasnerParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Verify,
    Evolve,
    Oracle,
    RescaleTest,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Evolve => "evolve",
            Command::Oracle => "oracle",
            Command::RescaleTest => "rescale-test",
        }
    }

    pub fn parse(s: &str) -> Option<Command> {
        match s {
            "verify" => Some(Command::Verify),
            "evolve" => Some(Command::Evolve),
            "oracle" => Some(Command::Oracle),
            "rescale-test" => Some(Command::RescaleTest),
            _ => None,
        }
    }
}

/// How the evolution picks its step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stepping {
    Fixed(f64),
    Cfl(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub grid_n: usize,
    pub period: [f64; 3],
    pub kasner: KasnerParams,
    /// Amplitude of the periodic coordinate warp applied to Kasner data.
    pub warp: f64,
    pub t0: f64,
    pub t_end: f64,
    pub stepping: Stepping,
    pub perturb_amplitude: f64,
    pub seed: u64,
    pub lambda: f64,
    pub growth_factor: f64,
    pub output_path: String,
    pub snapshot_path: Option<String>,
    pub trace_correction: bool,
    pub cmc_drift_tol: f64,
    pub solver_tol: f64,
    pub solver_max_iter: Option<usize>,
    pub output_cadence: usize,
    pub oracle_times: Vec<f64>,
    pub rescale_trials: usize,
}

impl RunConfig {
    pub fn with_command(command: Command) -> Self {
        RunConfig {
            command,
            grid_n: 16,
            period: [1.0; 3],
            kasner: KasnerParams::axisymmetric(),
            warp: 0.0,
            t0: -1.0,
            t_end: -0.5,
            stepping: Stepping::Cfl(0.25),
            perturb_amplitude: 0.0,
            seed: 0,
            lambda: 10.0,
            growth_factor: 1e3,
            output_path: "diagnostics.csv".to_string(),
            snapshot_path: None,
            trace_correction: false,
            cmc_drift_tol: 1e-6,
            solver_tol: 1e-10,
            solver_max_iter: None,
            output_cadence: 1,
            oracle_times: Vec::new(),
            rescale_trials: 10,
        }
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid_n, self.period).map_err(|e| BrError::Validation(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        if !(self.t0 < 0.0 && self.t_end < 0.0) {
            return Err(BrError::Validation(format!(
                "t0 and t_end must be negative, got t0 = {}, t_end = {}",
                self.t0, self.t_end
            )));
        }
        if self.t0 == self.t_end {
            return Err(BrError::Validation("t0 and t_end must differ".into()));
        }
        if !(self.lambda > 1.0) {
            return Err(BrError::Validation(format!("lambda must exceed 1, got {}", self.lambda)));
        }
        if !(self.growth_factor > 1.0) {
            return Err(BrError::Validation(format!("growth_factor must exceed 1, got {}", self.growth_factor)));
        }
        if !(self.perturb_amplitude >= 0.0 && self.perturb_amplitude.is_finite()) {
            return Err(BrError::Validation(format!(
                "perturb_amplitude must be ≥ 0, got {}",
                self.perturb_amplitude
            )));
        }
        if !(self.warp.abs() < 0.5) {
            return Err(BrError::Validation(format!("warp must satisfy |warp| < 0.5, got {}", self.warp)));
        }
        match self.stepping {
            Stepping::Fixed(dt) if !(dt > 0.0 && dt.is_finite()) => {
                return Err(BrError::Validation(format!("dt must be positive, got {dt}")));
            }
            Stepping::Cfl(c) if !(c > 0.0 && c.is_finite()) => {
                return Err(BrError::Validation(format!("cfl must be positive, got {c}")));
            }
            _ => {}
        }
        if !(self.solver_tol > 0.0) || !(self.cmc_drift_tol > 0.0) {
            return Err(BrError::Validation("solver_tol and cmc_drift_tol must be positive".into()));
        }
        if self.output_cadence == 0 {
            return Err(BrError::Validation("output_cadence must be at least 1".into()));
        }
        if self.oracle_times.iter().any(|t| !(*t < 0.0)) {
            return Err(BrError::Validation("oracle_times must all be negative".into()));
        }
        Ok(())
    }

    /// Serializes every key in a fixed order; the output parses back to an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let p = self.kasner.exponents();
        let _ = writeln!(s, "command = {}", self.command.as_str());
        let _ = writeln!(s, "grid = {}", self.grid_n);
        let _ = writeln!(s, "period = {}, {}, {}", self.period[0], self.period[1], self.period[2]);
        let _ = writeln!(s, "kasner = {}, {}, {}", p[0], p[1], p[2]);
        let _ = writeln!(s, "warp = {}", self.warp);
        let _ = writeln!(s, "t0 = {}", self.t0);
        let _ = writeln!(s, "t_end = {}", self.t_end);
        match self.stepping {
            Stepping::Fixed(dt) => {
                let _ = writeln!(s, "dt = {dt}");
            }
            Stepping::Cfl(c) => {
                let _ = writeln!(s, "cfl = {c}");
            }
        }
        let _ = writeln!(s, "perturb_amplitude = {}", self.perturb_amplitude);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "lambda = {}", self.lambda);
        let _ = writeln!(s, "growth_factor = {}", self.growth_factor);
        let _ = writeln!(s, "output = {}", self.output_path);
        if let Some(p) = &self.snapshot_path {
            let _ = writeln!(s, "snapshot = {p}");
        }
        let _ = writeln!(s, "trace_correction = {}", self.trace_correction);
        let _ = writeln!(s, "cmc_drift_tol = {}", self.cmc_drift_tol);
        let _ = writeln!(s, "solver_tol = {}", self.solver_tol);
        if let Some(m) = self.solver_max_iter {
            let _ = writeln!(s, "solver_max_iter = {m}");
        }
        let _ = writeln!(s, "output_cadence = {}", self.output_cadence);
        if !self.oracle_times.is_empty() {
            let times: Vec<String> = self.oracle_times.iter().map(|t| t.to_string()).collect();
            let _ = writeln!(s, "oracle_times = {}", times.join(", "));
        }
        let _ = writeln!(s, "rescale_trials = {}", self.rescale_trials);
        s
    }
}

fn parse_f64(v: &str, line: usize) -> Result<f64> {
    v.trim().parse::<f64>().map_err(|e| BrError::Parse {
        line,
        message: format!("`{v}` is not a number: {e}"),
    })
}

fn parse_list(v: &str, line: usize) -> Result<Vec<f64>> {
    v.split(',').map(|x| parse_f64(x, line)).collect()
}

fn parse_triple(v: &str, line: usize) -> Result<[f64; 3]> {
    let l = parse_list(v, line)?;
    l.try_into().map_err(|l: Vec<f64>| BrError::Parse {
        line,
        message: format!("expected three comma-separated numbers, got {}", l.len()),
    })
}

fn parse_usize(v: &str, line: usize) -> Result<usize> {
    v.trim().parse::<usize>().map_err(|e| BrError::Parse {
        line,
        message: format!("`{v}` is not a non-negative integer: {e}"),
    })
}

fn parse_bool(v: &str, line: usize) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(BrError::Parse {
            line,
            message: format!("`{other}` is not a boolean"),
        }),
    }
}

/// Parses and validates configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut command = None;
    let mut cfg = RunConfig::with_command(Command::Verify);
    let mut kasner = None;
    let mut dt = None;
    let mut cfl = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or(BrError::Parse {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "command" => {
                command = Some(Command::parse(value).ok_or(BrError::Parse {
                    line,
                    message: format!("unknown command `{value}`"),
                })?)
            }
            "grid" => cfg.grid_n = parse_usize(value, line)?,
            "period" => cfg.period = parse_triple(value, line)?,
            "kasner" => kasner = Some((parse_triple(value, line)?, line)),
            "warp" => cfg.warp = parse_f64(value, line)?,
            "t0" => cfg.t0 = parse_f64(value, line)?,
            "t_end" => cfg.t_end = parse_f64(value, line)?,
            "dt" => dt = Some(parse_f64(value, line)?),
            "cfl" => cfl = Some(parse_f64(value, line)?),
            "perturb_amplitude" => cfg.perturb_amplitude = parse_f64(value, line)?,
            "seed" => {
                cfg.seed = value.parse::<u64>().map_err(|e| BrError::Parse {
                    line,
                    message: format!("`{value}` is not a seed: {e}"),
                })?
            }
            "lambda" => cfg.lambda = parse_f64(value, line)?,
            "growth_factor" => cfg.growth_factor = parse_f64(value, line)?,
            "output" => cfg.output_path = value.to_string(),
            "snapshot" => cfg.snapshot_path = Some(value.to_string()),
            "trace_correction" => cfg.trace_correction = parse_bool(value, line)?,
            "cmc_drift_tol" => cfg.cmc_drift_tol = parse_f64(value, line)?,
            "solver_tol" => cfg.solver_tol = parse_f64(value, line)?,
            "solver_max_iter" => cfg.solver_max_iter = Some(parse_usize(value, line)?),
            "output_cadence" => cfg.output_cadence = parse_usize(value, line)?,
            "oracle_times" => cfg.oracle_times = parse_list(value, line)?,
            "rescale_trials" => cfg.rescale_trials = parse_usize(value, line)?,
            other => {
                return Err(BrError::Parse {
                    line,
                    message: format!("unknown key `{other}`"),
                })
            }
        }
    }
    cfg.command = command.ok_or(BrError::Validation("missing required key `command`".into()))?;
    if let Some((p, _)) = kasner {
        cfg.kasner = KasnerParams::new(p[0], p[1], p[2]).map_err(|e| BrError::Validation(e.to_string()))?;
    }
    cfg.stepping = match (dt, cfl) {
        (Some(_), Some(_)) => return Err(BrError::Validation("give either dt or cfl, not both".into())),
        (Some(dt), None) => Stepping::Fixed(dt),
        (None, Some(c)) => Stepping::Cfl(c),
        (None, None) => cfg.stepping,
    };
    cfg.validate()?;
    Ok(cfg)
}
