//! Bel-Robinson energies, the Gauss-law flux, the lapse-gradient estimate, the
//! continuation monitor and the time-series table.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{BrError, Result};
use crate::evolution::SliceState;
use crate::geometry::{br_components_with, constraint_norms_with, gradient, weyl_parts_with, BrComponents, ConstraintNorms, WeylParts};
use crate::grid::{integrate_with, sup_norm_with, MetricData, ScalarField};
use crate::lapse::{lapse_margins, LapseMargins};
use crate::tensor::{christoffels_with, raise_both, Connection};

/// Everything derived from one slice that the diagnostics need.
pub struct SliceAnalysis<'a> {
    pub state: &'a SliceState,
    pub metric: MetricData,
    pub connection: Connection,
    pub weyl: WeylParts,
    pub br: BrComponents,
    /// Lapse with respect to the slice's CMC time.
    pub lapse: ScalarField,
}

impl<'a> SliceAnalysis<'a> {
    pub fn new(state: &'a SliceState) -> Result<Self> {
        state.validate()?;
        let metric = MetricData::new(&state.g)?;
        let connection = christoffels_with(&state.g, &metric);
        let weyl = weyl_parts_with(&state.k, &connection, &metric);
        let br = br_components_with(&weyl.e, &weyl.b, &state.g, &metric);
        Ok(SliceAnalysis {
            state,
            metric,
            connection,
            weyl,
            br,
            lapse: state.cmc_lapse(),
        })
    }

    /// `∫ (|E|² + |B|²) μ_g`
    pub fn br_energy(&self) -> f64 {
        integrate_with(&self.br.q_tttt, &self.metric)
    }

    /// `∫ N (|E|² + |B|²) μ_g`, the integrand of the spacetime energy.
    pub fn lapse_weighted_energy(&self) -> f64 {
        integrate_with(&self.br.q_tttt.zip_map(&self.lapse, |q, n| q * n), &self.metric)
    }

    /// `−3 ∫ (−N Q_abTT K^ab + Q_aTTT ∇^a N) μ_g`
    pub fn br_flux(&self) -> f64 {
        let dn = gradient(&self.lapse);
        let integrand = self.lapse.map_indexed(|p, n| {
            let ginv = self.metric.inverse.at(p);
            let k_up = raise_both(&self.state.k.at(p), &ginv);
            let q_k = self.br.q_abtt.at(p).contract_flat(&k_up);
            let q = self.br.q_attt.at(p);
            let d = dn.at(p);
            let mut q_dn = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    q_dn += ginv.get(a, b) * q[a] * d[b];
                }
            }
            -n * q_k + q_dn
        });
        -3.0 * integrate_with(&integrand, &self.metric)
    }

    /// Half the shortest closed coordinate-axis loop, a length scale below which
    /// the torus is locally indistinguishable from a ball.
    pub fn injectivity_cap(&self) -> f64 {
        let period = self.state.grid().period();
        let mut cap = f64::INFINITY;
        for gv in self.state.g.values() {
            for (a, l) in period.iter().enumerate() {
                cap = cap.min(0.5 * l * gv.get(a, a).sqrt());
            }
        }
        cap
    }

    /// `(sup sqrt(|E|² + |B|²))^{-1/2}`, capped at [`Self::injectivity_cap`].
    pub fn curvature_radius(&self) -> f64 {
        let cap = self.injectivity_cap();
        let sup = self.br.q_tttt.values().iter().cloned().fold(0.0_f64, f64::max).sqrt();
        if sup > 0.0 {
            sup.powf(-0.5).min(cap)
        } else {
            cap
        }
    }

    /// `‖∇N‖_∞` in the slice metric, for the stored lapse.
    pub fn grad_lapse_sup(&self) -> f64 {
        sup_norm_with(&gradient(&self.state.n), &self.metric)
    }

    /// `‖K‖_∞ / |H|`
    pub fn k_ratio(&self) -> f64 {
        sup_norm_with(&self.state.k, &self.metric) / self.state.t.abs()
    }

    pub fn constraint_norms(&self) -> ConstraintNorms {
        constraint_norms_with(&self.state.k, &self.connection, &self.metric)
    }

    pub fn lapse_margins(&self, solver_tol: f64) -> Result<LapseMargins> {
        lapse_margins(&self.state.n, &self.state.k, &self.state.g, self.state.lapse_source(), solver_tol)
    }

    pub fn gradient_lapse_check(&self, lambda: f64, radius: f64) -> LapseGradientCheck {
        let s = self.state.scale;
        let lhs = radius * self.grad_lapse_sup();
        let rhs = radius * radius * lambda * s * s + (s / self.state.t).powi(2);
        LapseGradientCheck {
            lhs,
            rhs,
            c_fit: lhs / rhs,
        }
    }
}

pub fn br_energy(state: &SliceState) -> Result<f64> {
    Ok(SliceAnalysis::new(state)?.br_energy())
}

pub fn br_flux(state: &SliceState) -> Result<f64> {
    Ok(SliceAnalysis::new(state)?.br_flux())
}

pub fn curvature_radius(state: &SliceState) -> Result<f64> {
    Ok(SliceAnalysis::new(state)?.curvature_radius())
}

/// Trapezoidal `∫ dt ∫ N (|E|² + |B|²) μ_g` over a time-ordered history, with
/// time intervals counted positively in either direction of travel.
pub fn spacetime_br_energy(history: &[SliceState]) -> Result<f64> {
    if history.is_empty() {
        return Err(BrError::EmptyHistory);
    }
    let mut acc = SpacetimeEnergy::default();
    for s in history {
        acc.push(s.t, SliceAnalysis::new(s)?.lapse_weighted_energy())?;
    }
    Ok(acc.total)
}

/// Running trapezoidal accumulator for the spacetime energy.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SpacetimeEnergy {
    pub total: f64,
    last: Option<(f64, f64)>,
    direction: f64,
}

impl SpacetimeEnergy {
    pub fn push(&mut self, t: f64, weighted_energy: f64) -> Result<f64> {
        if let Some((t_prev, w_prev)) = self.last {
            let step = t - t_prev;
            let dir = step.signum();
            if step == 0.0 || (self.direction != 0.0 && dir != self.direction) {
                return Err(BrError::Validation(format!(
                    "history is not time-ordered at t = {t} (previous {t_prev})"
                )));
            }
            self.direction = dir;
            self.total += 0.5 * (w_prev + weighted_energy) * step.abs();
        }
        self.last = Some((t, weighted_energy));
        Ok(self.total)
    }
}

/// Output of the lapse-gradient estimate check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LapseGradientCheck {
    /// `r ‖∇N‖_∞`
    pub lhs: f64,
    /// `r² Λ + 1/H²`, written in blowup-invariant form.
    pub rhs: f64,
    /// `lhs / rhs`
    pub c_fit: f64,
}

pub fn gradient_lapse_estimate_check(state: &SliceState, lambda: f64) -> Result<LapseGradientCheck> {
    let a = SliceAnalysis::new(state)?;
    let r = a.curvature_radius();
    Ok(a.gradient_lapse_check(lambda, r))
}

/// One row of the diagnostics time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub e_br: f64,
    pub e_br_spacetime: f64,
    pub k_ratio: f64,
    pub r_c: f64,
    pub r_c_running: f64,
    pub lapse_margin_lower: f64,
    pub lapse_margin_upper: f64,
    pub grad_n_sup: f64,
    pub c_fit: f64,
    pub flux: f64,
    pub hamiltonian_norm: f64,
    pub momentum_norm: f64,
}

pub const RECORD_COLUMNS: [&str; 13] = [
    "t",
    "e_br",
    "e_br_spacetime",
    "k_ratio",
    "r_c",
    "r_c_running",
    "lapse_margin_lower",
    "lapse_margin_upper",
    "grad_n_sup",
    "c_fit",
    "flux",
    "hamiltonian_norm",
    "momentum_norm",
];

impl DiagnosticsRecord {
    pub fn to_array(&self) -> [f64; 13] {
        [
            self.t,
            self.e_br,
            self.e_br_spacetime,
            self.k_ratio,
            self.r_c,
            self.r_c_running,
            self.lapse_margin_lower,
            self.lapse_margin_upper,
            self.grad_n_sup,
            self.c_fit,
            self.flux,
            self.hamiltonian_norm,
            self.momentum_norm,
        ]
    }

    pub fn from_array(v: [f64; 13]) -> Self {
        DiagnosticsRecord {
            t: v[0],
            e_br: v[1],
            e_br_spacetime: v[2],
            k_ratio: v[3],
            r_c: v[4],
            r_c_running: v[5],
            lapse_margin_lower: v[6],
            lapse_margin_upper: v[7],
            grad_n_sup: v[8],
            c_fit: v[9],
            flux: v[10],
            hamiltonian_norm: v[11],
            momentum_norm: v[12],
        }
    }
}

/// Builds records along a run, carrying the spacetime energy and the running
/// infimum of the curvature radius.
#[derive(Debug, Clone)]
pub struct Recorder {
    lambda: f64,
    solver_tol: f64,
    spacetime: SpacetimeEnergy,
    r_c_running: f64,
}

impl Recorder {
    pub fn new(lambda: f64, solver_tol: f64) -> Self {
        Recorder {
            lambda,
            solver_tol,
            spacetime: SpacetimeEnergy::default(),
            r_c_running: f64::INFINITY,
        }
    }

    /// Feeds a slice. Every slice of the run must be fed, in order, so that the
    /// time integral sees every step; only the caller decides which records to keep.
    pub fn observe(&mut self, state: &SliceState) -> Result<DiagnosticsRecord> {
        let a = SliceAnalysis::new(state)?;
        let e_br_spacetime = self.spacetime.push(state.t, a.lapse_weighted_energy())?;
        let r_c = a.curvature_radius();
        self.r_c_running = self.r_c_running.min(r_c);
        let margins = a.lapse_margins(self.solver_tol)?;
        let check = a.gradient_lapse_check(self.lambda, self.r_c_running);
        let norms = a.constraint_norms();
        Ok(DiagnosticsRecord {
            t: state.t,
            e_br: a.br_energy(),
            e_br_spacetime,
            k_ratio: a.k_ratio(),
            r_c,
            r_c_running: self.r_c_running,
            lapse_margin_lower: margins.lower,
            lapse_margin_upper: margins.upper,
            grad_n_sup: a.grad_lapse_sup(),
            c_fit: check.c_fit,
            flux: a.br_flux(),
            hamiltonian_norm: norms.hamiltonian,
            momentum_norm: norms.momentum,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorConfig {
    /// Bound assumed on the spacetime energy and on `‖K‖²_∞ / H²`.
    pub lambda: f64,
    pub t0: f64,
    pub t_star: f64,
    /// Growth of the slice energy over its first value that counts as blowup.
    pub growth_factor: f64,
    /// Energies below this are treated as zero when measuring growth.
    pub energy_floor: f64,
}

impl MonitorConfig {
    pub fn new(lambda: f64, t0: f64, t_star: f64) -> Result<Self> {
        let c = MonitorConfig {
            lambda,
            t0,
            t_star,
            growth_factor: 1e3,
            energy_floor: 1e-12,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 1.0) {
            return Err(BrError::Validation(format!("lambda must exceed 1, got {}", self.lambda)));
        }
        if !(self.t0 < self.t_star && self.t_star < 0.0) {
            return Err(BrError::Validation(format!(
                "monitor window needs t0 < t_star < 0, got [{}, {}]",
                self.t0, self.t_star
            )));
        }
        if !(self.growth_factor > 1.0) || !(self.energy_floor >= 0.0) {
            return Err(BrError::Validation("growth factor must exceed 1 and floor be ≥ 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordVerdict {
    pub t: f64,
    pub spacetime_bound_holds: bool,
    pub k_ratio_bound_holds: bool,
    pub energy_growth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorVerdict {
    pub records: Vec<RecordVerdict>,
    /// The spacetime energy exceeded Λ somewhere in the window.
    pub spacetime_energy_blowup: bool,
    /// `‖K‖²_∞ / H²` exceeded Λ somewhere in the window.
    pub k_ratio_blowup: bool,
    /// The slice energy grew past the growth factor while both bounds held.
    pub theorem_tension: bool,
}

impl MonitorVerdict {
    pub fn is_clean(&self) -> bool {
        !self.spacetime_energy_blowup && !self.k_ratio_blowup && !self.theorem_tension
    }

    pub fn summary(&self) -> String {
        if self.is_clean() {
            return "clean".to_string();
        }
        let mut parts = Vec::new();
        if self.spacetime_energy_blowup {
            parts.push("criterion-1 (spacetime energy)");
        }
        if self.k_ratio_blowup {
            parts.push("criterion-2 (K ratio)");
        }
        if self.theorem_tension {
            parts.push("theorem-tension");
        }
        parts.join(", ")
    }
}

/// Judges a time-ordered series against the two continuation criteria.
pub fn continuation_monitor(records: &[DiagnosticsRecord], config: &MonitorConfig) -> Result<MonitorVerdict> {
    config.validate()?;
    let first = records.first().ok_or(BrError::EmptyHistory)?;
    let slack = 1e-12 * config.t0.abs().max(1.0);
    let mut direction = 0.0;
    let mut prev_t = None;
    for r in records {
        if r.t < config.t0 - slack || r.t > config.t_star + slack {
            return Err(BrError::OutsideWindow {
                t: r.t,
                t0: config.t0,
                t_star: config.t_star,
            });
        }
        if let Some(pt) = prev_t {
            let d: f64 = r.t - pt;
            if d == 0.0 || (direction != 0.0 && d.signum() != direction) {
                return Err(BrError::Validation(format!("records are not time-ordered at t = {}", r.t)));
            }
            direction = d.signum();
        }
        prev_t = Some(r.t);
    }
    let base = first.e_br.max(config.energy_floor);
    let mut verdict = MonitorVerdict {
        records: Vec::with_capacity(records.len()),
        spacetime_energy_blowup: false,
        k_ratio_blowup: false,
        theorem_tension: false,
    };
    for r in records {
        let rv = RecordVerdict {
            t: r.t,
            spacetime_bound_holds: r.e_br_spacetime <= config.lambda,
            k_ratio_bound_holds: r.k_ratio * r.k_ratio <= config.lambda,
            energy_growth: if r.e_br <= config.energy_floor { 0.0 } else { r.e_br / base },
        };
        verdict.spacetime_energy_blowup |= !rv.spacetime_bound_holds;
        verdict.k_ratio_blowup |= !rv.k_ratio_bound_holds;
        if rv.spacetime_bound_holds && rv.k_ratio_bound_holds && rv.energy_growth > config.growth_factor {
            verdict.theorem_tension = true;
        }
        verdict.records.push(rv);
    }
    Ok(verdict)
}

/// Writes a header row and one comma-separated row per record. Floats use the
/// shortest representation that parses back to the same bits.
pub fn emit_records<W: Write>(records: &[DiagnosticsRecord], sink: &mut W) -> Result<()> {
    writeln!(sink, "{}", RECORD_COLUMNS.join(","))?;
    for r in records {
        let row: Vec<String> = r.to_array().iter().map(|v| format!("{v:e}")).collect();
        writeln!(sink, "{}", row.join(","))?;
    }
    sink.flush()?;
    Ok(())
}

pub fn parse_records<R: BufRead>(source: R) -> Result<Vec<DiagnosticsRecord>> {
    let mut lines = source.lines();
    let header = lines
        .next()
        .ok_or(BrError::Parse { line: 1, message: "missing header".into() })??;
    if header.trim() != RECORD_COLUMNS.join(",") {
        return Err(BrError::Parse { line: 1, message: format!("unexpected header `{header}`") });
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| BrError::Parse { line: lineno, message: e.to_string() })?;
        let arr: [f64; 13] = vals.try_into().map_err(|v: Vec<f64>| BrError::Parse {
            line: lineno,
            message: format!("expected {} columns, got {}", RECORD_COLUMNS.len(), v.len()),
        })?;
        out.push(DiagnosticsRecord::from_array(arr));
    }
    Ok(out)
}
