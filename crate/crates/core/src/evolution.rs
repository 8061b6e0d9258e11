//! CMC-gauge, zero-shift vacuum evolution of slice data.
//!
//! The evolved pair is
//!
//! ```text
//! ∂t g = −2 N K
//! ∂t K = −∇²N + N (Ric + H K − 2 K:K)
//! ```
//!
//! with the lapse re-solved from `−ΔN + |K|² N = 1` at every Runge-Kutta
//! stage. Time runs in CMC time `t = H < 0`.
//!
//! A state carries a cumulative blowup `scale` (1 for physical data). The stored
//! lapse follows the blowup convention and does not change under rescaling; the
//! lapse with respect to the state's own CMC time is `N / scale²`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BrError, Result};
use crate::geometry::{constraint_norms, hessian, ricci_from_connection, ConstraintNorms};
use crate::grid::{check_same_grid, GridSpec, MetricData, ScalarField, SymTensorField};
use crate::kasner::{CoordinateWarp, KasnerOracle, KasnerParams};
use crate::lapse::{lapse_margins, solve_elliptic, EllipticSolveReport, LapseMargins, LapseSolverConfig};
use crate::point::Sym3;
use crate::tensor::{christoffels_with, norm_sq_with, square_with, trace_with};

/// One CMC Cauchy slice.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceState {
    /// CMC time, equal to the mean curvature.
    pub t: f64,
    /// Cumulative blowup factor applied by [`rescale`].
    pub scale: f64,
    pub g: SymTensorField,
    pub k: SymTensorField,
    pub n: ScalarField,
}

impl SliceState {
    pub fn new(t: f64, g: SymTensorField, k: SymTensorField, n: ScalarField) -> Result<Self> {
        let s = SliceState { t, scale: 1.0, g, k, n };
        s.validate()?;
        Ok(s)
    }

    pub fn grid(&self) -> &GridSpec {
        self.g.grid()
    }

    /// Lapse with respect to this state's CMC time.
    pub fn cmc_lapse(&self) -> ScalarField {
        if self.scale == 1.0 {
            self.n.clone()
        } else {
            self.n.scale(1.0 / (self.scale * self.scale))
        }
    }

    /// Right-hand side of the stored-lapse equation, `scale²`.
    pub fn lapse_source(&self) -> f64 {
        self.scale * self.scale
    }

    /// Checks everything except the CMC condition.
    pub fn validate(&self) -> Result<()> {
        check_same_grid(&self.g, &self.k)?;
        check_same_grid(&self.g, &self.n)?;
        if !(self.t < 0.0) || !self.t.is_finite() {
            return Err(BrError::InvalidState(format!("CMC time must be negative, got {}", self.t)));
        }
        if !(self.scale > 0.0) {
            return Err(BrError::InvalidState(format!("scale must be positive, got {}", self.scale)));
        }
        MetricData::new(&self.g)?;
        if let Some((index, &value)) = self.n.values().iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(BrError::NonPositiveLapse { index, value });
        }
        Ok(())
    }

    /// `max |tr_g K − t| / |t|`
    pub fn cmc_drift(&self) -> Result<f64> {
        let md = MetricData::new(&self.g)?;
        Ok(relative_drift(&self.k, &md, self.t))
    }
}

fn relative_drift(k: &SymTensorField, md: &MetricData, t: f64) -> f64 {
    trace_with(k, md)
        .values()
        .iter()
        .fold(0.0_f64, |m, h| m.max((h - t).abs()))
        / t.abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub solver: LapseSolverConfig,
    /// `|dt| ≤ cfl · h / sup N`
    pub cfl: f64,
    /// Allowed relative CMC drift `max |tr K − t| / |t|` after a step.
    pub cmc_drift_tol: f64,
    /// Restore `tr K = t` by shifting the pure-trace part of `K` after each step.
    pub trace_correction: bool,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            solver: LapseSolverConfig::default(),
            cfl: 0.25,
            cmc_drift_tol: 1e-6,
            trace_correction: false,
        }
    }
}

/// Largest admissible `|dt|` for a state: `cfl · h / sup (N · max_a sqrt(g^aa))`,
/// the inverse of the fastest coordinate light speed.
pub fn stable_dt(state: &SliceState, cfl: f64) -> f64 {
    let source = state.lapse_source();
    let speed = state
        .g
        .values()
        .iter()
        .zip(state.n.values())
        .fold(0.0_f64, |m, (gv, n)| {
            let inv = gv.inverse_with_det(gv.det());
            let c = (0..3).map(|a| inv.get(a, a)).fold(0.0_f64, f64::max).sqrt();
            m.max(n / source * c)
        });
    cfl * state.grid().min_spacing() / speed
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: SliceState,
    /// Relative CMC drift before any trace correction.
    pub cmc_drift: f64,
    /// Report of the end-of-step lapse solve.
    pub lapse_report: EllipticSolveReport,
    /// Maximum-principle margins of the end-of-step lapse.
    pub lapse_margins: LapseMargins,
    /// Every lapse solve performed during the step (four stages plus the final one).
    pub solves: Vec<EllipticSolveReport>,
    /// Maximum-principle margins of each stage lapse, in stage order.
    pub stage_margins: Vec<LapseMargins>,
}

struct Rates {
    dg: SymTensorField,
    dk: SymTensorField,
    lapse: ScalarField,
    report: EllipticSolveReport,
    margins: LapseMargins,
}

fn cmc_lapse(
    g: &SymTensorField,
    k: &SymTensorField,
    md: &MetricData,
    guess: &ScalarField,
    solver: &LapseSolverConfig,
) -> Result<(ScalarField, EllipticSolveReport)> {
    let ksq = norm_sq_with(k, md);
    let one = ScalarField::constant(*g.grid(), 1.0);
    let (n, report) = solve_elliptic(g, &ksq, &one, Some(guess), solver, None)?;
    if let Some((index, &value)) = n.values().iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(BrError::NonPositiveLapse { index, value });
    }
    Ok((n, report))
}

fn rates(g: &SymTensorField, k: &SymTensorField, guess: &ScalarField, solver: &LapseSolverConfig) -> Result<Rates> {
    let md = MetricData::new(g)?;
    let gamma = christoffels_with(g, &md);
    let (lapse, report) = cmc_lapse(g, k, &md, guess, solver)?;
    let margins = lapse_margins(&lapse, k, g, 1.0, solver.tol)?;
    let ric = ricci_from_connection(&gamma);
    let hess = hessian(&lapse, &gamma);
    let h = trace_with(k, &md);
    let kk = square_with(k, &md);
    let dg = k.map_indexed(|p, kv| kv * (-2.0 * lapse.at(p)));
    let dk = hess.map_indexed(|p, hv| {
        let n = lapse.at(p);
        (ric.at(p) + k.at(p) * h.at(p) - kk.at(p) * 2.0) * n - hv
    });
    Ok(Rates {
        dg,
        dk,
        lapse,
        report,
        margins,
    })
}

/// One classical fourth-order Runge-Kutta step of size `dt` (negative `dt`
/// evolves toward the past).
pub fn time_step(state: &SliceState, dt: f64, config: &EvolutionConfig) -> Result<StepOutcome> {
    state.validate()?;
    let bound = stable_dt(state, config.cfl);
    if !(dt.abs() <= bound * (1.0 + 1e-12)) {
        return Err(BrError::UnstableTimeStep { dt, bound });
    }
    let t_new = state.t + dt;
    if !(t_new < 0.0) {
        return Err(BrError::InvalidState(format!("step would reach CMC time {t_new} ≥ 0")));
    }
    let guess = state.cmc_lapse();
    let (g0, k0) = (&state.g, &state.k);
    let mut solves = Vec::with_capacity(5);

    let r1 = rates(g0, k0, &guess, &config.solver)?;
    solves.push(r1.report);
    let g1 = g0.axpy(0.5 * dt, &r1.dg);
    let k1 = k0.axpy(0.5 * dt, &r1.dk);
    let r2 = rates(&g1, &k1, &r1.lapse, &config.solver)?;
    solves.push(r2.report);
    let g2 = g0.axpy(0.5 * dt, &r2.dg);
    let k2 = k0.axpy(0.5 * dt, &r2.dk);
    let r3 = rates(&g2, &k2, &r2.lapse, &config.solver)?;
    solves.push(r3.report);
    let g3 = g0.axpy(dt, &r3.dg);
    let k3 = k0.axpy(dt, &r3.dk);
    let r4 = rates(&g3, &k3, &r3.lapse, &config.solver)?;
    solves.push(r4.report);

    let w = dt / 6.0;
    let g_new = g0
        .axpy(w, &r1.dg)
        .axpy(2.0 * w, &r2.dg)
        .axpy(2.0 * w, &r3.dg)
        .axpy(w, &r4.dg);
    let mut k_new = k0
        .axpy(w, &r1.dk)
        .axpy(2.0 * w, &r2.dk)
        .axpy(2.0 * w, &r3.dk)
        .axpy(w, &r4.dk);

    let md = MetricData::new(&g_new)?;
    let drift = relative_drift(&k_new, &md, t_new);
    if config.trace_correction {
        k_new = project_trace(&k_new, &g_new, &md, t_new);
    } else if drift > config.cmc_drift_tol {
        return Err(BrError::CmcDriftExceeded { drift, tol: config.cmc_drift_tol });
    }

    let (lapse, report) = cmc_lapse(&g_new, &k_new, &md, &r4.lapse, &config.solver)?;
    solves.push(report);
    let margins = lapse_margins(&lapse, &k_new, &g_new, 1.0, config.solver.tol)?;
    let source = state.lapse_source();
    let n = if source == 1.0 { lapse } else { lapse.scale(source) };
    Ok(StepOutcome {
        state: SliceState {
            t: t_new,
            scale: state.scale,
            g: g_new,
            k: k_new,
            n,
        },
        cmc_drift: drift,
        lapse_report: report,
        lapse_margins: margins,
        solves,
        stage_margins: vec![r1.margins, r2.margins, r3.margins, r4.margins],
    })
}

/// `K + ((t − tr K)/3) g`, which has trace exactly `t` up to rounding.
fn project_trace(k: &SymTensorField, g: &SymTensorField, md: &MetricData, t: f64) -> SymTensorField {
    let h = trace_with(k, md);
    k.map_indexed(|p, kv| kv + g.at(p) * ((t - h.at(p)) / 3.0))
}

/// Blowup factor `r > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaleFactor(f64);

impl RescaleFactor {
    pub fn new(r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(BrError::Validation(format!("rescale factor must be positive, got {r}")));
        }
        Ok(RescaleFactor(r))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn inverse(self) -> RescaleFactor {
        RescaleFactor(1.0 / self.0)
    }
}

/// `g' = r⁻² g`, `K' = r⁻¹ K`, `t' = r t`, `N' = N`.
pub fn rescale(state: &SliceState, r: RescaleFactor) -> SliceState {
    let r = r.value();
    if r == 1.0 {
        return state.clone();
    }
    SliceState {
        t: state.t * r,
        scale: state.scale * r,
        g: state.g.scale(1.0 / (r * r)),
        k: state.k.scale(1.0 / r),
        n: state.n.clone(),
    }
}

/// Exact Kasner slice data at CMC time `t0`.
pub fn kasner_initial_data(p: KasnerParams, t0: f64, grid: GridSpec) -> Result<SliceState> {
    kasner_initial_data_warped(p, t0, grid, &CoordinateWarp::identity(grid.period()))
}

/// Kasner data pulled back by a periodic coordinate warp.
pub fn kasner_initial_data_warped(
    p: KasnerParams,
    t0: f64,
    grid: GridSpec,
    warp: &CoordinateWarp,
) -> Result<SliceState> {
    if !(t0 < 0.0) {
        return Err(BrError::Validation(format!("initial CMC time must be negative, got {t0}")));
    }
    let oracle = KasnerOracle::new(p);
    let gd = oracle.metric_diag(t0);
    let kd = oracle.extrinsic_diag(t0);
    let g = SymTensorField::from_fn(grid, |x| warp.pull_back_diagonal(x, gd));
    let k = SymTensorField::from_fn(grid, |x| warp.pull_back_diagonal(x, kd));
    let n = ScalarField::constant(grid, oracle.lapse(t0));
    SliceState::new(t0, g, k, n)
}

const PERTURB_MODES: usize = 3;
const PERTURB_MAX_WAVENUMBER: i32 = 2;

/// Smooth zero-mean periodic field with unit sup norm, drawn from `rng`.
fn random_mode_field(grid: GridSpec, rng: &mut ChaCha8Rng) -> ScalarField {
    let modes: Vec<([f64; 3], f64, f64)> = (0..PERTURB_MODES)
        .map(|_| {
            let mut kv = [0i32; 3];
            while kv == [0, 0, 0] {
                kv = std::array::from_fn(|_| rng.gen_range(-PERTURB_MAX_WAVENUMBER..=PERTURB_MAX_WAVENUMBER));
            }
            let period = grid.period();
            let wave = std::array::from_fn(|a| 2.0 * std::f64::consts::PI * kv[a] as f64 / period[a]);
            (wave, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    let f = ScalarField::from_fn(grid, |x| {
        modes
            .iter()
            .map(|(w, c, phase)| c * (w[0] * x[0] + w[1] * x[1] + w[2] * x[2] + phase).cos())
            .sum()
    });
    let m = f.max_abs_component();
    if m > 0.0 {
        f.scale(1.0 / m)
    } else {
        f
    }
}

/// Adds a smooth random perturbation of relative size `amplitude` to `g` and `K`,
/// restores the CMC condition, re-solves the lapse and reports the resulting
/// constraint violation. Deterministic in `seed`.
pub fn perturb(
    state: &SliceState,
    amplitude: f64,
    seed: u64,
    solver: &LapseSolverConfig,
) -> Result<(SliceState, ConstraintNorms)> {
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(BrError::Validation(format!("perturbation amplitude must be ≥ 0, got {amplitude}")));
    }
    if amplitude == 0.0 {
        let norms = constraint_norms(&state.g, &state.k)?;
        return Ok((state.clone(), norms));
    }
    let grid = *state.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dg: [ScalarField; 6] = std::array::from_fn(|_| random_mode_field(grid, &mut rng));
    let dk: [ScalarField; 6] = std::array::from_fn(|_| random_mode_field(grid, &mut rng));

    let md0 = MetricData::new(&state.g)?;
    let ksq = norm_sq_with(&state.k, &md0);
    let g = state.g.map_indexed(|p, gv| {
        let bump = Sym3::from_fn(|a, b| {
            let c = crate::point::sym_index(a, b);
            dg[c].at(p) * (gv.get(a, a) * gv.get(b, b)).sqrt()
        });
        gv + bump * amplitude
    });
    let md = MetricData::new(&g)?;
    let k = state.k.map_indexed(|p, kv| {
        let size = (ksq.at(p) / 3.0).sqrt();
        let gv = g.at(p);
        let bump = Sym3::from_fn(|a, b| {
            let c = crate::point::sym_index(a, b);
            dk[c].at(p) * size * (gv.get(a, a) * gv.get(b, b)).sqrt()
        });
        kv + bump * amplitude
    });
    let k = project_trace(&k, &g, &md, state.t);
    let source = state.lapse_source();
    let ksq_new = norm_sq_with(&k, &md);
    let (n, _) = solve_elliptic(
        &g,
        &ksq_new,
        &ScalarField::constant(grid, source),
        Some(&state.n),
        solver,
        None,
    )?;
    let new_state = SliceState {
        t: state.t,
        scale: state.scale,
        g,
        k,
        n,
    };
    new_state.validate()?;
    let norms = constraint_norms(&new_state.g, &new_state.k)?;
    Ok((new_state, norms))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axisymmetric_kasner_unit_time() {
        let grid = GridSpec::unit(8).unwrap();
        let s = kasner_initial_data(KasnerParams::axisymmetric(), -1.0, grid).unwrap();
        let k = s.k.at(0);
        assert_eq!(s.g.at(0), Sym3::IDENTITY);
        assert!((k.get(0, 0) + 2.0 / 3.0).abs() < 1e-15);
        assert!((k.get(2, 2) - 1.0 / 3.0).abs() < 1e-15);
        assert!(s.cmc_drift().unwrap() < 1e-15);
        assert_eq!(s.n.at(0), 1.0);
    }

    #[test]
    fn rejects_nonnegative_time() {
        let grid = GridSpec::unit(8).unwrap();
        assert!(kasner_initial_data(KasnerParams::flat(), 0.0, grid).is_err());
        assert!(kasner_initial_data(KasnerParams::flat(), 0.5, grid).is_err());
    }

    #[test]
    fn rescale_identity_and_inverse() {
        let grid = GridSpec::unit(8).unwrap();
        let s = kasner_initial_data(KasnerParams::axisymmetric(), -0.7, grid).unwrap();
        assert_eq!(rescale(&s, RescaleFactor::new(1.0).unwrap()), s);
        let r = RescaleFactor::new(3.7).unwrap();
        let back = rescale(&rescale(&s, r), r.inverse());
        assert_eq!(back.n, s.n);
        assert!((back.t - s.t).abs() < 1e-15);
        assert!(back.g.sub(&s.g).max_abs_component() < 1e-15);
        assert!(RescaleFactor::new(0.0).is_err());
        assert!(RescaleFactor::new(-1.0).is_err());
    }

    #[test]
    fn zero_amplitude_perturbation_is_identity() {
        let grid = GridSpec::unit(8).unwrap();
        let s = kasner_initial_data(KasnerParams::axisymmetric(), -1.0, grid).unwrap();
        let (p, norms) = perturb(&s, 0.0, 7, &LapseSolverConfig::default()).unwrap();
        assert_eq!(p, s);
        assert!(norms.hamiltonian < 1e-14);
    }

    #[test]
    fn oversized_step_is_rejected() {
        let grid = GridSpec::unit(8).unwrap();
        let s = kasner_initial_data(KasnerParams::axisymmetric(), -1.0, grid).unwrap();
        let config = EvolutionConfig::default();
        let bound = stable_dt(&s, config.cfl);
        assert!(matches!(
            time_step(&s, 2.0 * bound, &config),
            Err(BrError::UnstableTimeStep { .. })
        ));
    }

    #[test]
    fn drift_without_correction_is_an_error() {
        let grid = GridSpec::new(8, [10.0; 3]).unwrap();
        let mut s = kasner_initial_data(KasnerParams::axisymmetric(), -1.0, grid).unwrap();
        // Break the CMC condition by hand.
        s.k = s.k.add(&s.g.scale(-0.01));
        let config = EvolutionConfig::default();
        let err = time_step(&s, 0.01, &config).unwrap_err();
        assert!(matches!(err, BrError::CmcDriftExceeded { .. }));
        let corrected = EvolutionConfig { trace_correction: true, ..config };
        let out = time_step(&s, 0.01, &corrected).unwrap();
        assert!(out.state.cmc_drift().unwrap() < 1e-14);
    }
}
