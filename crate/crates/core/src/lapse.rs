//! Lapse equation `−ΔN + |K|² N = 1` on a slice, solved by Jacobi-preconditioned
//! conjugate gradients on the divergence-form discretization, and the
//! maximum-principle bounds `1/‖K‖²_∞ ≤ N ≤ 3/H²`.

use serde::{Deserialize, Serialize};

use crate::error::{BrError, Result};
use crate::grid::{check_same_grid, gradient_components, partial_derivative, MetricData, ScalarField, SymTensorField};
use crate::point::Sym3;
use crate::tensor::norm_sq_with;

/// Coefficient multiplying `h⁴` in the bound-check tolerance.
pub const BOUND_H4_CONSTANT: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LapseSolverConfig {
    /// Relative discrete L² residual at which the iteration stops.
    pub tol: f64,
    /// Iteration budget; `None` means `10 * sqrt(total points)`.
    pub max_iterations: Option<usize>,
}

impl Default for LapseSolverConfig {
    fn default() -> Self {
        LapseSolverConfig { tol: 1e-10, max_iterations: None }
    }
}

impl LapseSolverConfig {
    pub fn budget(&self, points: usize) -> usize {
        self.max_iterations
            .unwrap_or_else(|| (10.0 * (points as f64).sqrt()).ceil() as usize)
            .max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticSolveReport {
    pub iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
}

/// Matrix-free symmetric operator `v ↦ √g (−Δ v + c v)` in divergence form.
struct LapseOperator<'a> {
    md: &'a MetricData,
    /// `√g g^{ab}`
    flux_weight: Vec<Sym3>,
    /// `√g c`
    mass: Vec<f64>,
}

impl<'a> LapseOperator<'a> {
    fn new(md: &'a MetricData, zero_order: &ScalarField) -> Self {
        let flux_weight = md
            .inverse
            .values()
            .iter()
            .zip(md.sqrt_det.values())
            .map(|(gi, s)| *gi * *s)
            .collect();
        let mass = zero_order
            .values()
            .iter()
            .zip(md.sqrt_det.values())
            .map(|(c, s)| c * s)
            .collect();
        LapseOperator { md, flux_weight, mass }
    }

    fn apply(&self, v: &ScalarField) -> ScalarField {
        let d = gradient_components(v);
        let (d0, d1, d2) = (d[0].values(), d[1].values(), d[2].values());
        let mut flux: [Vec<f64>; 3] = std::array::from_fn(|_| Vec::with_capacity(d0.len()));
        for (p, w) in self.flux_weight.iter().enumerate() {
            let [xx, xy, xz, yy, yz, zz] = w.0;
            let (a, b, c) = (d0[p], d1[p], d2[p]);
            flux[0].push(xx * a + xy * b + xz * c);
            flux[1].push(xy * a + yy * b + yz * c);
            flux[2].push(xz * a + yz * b + zz * c);
        }
        let grid = *v.grid();
        let div: Vec<ScalarField> = flux
            .into_iter()
            .enumerate()
            .map(|(a, f)| partial_derivative(&ScalarField::from_raw(grid, f), a))
            .collect();
        let (e0, e1, e2) = (div[0].values(), div[1].values(), div[2].values());
        let out = v
            .values()
            .iter()
            .enumerate()
            .map(|(p, x)| self.mass[p] * x - (e0[p] + e1[p] + e2[p]))
            .collect();
        ScalarField::from_raw(grid, out)
    }

    /// Exact diagonal of the assembled operator.
    fn diagonal(&self) -> Vec<f64> {
        let grid = *self.md.sqrt_det.grid();
        let n = grid.n();
        (0..grid.len())
            .map(|p| {
                let ijk = grid.unravel(p);
                let mut s = self.mass[p];
                for a in 0..3 {
                    let h = grid.spacing(a);
                    for (off, c) in [(1usize, 8.0 / (12.0 * h)), (2, 1.0 / (12.0 * h))] {
                        for q in [(ijk[a] + off) % n, (ijk[a] + n - off) % n] {
                            let mut nb = ijk;
                            nb[a] = q;
                            s += self.flux_weight[grid.index(nb[0], nb[1], nb[2])].get(a, a) * c * c;
                        }
                    }
                }
                s
            })
            .collect()
    }
}

/// The symmetric discrete operator `v ↦ √g (−Δ_g v + c v)` used by the solver.
pub fn apply_elliptic_operator(g: &SymTensorField, zero_order: &ScalarField, v: &ScalarField) -> Result<ScalarField> {
    check_same_grid(g, zero_order)?;
    check_same_grid(g, v)?;
    let md = MetricData::new(g)?;
    Ok(LapseOperator::new(&md, zero_order).apply(v))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Callback receiving the iteration count and the current iterate.
pub type IterateObserver<'a> = &'a mut dyn FnMut(usize, &ScalarField);

/// Solves `−Δ_g u + c u = f` for a strictly positive zero-order coefficient `c`.
///
/// `observer` sees every iterate (including the initial guess) and is meant for
/// tests that inspect convergence.
pub fn solve_elliptic(
    g: &SymTensorField,
    zero_order: &ScalarField,
    rhs: &ScalarField,
    initial: Option<&ScalarField>,
    config: &LapseSolverConfig,
    mut observer: Option<IterateObserver<'_>>,
) -> Result<(ScalarField, EllipticSolveReport)> {
    check_same_grid(g, zero_order)?;
    check_same_grid(g, rhs)?;
    let md = MetricData::new(g)?;
    let min_c = zero_order.values().iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min_c > 0.0) {
        return Err(BrError::DegenerateZeroOrderTerm { min: min_c });
    }
    let op = LapseOperator::new(&md, zero_order);
    let diag = op.diagonal();
    let b: Vec<f64> = rhs.values().iter().zip(md.sqrt_det.values()).map(|(f, s)| f * s).collect();
    let b_norm = dot(&b, &b).sqrt();

    let mut x = match initial {
        Some(x0) => {
            check_same_grid(g, x0)?;
            x0.clone()
        }
        None => rhs.zip_map(zero_order, |f, c| f / c),
    };
    if let Some(obs) = observer.as_mut() {
        obs(0, &x);
    }
    let ax = op.apply(&x);
    let mut r: Vec<f64> = b.iter().zip(ax.values()).map(|(bi, ai)| bi - ai).collect();
    let budget = config.budget(g.grid().len());
    let rel = |r: &[f64]| if b_norm > 0.0 { dot(r, r).sqrt() / b_norm } else { dot(r, r).sqrt() };

    let mut residual = rel(&r);
    let mut iterations = 0;
    if residual > config.tol {
        let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, di)| ri / di).collect();
        let mut p = ScalarField::from_values(*g.grid(), z.clone())?;
        let mut rz = dot(&r, &z);
        while iterations < budget {
            iterations += 1;
            let ap = op.apply(&p);
            let pap = dot(p.values(), ap.values());
            if !(pap > 0.0) {
                break;
            }
            let alpha = rz / pap;
            for (xi, pi) in x.values_mut().iter_mut().zip(p.values()) {
                *xi += alpha * pi;
            }
            for (ri, api) in r.iter_mut().zip(ap.values()) {
                *ri -= alpha * api;
            }
            if let Some(obs) = observer.as_mut() {
                obs(iterations, &x);
            }
            residual = rel(&r);
            if residual <= config.tol {
                break;
            }
            for ((zi, ri), di) in z.iter_mut().zip(&r).zip(&diag) {
                *zi = ri / di;
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for (pi, zi) in p.values_mut().iter_mut().zip(&z) {
                *pi = zi + beta * *pi;
            }
        }
    }
    let report = EllipticSolveReport {
        iterations,
        final_residual: residual,
        converged: residual <= config.tol,
    };
    if !report.converged {
        return Err(BrError::SolverDiverged {
            iterations,
            residual,
            tol: config.tol,
        });
    }
    Ok((x, report))
}

/// Lapse of the CMC foliation: `−ΔN + |K|² N = source`, with `source = 1` for
/// unscaled data.
pub fn solve_lapse_with_source(
    g: &SymTensorField,
    k: &SymTensorField,
    source: f64,
    initial: Option<&ScalarField>,
    config: &LapseSolverConfig,
) -> Result<(ScalarField, EllipticSolveReport)> {
    check_same_grid(g, k)?;
    let md = MetricData::new(g)?;
    let ksq = norm_sq_with(k, &md);
    let rhs = ScalarField::constant(*g.grid(), source);
    let (n, report) = solve_elliptic(g, &ksq, &rhs, initial, config, None)?;
    if let Some((index, &value)) = n.values().iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(BrError::NonPositiveLapse { index, value });
    }
    Ok((n, report))
}

pub fn solve_lapse(
    g: &SymTensorField,
    k: &SymTensorField,
    config: &LapseSolverConfig,
) -> Result<(ScalarField, EllipticSolveReport)> {
    solve_lapse_with_source(g, k, 1.0, None, config)
}

/// Signed distances to the two maximum-principle bounds; both are nonnegative
/// for an exact solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LapseMargins {
    /// `min N − source/‖K‖²_∞`
    pub lower: f64,
    /// `3 source/H² − max N`
    pub upper: f64,
    /// Absolute tolerance the margins were judged against.
    pub tol: f64,
}

impl LapseMargins {
    pub fn holds(&self) -> bool {
        self.lower >= -self.tol && self.upper >= -self.tol
    }
}

/// `max(solver_tol, C h⁴)` in units of the natural lapse scale `3 source/H²`.
pub fn bound_tolerance(grid_spacing: f64, solver_tol: f64, lapse_scale: f64) -> f64 {
    solver_tol.max(BOUND_H4_CONSTANT * grid_spacing.powi(4)) * lapse_scale
}

/// Margins without judging them. `H²` is the smallest pointwise squared trace,
/// which keeps the upper bound valid when the slice is only approximately CMC.
pub fn lapse_margins(
    n: &ScalarField,
    k: &SymTensorField,
    g: &SymTensorField,
    source: f64,
    solver_tol: f64,
) -> Result<LapseMargins> {
    check_same_grid(n, g)?;
    check_same_grid(k, g)?;
    let md = MetricData::new(g)?;
    let ksq = norm_sq_with(k, &md);
    let ksq_sup = ksq.values().iter().cloned().fold(0.0_f64, f64::max);
    let h_sq = k
        .values()
        .iter()
        .zip(md.inverse.values())
        .map(|(kv, gi)| kv.trace_with(gi).powi(2))
        .fold(f64::INFINITY, f64::min);
    let n_min = n.values().iter().cloned().fold(f64::INFINITY, f64::min);
    let n_max = n.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let upper_bound = 3.0 * source / h_sq;
    Ok(LapseMargins {
        lower: n_min - source / ksq_sup,
        upper: upper_bound - n_max,
        tol: bound_tolerance(g.grid().min_spacing(), solver_tol, upper_bound),
    })
}

pub fn check_lapse_bounds(n: &ScalarField, k: &SymTensorField, g: &SymTensorField) -> Result<LapseMargins> {
    check_lapse_bounds_with(n, k, g, 1.0, LapseSolverConfig::default().tol)
}

pub fn check_lapse_bounds_with(
    n: &ScalarField,
    k: &SymTensorField,
    g: &SymTensorField,
    source: f64,
    solver_tol: f64,
) -> Result<LapseMargins> {
    let m = lapse_margins(n, k, g, source, solver_tol)?;
    if m.lower < -m.tol {
        return Err(BrError::BoundViolation { which: "lower", margin: m.lower, tol: m.tol });
    }
    if m.upper < -m.tol {
        return Err(BrError::BoundViolation { which: "upper", margin: m.upper, tol: m.tol });
    }
    Ok(m)
}
