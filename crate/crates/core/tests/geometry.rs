#![allow(clippy::needless_range_loop)]

mod common;

use std::f64::consts::TAU;

use brlab::geometry::{
    br_components_with, constraint_norms, magnetic_weyl, ricci, scalar_curvature, static_residual, weyl_parts,
};
use brlab::grid::{Field, GridSpec, MetricData, ScalarField, SymTensorField};
use brlab::kasner::{CoordinateWarp, KasnerOracle, KasnerParams};
use brlab::point::Sym3;
use brlab::tensor::{christoffels, cross_with, norm_sq_with, trace_with, wedge_with, Orientation};
use brlab::BrError;
use common::*;

/// `φ = 0.15 sin(2πx) + 0.1 cos(2π(y + z))` with analytic first and second derivatives.
fn phi(x: [f64; 3]) -> (f64, [f64; 3], [[f64; 3]; 3]) {
    let (sx, cx) = (TAU * x[0]).sin_cos();
    let (syz, cyz) = (TAU * (x[1] + x[2])).sin_cos();
    let v = 0.15 * sx + 0.1 * cyz;
    let d = [0.15 * TAU * cx, -0.1 * TAU * syz, -0.1 * TAU * syz];
    let t2 = TAU * TAU;
    let mut h = [[0.0; 3]; 3];
    h[0][0] = -0.15 * t2 * sx;
    for a in 1..3 {
        for b in 1..3 {
            h[a][b] = -0.1 * t2 * cyz;
        }
    }
    (v, d, h)
}

fn conformal_metric(grid: GridSpec) -> SymTensorField {
    Field::from_fn(grid, |x| Sym3::IDENTITY * (2.0 * phi(x).0).exp())
}

/// Returns (max Christoffel error, max Ricci error, max scalar curvature error).
fn conformal_errors(n: usize) -> (f64, f64, f64) {
    let grid = GridSpec::unit(n).unwrap();
    let g = conformal_metric(grid);
    let gamma = christoffels(&g).unwrap();
    let ric = ricci(&g, &gamma).unwrap();
    let r = scalar_curvature(&g, &gamma).unwrap();
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let (mut eg, mut er, mut es) = (0.0_f64, 0.0_f64, 0.0_f64);
    for p in 0..grid.len() {
        let (f, d, h) = phi(grid.coordinates(p));
        let lap = h[0][0] + h[1][1] + h[2][2];
        let grad_sq = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    let exact = delta(a, b) * d[c] + delta(a, c) * d[b] - delta(b, c) * d[a];
                    eg = eg.max((gamma.at(p).get(a, b, c) - exact).abs());
                }
                let exact = -(h[a][b] - d[a] * d[b]) - (lap + grad_sq) * delta(a, b);
                er = er.max((ric.at(p).get(a, b) - exact).abs());
            }
        }
        let exact = -(-2.0 * f).exp() * (4.0 * lap + 2.0 * grad_sq);
        es = es.max((r.at(p) - exact).abs());
    }
    (eg, er, es)
}

#[test]
fn conformally_flat_connection_and_curvature_converge_at_fourth_order() {
    let (g16, r16, s16) = conformal_errors(16);
    let (g32, r32, s32) = conformal_errors(32);
    for (name, c, f) in [("christoffel", g16, g32), ("ricci", r16, r32), ("scalar", s16, s32)] {
        let order = observed_order(c, f);
        assert!((3.7..4.4).contains(&order), "{name}: {c:e} -> {f:e}, order {order}");
    }
}

#[test]
fn hand_expanded_curl_of_shear_mode() {
    // K_xy = sin(2πz) on the flat torus: curl K = diag(f', −f', 0) with f' = 2π cos(2πz).
    let errors = |n: usize| {
        let grid = GridSpec::unit(n).unwrap();
        let g = SymTensorField::constant(grid, Sym3::IDENTITY);
        let k = Field::from_fn(grid, |x| {
            let mut s = Sym3::ZERO;
            s.0[1] = (TAU * x[2]).sin();
            s
        });
        let b = magnetic_weyl(&k, &g, &christoffels(&g).unwrap()).unwrap();
        let mut err = 0.0_f64;
        for p in 0..grid.len() {
            let fp = TAU * (TAU * grid.coordinates(p)[2]).cos();
            let exact = Sym3::diag(-fp, fp, 0.0);
            err = err.max((b.at(p) - exact).max_abs());
        }
        err
    };
    let (e16, e32) = (errors(16), errors(32));
    assert!(e16 < 2e-2, "{e16}");
    assert!(observed_order(e16, e32) > 3.8);
}

#[test]
fn bel_robinson_components_satisfy_trace_and_sign_identities() {
    let grid = GridSpec::new(10, [1.0, 0.7, 1.2]).unwrap();
    let mut r = rng(21);
    let g = random_metric_field(grid, &mut r);
    let md = MetricData::new(&g).unwrap();
    let traceless = |a: SymTensorField| {
        let tr = trace_with(&a, &md);
        a.map_indexed(|p, v| v - g.at(p) * (tr.at(p) / 3.0))
    };
    let e = traceless(smooth_sym_field(grid, &mut r));
    let b = traceless(smooth_sym_field(grid, &mut r));
    let q = br_components_with(&e, &b, &g, &md);

    let expected = norm_sq_with(&e, &md).add(&norm_sq_with(&b, &md));
    assert_eq!(q.q_tttt, expected);
    assert!(q.q_tttt.values().iter().all(|v| *v >= 0.0));
    // The Bel-Robinson tensor is traceless: g^{ab} Q_abTT = Q_TTTT.
    let tr = trace_with(&q.q_abtt, &md);
    assert!(tr.sub(&q.q_tttt).max_abs_component() < 1e-12 * q.q_tttt.max_abs_component());
    assert_eq!(q.q_attt, wedge_with(&e, &b, &md, Orientation::RightHanded).scale(2.0));
    let manual = cross_with(&e, &e, &g, &md)
        .add(&cross_with(&b, &b, &g, &md))
        .scale(-1.0)
        .map_indexed(|p, v| v + g.at(p) * (q.q_tttt.at(p) / 3.0));
    assert!(manual.sub(&q.q_abtt).max_abs_component() < 1e-13);
}

fn warped_kasner_residuals(params: KasnerParams, n: usize) -> (f64, f64, f64) {
    let grid = GridSpec::new(n, [1.0, 1.5, 0.75]).unwrap();
    let warp = CoordinateWarp::new(0.15, grid.period());
    let o = KasnerOracle::new(params);
    let t = -0.8;
    let g = Field::from_fn(grid, |x| o.metric(t, &warp, x));
    let k = Field::from_fn(grid, |x| o.extrinsic(t, &warp, x));
    let norms = constraint_norms(&g, &k).unwrap();
    let w = weyl_parts(&g, &k).unwrap();
    (norms.hamiltonian, norms.momentum, w.b.max_abs_component())
}

#[test]
fn warped_kasner_is_vacuum_up_to_fourth_order_truncation() {
    let params = KasnerParams::from_u(1.7).unwrap();
    let c = warped_kasner_residuals(params, 16);
    let f = warped_kasner_residuals(params, 32);
    for (cv, fv) in [(c.0, f.0), (c.1, f.1), (c.2, f.2)] {
        let order = observed_order(cv, fv);
        assert!((3.7..4.3).contains(&order), "{cv:e} -> {fv:e}: {order}");
    }
}

#[test]
fn kasner_electric_part_matches_oracle() {
    let grid = GridSpec::unit(8).unwrap();
    for params in [KasnerParams::axisymmetric(), KasnerParams::from_u(0.4).unwrap(), KasnerParams::flat()] {
        let o = KasnerOracle::new(params);
        let t = -1.7;
        let g = SymTensorField::constant(grid, Sym3::diag(o.metric_diag(t)[0], o.metric_diag(t)[1], o.metric_diag(t)[2]));
        let kd = o.extrinsic_diag(t);
        let k = SymTensorField::constant(grid, Sym3::diag(kd[0], kd[1], kd[2]));
        let w = weyl_parts(&g, &k).unwrap();
        let ed = o.electric_diag(t);
        let exact = Sym3::diag(ed[0], ed[1], ed[2]);
        assert!((w.e.at(0) - exact).max_abs() < 1e-14);
        assert_eq!(w.b.max_abs_component(), 0.0);
    }
}

#[test]
fn static_residual_of_flat_data_with_constant_lapse_vanishes() {
    let grid = GridSpec::new(8, [2.0, 1.0, 3.0]).unwrap();
    let g = SymTensorField::constant(grid, Sym3::diag(1.0, 2.0, 0.5));
    let n = ScalarField::constant(grid, 3.0);
    let (lap, tensor) = static_residual(&g, &n, &christoffels(&g).unwrap()).unwrap();
    assert_eq!(lap.max_abs_component(), 0.0);
    assert_eq!(tensor.max_abs_component(), 0.0);
}

#[test]
fn static_residual_laplacian_matches_conformal_formula() {
    // Δ_g N = e^{−2φ} (ΔN + ∂φ·∂N) in three dimensions.
    let errors = |n: usize| {
        let grid = GridSpec::unit(n).unwrap();
        let g = conformal_metric(grid);
        let lapse = Field::from_fn(grid, |x| 2.0 + (TAU * x[1]).sin());
        let (lap, _) = static_residual(&g, &lapse, &christoffels(&g).unwrap()).unwrap();
        let mut err = 0.0_f64;
        for p in 0..grid.len() {
            let x = grid.coordinates(p);
            let (f, d, _) = phi(x);
            let dn = TAU * (TAU * x[1]).cos();
            let ddn = -TAU * TAU * (TAU * x[1]).sin();
            let exact = (-2.0 * f).exp() * (ddn + d[1] * dn);
            err = err.max((lap.at(p) - exact).abs());
        }
        err
    };
    assert!(observed_order(errors(16), errors(32)) > 3.7);
}

#[test]
fn static_residual_rejects_nonpositive_lapse() {
    let grid = GridSpec::unit(8).unwrap();
    let g = SymTensorField::constant(grid, Sym3::IDENTITY);
    let n = ScalarField::from_fn(grid, |x| x[0] - 0.5);
    let err = static_residual(&g, &n, &christoffels(&g).unwrap()).unwrap_err();
    assert!(matches!(err, BrError::NonPositiveLapse { .. }));
}
