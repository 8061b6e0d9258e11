//! Slice curvature, electric and magnetic Weyl parts, Bel-Robinson components,
//! vacuum constraints and the static vacuum residual.

use crate::error::{BrError, Result};
use crate::grid::{
    check_same_grid, gradient_components, partial_derivative, MetricData, MetricNorm, ScalarField, SymTensorField,
    VectorField,
};
use crate::point::{Sym3, Vec3};
use crate::tensor::{
    christoffels_with, cross_with, curl_with, divergence_with, norm_sq_with, square_with, trace_with, wedge_with,
    Connection, Orientation,
};

/// Electric and magnetic parts of the Weyl tensor relative to the slice normal.
#[derive(Debug, Clone)]
pub struct WeylParts {
    pub e: SymTensorField,
    pub b: SymTensorField,
}

/// The Bel-Robinson tensor contracted with the normal: `Q_TTTT`, `Q_aTTT`, `Q_abTT`.
#[derive(Debug, Clone)]
pub struct BrComponents {
    pub q_tttt: ScalarField,
    pub q_attt: VectorField,
    pub q_abtt: SymTensorField,
}

pub fn ricci(g: &SymTensorField, gamma: &Connection) -> Result<SymTensorField> {
    check_same_grid(g, gamma)?;
    MetricData::new(g)?;
    Ok(ricci_from_connection(gamma))
}

/// `Ric_ab = ∂_c Γ^c_ab − ∂_a Γ^c_cb + Γ^c_cd Γ^d_ab − Γ^c_ad Γ^d_cb`, symmetrized.
pub fn ricci_from_connection(gamma: &Connection) -> SymTensorField {
    let dgamma = gradient_components(gamma);
    gamma.map_indexed(|p, gm| {
        let d = [dgamma[0].at(p), dgamma[1].at(p), dgamma[2].at(p)];
        let contracted = Vec3::from_fn(|dd| (0..3).map(|c| gm.get(c, c, dd)).sum());
        let mut m = [[0.0; 3]; 3];
        for (a, row) in m.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                let mut s = 0.0;
                for c in 0..3 {
                    s += d[c].get(c, a, b) - d[a].get(c, c, b);
                    s += contracted[c] * gm.get(c, a, b);
                    for dd in 0..3 {
                        s -= gm.get(c, a, dd) * gm.get(dd, c, b);
                    }
                }
                *v = s;
            }
        }
        Sym3::symmetrize(&m)
    })
}

pub fn scalar_curvature(g: &SymTensorField, gamma: &Connection) -> Result<ScalarField> {
    let ric = ricci(g, gamma)?;
    let md = MetricData::new(g)?;
    Ok(trace_with(&ric, &md))
}

/// `E_ab = Ric_ab + H K_ab − K_ac K^c_b` with `H = tr_g K`.
pub fn electric_weyl(g: &SymTensorField, k: &SymTensorField, gamma: &Connection) -> Result<SymTensorField> {
    check_same_grid(g, k)?;
    check_same_grid(g, gamma)?;
    let md = MetricData::new(g)?;
    let ric = ricci_from_connection(gamma);
    Ok(electric_weyl_with(&ric, k, &md))
}

pub fn electric_weyl_with(ric: &SymTensorField, k: &SymTensorField, md: &MetricData) -> SymTensorField {
    let h = trace_with(k, md);
    let kk = square_with(k, md);
    ric.map_indexed(|p, r| r + k.at(p) * h.at(p) - kk.at(p))
}

/// `B_ab = −curl K_ab`
pub fn magnetic_weyl(k: &SymTensorField, g: &SymTensorField, gamma: &Connection) -> Result<SymTensorField> {
    magnetic_weyl_oriented(k, g, gamma, Orientation::default())
}

pub fn magnetic_weyl_oriented(
    k: &SymTensorField,
    g: &SymTensorField,
    gamma: &Connection,
    orientation: Orientation,
) -> Result<SymTensorField> {
    check_same_grid(g, k)?;
    check_same_grid(g, gamma)?;
    let md = MetricData::new(g)?;
    Ok(curl_with(k, gamma, &md, orientation).scale(-1.0))
}

/// Both Weyl parts from slice data, building the connection internally.
pub fn weyl_parts(g: &SymTensorField, k: &SymTensorField) -> Result<WeylParts> {
    check_same_grid(g, k)?;
    let md = MetricData::new(g)?;
    let gamma = christoffels_with(g, &md);
    Ok(weyl_parts_with(k, &gamma, &md))
}

pub fn weyl_parts_with(k: &SymTensorField, gamma: &Connection, md: &MetricData) -> WeylParts {
    let ric = ricci_from_connection(gamma);
    WeylParts {
        e: electric_weyl_with(&ric, k, md),
        b: curl_with(k, gamma, md, Orientation::default()).scale(-1.0),
    }
}

pub fn br_components(e: &SymTensorField, b: &SymTensorField, g: &SymTensorField) -> Result<BrComponents> {
    check_same_grid(e, g)?;
    check_same_grid(b, g)?;
    let md = MetricData::new(g)?;
    Ok(br_components_with(e, b, g, &md))
}

/// `Q_TTTT = |E|² + |B|²`, `Q_aTTT = 2 (E ∧ B)_a`,
/// `Q_abTT = −(E × E)_ab − (B × B)_ab + (|E|² + |B|²) g_ab / 3`.
pub fn br_components_with(e: &SymTensorField, b: &SymTensorField, g: &SymTensorField, md: &MetricData) -> BrComponents {
    let q_tttt = norm_sq_with(e, md).add(&norm_sq_with(b, md));
    let q_attt = wedge_with(e, b, md, Orientation::default()).scale(2.0);
    let exe = cross_with(e, e, g, md);
    let bxb = cross_with(b, b, g, md);
    let q_abtt = exe.map_indexed(|p, x| g.at(p) * (q_tttt.at(p) / 3.0) - x - bxb.at(p));
    BrComponents { q_tttt, q_attt, q_abtt }
}

/// `R + H² − |K|²`
pub fn hamiltonian_constraint(g: &SymTensorField, k: &SymTensorField, gamma: &Connection) -> Result<ScalarField> {
    check_same_grid(g, k)?;
    check_same_grid(g, gamma)?;
    let md = MetricData::new(g)?;
    let ric = ricci_from_connection(gamma);
    Ok(hamiltonian_with(&ric, k, &md))
}

pub fn hamiltonian_with(ric: &SymTensorField, k: &SymTensorField, md: &MetricData) -> ScalarField {
    let r = trace_with(ric, md);
    let h = trace_with(k, md);
    let ksq = norm_sq_with(k, md);
    r.map_indexed(|p, rv| rv + h.at(p) * h.at(p) - ksq.at(p))
}

/// `(div K)_a − ∂_a H`
pub fn momentum_constraint(g: &SymTensorField, k: &SymTensorField, gamma: &Connection) -> Result<VectorField> {
    check_same_grid(g, k)?;
    check_same_grid(g, gamma)?;
    let md = MetricData::new(g)?;
    Ok(momentum_with(k, gamma, &md))
}

pub fn momentum_with(k: &SymTensorField, gamma: &Connection, md: &MetricData) -> VectorField {
    let div = divergence_with(k, gamma, md);
    let h = trace_with(k, md);
    let dh = gradient_components(&h);
    div.map_indexed(|p, v| v - Vec3::from_fn(|a| dh[a].at(p)))
}

/// Root-mean-square constraint violation over the grid.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConstraintNorms {
    pub hamiltonian: f64,
    /// RMS of the pointwise g-norm of the momentum constraint.
    pub momentum: f64,
}

pub fn constraint_norms(g: &SymTensorField, k: &SymTensorField) -> Result<ConstraintNorms> {
    check_same_grid(g, k)?;
    let md = MetricData::new(g)?;
    let gamma = christoffels_with(g, &md);
    Ok(constraint_norms_with(k, &gamma, &md))
}

pub fn constraint_norms_with(k: &SymTensorField, gamma: &Connection, md: &MetricData) -> ConstraintNorms {
    let ric = ricci_from_connection(gamma);
    let ham = hamiltonian_with(&ric, k, md);
    let mom = momentum_with(k, gamma, md);
    let mom_sq: f64 = mom
        .values()
        .iter()
        .zip(md.inverse.values())
        .map(|(v, gi)| v.norm_sq_with(gi))
        .sum();
    ConstraintNorms {
        hamiltonian: ham.rms(),
        momentum: (mom_sq / mom.values().len() as f64).sqrt(),
    }
}

/// Covector `∂_a N`.
pub fn gradient(n: &ScalarField) -> VectorField {
    let d = gradient_components(n);
    n.map_indexed(|p, _| Vec3::from_fn(|a| d[a].at(p)))
}

/// `∇_a ∇_b N = ∂_a ∂_b N − Γ^c_ab ∂_c N`
pub fn hessian(n: &ScalarField, gamma: &Connection) -> SymTensorField {
    let d = gradient_components(n);
    let dd: [[ScalarField; 3]; 3] = std::array::from_fn(|a| std::array::from_fn(|b| {
        if b >= a {
            partial_derivative(&d[b], a)
        } else {
            ScalarField::zeros(*n.grid())
        }
    }));
    n.map_indexed(|p, _| {
        let gm = gamma.at(p);
        Sym3::from_fn(|a, b| {
            let mut v = dd[a.min(b)][a.max(b)].at(p);
            for c in 0..3 {
                v -= gm.get(c, a, b) * d[c].at(p);
            }
            v
        })
    })
}

/// `(ΔN, ∇²N − N Ric)`; both vanish exactly for static vacuum data.
pub fn static_residual(
    g: &SymTensorField,
    n: &ScalarField,
    gamma: &Connection,
) -> Result<(ScalarField, SymTensorField)> {
    check_same_grid(g, n)?;
    check_same_grid(g, gamma)?;
    if let Some((index, &value)) = n.values().iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(BrError::NonPositiveLapse { index, value });
    }
    let md = MetricData::new(g)?;
    let hess = hessian(n, gamma);
    let lap = trace_with(&hess, &md);
    let ric = ricci_from_connection(gamma);
    let tensor = hess.map_indexed(|p, h| h - ric.at(p) * n.at(p));
    Ok((lap, tensor))
}
