//! Metric-relative algebra and calculus of symmetric 3-tensors: wedge, cross,
//! curl, divergence, trace splitting and norms.
//!
//! The alternating tensor is `eps_abc = orientation * sqrt(det g) * [abc]`,
//! where `[abc]` is the permutation symbol of the coordinate frame. The default
//! orientation is right-handed. Flipping it reverses the sign of `wedge` and
//! `curl`; `cross` contains two alternating tensors and is unaffected.

use crate::error::Result;
use crate::grid::{check_same_grid, gradient_components, Field, MetricData, ScalarField, SymTensorField, VectorField};
use crate::point::{cyclic, mat_mul, Christoffel, Mat3, Sym3, Vec3};

/// Christoffel symbols `Γ^a_{bc}` of the Levi-Civita connection at every point.
pub type Connection = Field<Christoffel>;

/// Handedness of the coordinate frame used to build the alternating tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    #[default]
    RightHanded,
    LeftHanded,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::RightHanded => 1.0,
            Orientation::LeftHanded => -1.0,
        }
    }
}

/// `A^{ab} = g^{ac} A_cd g^{db}`
#[inline]
pub fn raise_both(a: &Sym3, ginv: &Sym3) -> Sym3 {
    let m = mat_mul(&mat_mul(&ginv.to_mat(), &a.to_mat()), &ginv.to_mat());
    Sym3::from_fn(|i, j| m[i][j])
}

/// `g^{-1} M g^{-1}` for a general (non-symmetric) matrix.
#[inline]
fn raise_mat(m: &Mat3, ginv: &Sym3) -> Mat3 {
    let gi = ginv.to_mat();
    mat_mul(&mat_mul(&gi, m), &gi)
}

/// `(A ∧ B)_a = eps_a^{bc} A_b^d B_dc` at one point.
pub fn wedge_point(a: &Sym3, b: &Sym3, ginv: &Sym3, sqrt_det: f64, orientation: Orientation) -> Vec3 {
    let gi = ginv.to_mat();
    let p = mat_mul(&mat_mul(&mat_mul(&mat_mul(&gi, &a.to_mat()), &gi), &b.to_mat()), &gi);
    let w = orientation.sign() * sqrt_det;
    Vec3::from_fn(|i| {
        let (j, k) = cyclic(i);
        w * (p[j][k] - p[k][j])
    })
}

/// `(A × B)_ab = eps_a^{cd} eps_b^{ef} A_ce B_df + (A·B) g_ab / 3 − tr A tr B g_ab / 3` at one point.
pub fn cross_point(a: &Sym3, b: &Sym3, g: &Sym3, ginv: &Sym3, det: f64) -> Sym3 {
    let au = raise_both(a, ginv);
    let bu = raise_both(b, ginv);
    let dot = au.contract_flat(b);
    let tr_a = a.trace_with(ginv);
    let tr_b = b.trace_with(ginv);
    let iso = (dot - tr_a * tr_b) / 3.0;
    Sym3::from_fn(|i, j| {
        let (c1, d1) = cyclic(i);
        let (e1, f1) = cyclic(j);
        // [i c d][j e f] A^{ce} B^{df} over the two orderings of each pair
        let main = au.get(c1, e1) * bu.get(d1, f1) - au.get(c1, f1) * bu.get(d1, e1)
            - au.get(d1, e1) * bu.get(c1, f1)
            + au.get(d1, f1) * bu.get(c1, e1);
        det * main + iso * g.get(i, j)
    })
}

pub fn christoffels(g: &SymTensorField) -> Result<Connection> {
    let md = MetricData::new(g)?;
    Ok(christoffels_with(g, &md))
}

pub fn christoffels_with(g: &SymTensorField, md: &MetricData) -> Connection {
    let dg = gradient_components(g);
    Field::from_raw(
        *g.grid(),
        (0..g.grid().len())
            .map(|p| {
                let d = [dg[0].at(p), dg[1].at(p), dg[2].at(p)];
                let ginv = md.inverse.at(p);
                // Γ_{d b c} with the first index lowered
                let lower: [Sym3; 3] = std::array::from_fn(|dd| {
                    Sym3::from_fn(|b, c| 0.5 * (d[b].get(dd, c) + d[c].get(dd, b) - d[dd].get(b, c)))
                });
                Christoffel(std::array::from_fn(|a| {
                    lower[0] * ginv.get(a, 0) + lower[1] * ginv.get(a, 1) + lower[2] * ginv.get(a, 2)
                }))
            })
            .collect(),
    )
}

/// `∇_t A_sb` for each direction `t`, as a full (non-symmetric in `t`) set of
/// three symmetric fields indexed by `t`.
pub fn covariant_derivative(a: &SymTensorField, gamma: &Connection) -> [SymTensorField; 3] {
    let da = gradient_components(a);
    std::array::from_fn(|t| {
        da[t].map_indexed(|p, d| {
            let av = a.at(p);
            let gm = gamma.at(p);
            Sym3::from_fn(|s, b| {
                let mut v = d.get(s, b);
                for u in 0..3 {
                    v -= gm.get(u, t, s) * av.get(u, b) + gm.get(u, t, b) * av.get(s, u);
                }
                v
            })
        })
    })
}

pub fn wedge(a: &SymTensorField, b: &SymTensorField, g: &SymTensorField) -> Result<VectorField> {
    wedge_oriented(a, b, g, Orientation::default())
}

pub fn wedge_oriented(
    a: &SymTensorField,
    b: &SymTensorField,
    g: &SymTensorField,
    orientation: Orientation,
) -> Result<VectorField> {
    check_same_grid(a, g)?;
    check_same_grid(b, g)?;
    let md = MetricData::new(g)?;
    Ok(wedge_with(a, b, &md, orientation))
}

pub fn wedge_with(a: &SymTensorField, b: &SymTensorField, md: &MetricData, orientation: Orientation) -> VectorField {
    a.map_indexed(|p, av| wedge_point(&av, &b.at(p), &md.inverse.at(p), md.sqrt_det.at(p), orientation))
}

pub fn cross(a: &SymTensorField, b: &SymTensorField, g: &SymTensorField) -> Result<SymTensorField> {
    check_same_grid(a, g)?;
    check_same_grid(b, g)?;
    let md = MetricData::new(g)?;
    Ok(cross_with(a, b, g, &md))
}

pub fn cross_with(a: &SymTensorField, b: &SymTensorField, g: &SymTensorField, md: &MetricData) -> SymTensorField {
    a.map_indexed(|p, av| {
        let sd = md.sqrt_det.at(p);
        cross_point(&av, &b.at(p), &g.at(p), &md.inverse.at(p), sd * sd)
    })
}

pub fn curl(a: &SymTensorField, g: &SymTensorField, gamma: &Connection) -> Result<SymTensorField> {
    curl_oriented(a, g, gamma, Orientation::default())
}

pub fn curl_oriented(
    a: &SymTensorField,
    g: &SymTensorField,
    gamma: &Connection,
    orientation: Orientation,
) -> Result<SymTensorField> {
    check_same_grid(a, g)?;
    check_same_grid(gamma, g)?;
    let md = MetricData::new(g)?;
    Ok(curl_with(a, gamma, &md, orientation))
}

/// `curl A_ab = (eps_a^{st} ∇_t A_sb + eps_b^{st} ∇_t A_sa) / 2`
pub fn curl_with(a: &SymTensorField, gamma: &Connection, md: &MetricData, orientation: Orientation) -> SymTensorField {
    let nabla = covariant_derivative(a, gamma);
    a.map_indexed(|p, _| {
        let ginv = md.inverse.at(p);
        let w = orientation.sign() * md.sqrt_det.at(p);
        let n = [nabla[0].at(p), nabla[1].at(p), nabla[2].at(p)];
        // half[a][b] = eps_a^{st} ∇_t A_sb
        let mut half = [[0.0; 3]; 3];
        for b in 0..3 {
            // T_st = ∇_t A_sb for fixed b
            let t_mat: Mat3 = std::array::from_fn(|s| std::array::from_fn(|t| n[t].get(s, b)));
            let up = raise_mat(&t_mat, &ginv);
            for (ai, half_row) in half.iter_mut().enumerate() {
                let (s, t) = cyclic(ai);
                half_row[b] = w * (up[s][t] - up[t][s]);
            }
        }
        Sym3::symmetrize(&half)
    })
}

/// `(div A)_b = g^{ac} ∇_a A_cb`
pub fn divergence(a: &SymTensorField, g: &SymTensorField, gamma: &Connection) -> Result<VectorField> {
    check_same_grid(a, g)?;
    check_same_grid(gamma, g)?;
    let md = MetricData::new(g)?;
    Ok(divergence_with(a, gamma, &md))
}

pub fn divergence_with(a: &SymTensorField, gamma: &Connection, md: &MetricData) -> VectorField {
    let nabla = covariant_derivative(a, gamma);
    a.map_indexed(|p, _| {
        let ginv = md.inverse.at(p);
        Vec3::from_fn(|b| {
            let mut s = 0.0;
            for (ai, na) in nabla.iter().enumerate() {
                let nav = na.at(p);
                for c in 0..3 {
                    s += ginv.get(ai, c) * nav.get(c, b);
                }
            }
            s
        })
    })
}

pub fn trace(a: &SymTensorField, g: &SymTensorField) -> Result<ScalarField> {
    check_same_grid(a, g)?;
    let md = MetricData::new(g)?;
    Ok(trace_with(a, &md))
}

pub fn trace_with(a: &SymTensorField, md: &MetricData) -> ScalarField {
    a.zip_map(&md.inverse, |av, gi| av.trace_with(&gi))
}

/// `A − (tr A / 3) g`
pub fn traceless(a: &SymTensorField, g: &SymTensorField) -> Result<SymTensorField> {
    check_same_grid(a, g)?;
    let md = MetricData::new(g)?;
    Ok(traceless_with(a, g, &md))
}

pub fn traceless_with(a: &SymTensorField, g: &SymTensorField, md: &MetricData) -> SymTensorField {
    a.map_indexed(|p, av| av - g.at(p) * (av.trace_with(&md.inverse.at(p)) / 3.0))
}

/// `|A|^2 = g^{ac} g^{bd} A_ab A_cd`
pub fn norm_sq(a: &SymTensorField, g: &SymTensorField) -> Result<ScalarField> {
    check_same_grid(a, g)?;
    let md = MetricData::new(g)?;
    Ok(norm_sq_with(a, &md))
}

pub fn norm_sq_with(a: &SymTensorField, md: &MetricData) -> ScalarField {
    a.zip_map(&md.inverse, |av, gi| raise_both(&av, &gi).contract_flat(&av))
}

/// `(A · B) = A_ab B^{ab}`
pub fn inner_with(a: &SymTensorField, b: &SymTensorField, md: &MetricData) -> ScalarField {
    a.map_indexed(|p, av| raise_both(&av, &md.inverse.at(p)).contract_flat(&b.at(p)))
}

/// `(A : A)_ab = A_ac A^c_b`
pub fn square_with(a: &SymTensorField, md: &MetricData) -> SymTensorField {
    a.map_indexed(|p, av| {
        let m = mat_mul(&mat_mul(&av.to_mat(), &md.inverse.at(p).to_mat()), &av.to_mat());
        Sym3::symmetrize(&m)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn grid() -> GridSpec {
        GridSpec::unit(8).unwrap()
    }

    #[test]
    fn flat_metric_has_zero_connection() {
        let g = SymTensorField::constant(grid(), Sym3::IDENTITY);
        let gamma = christoffels(&g).unwrap();
        assert_eq!(gamma.max_abs_component(), 0.0);
    }

    #[test]
    fn wedge_of_tensor_with_itself_vanishes() {
        let g = SymTensorField::constant(grid(), Sym3([1.3, 0.2, -0.1, 0.9, 0.05, 1.1]));
        let a = SymTensorField::constant(grid(), Sym3([0.4, -1.2, 0.7, 2.0, 0.3, -0.5]));
        assert!(wedge(&a, &a, &g).unwrap().max_abs_component() < 1e-14);
    }

    #[test]
    fn wedge_of_commuting_diagonals_vanishes() {
        let g = SymTensorField::constant(grid(), Sym3::diag(2.0, 0.5, 3.0));
        let a = SymTensorField::constant(grid(), Sym3::diag(1.0, 2.0, 3.0));
        let b = SymTensorField::constant(grid(), Sym3::diag(-4.0, 0.5, 7.0));
        assert!(wedge(&a, &b, &g).unwrap().max_abs_component() < 1e-15);
    }

    #[test]
    fn cross_with_zero_is_zero() {
        let g = SymTensorField::constant(grid(), Sym3([1.3, 0.2, -0.1, 0.9, 0.05, 1.1]));
        let b = SymTensorField::constant(grid(), Sym3([0.4, -1.2, 0.7, 2.0, 0.3, -0.5]));
        let z = SymTensorField::zeros(grid());
        assert_eq!(cross(&z, &b, &g).unwrap().max_abs_component(), 0.0);
    }

    #[test]
    fn orientation_flips_wedge_and_curl_only() {
        let g = SymTensorField::constant(grid(), Sym3::IDENTITY);
        let a = SymTensorField::constant(grid(), Sym3([0.4, -1.2, 0.7, 2.0, 0.3, -0.5]));
        let b = SymTensorField::constant(grid(), Sym3([1.0, 0.1, 0.2, -0.3, 0.9, 0.4]));
        let r = wedge_oriented(&a, &b, &g, Orientation::RightHanded).unwrap();
        let l = wedge_oriented(&a, &b, &g, Orientation::LeftHanded).unwrap();
        assert!(r.add(&l).max_abs_component() < 1e-15);
        assert!(r.max_abs_component() > 0.1);
    }

    #[test]
    fn trace_split() {
        let gm = Sym3([1.3, 0.2, -0.1, 0.9, 0.05, 1.1]);
        let g = SymTensorField::constant(grid(), gm);
        let tr = trace(&g, &g).unwrap();
        assert!(tr.values().iter().all(|v| (v - 3.0).abs() < 1e-14));
        let cg = g.scale(2.5);
        assert!(traceless(&cg, &g).unwrap().max_abs_component() < 1e-14);
        let h = -1.2;
        let k = g.scale(h / 3.0);
        let n = norm_sq(&k, &g).unwrap();
        assert!(n.values().iter().all(|v| (v - h * h / 3.0).abs() < 1e-14));
    }

    #[test]
    fn curl_and_divergence_of_metric_multiple_vanish() {
        let grid = GridSpec::unit(12).unwrap();
        let g = SymTensorField::from_fn(grid, |x| {
            let s = (2.0 * std::f64::consts::PI * x[0]).sin();
            let c = (2.0 * std::f64::consts::PI * x[2]).cos();
            Sym3([1.0 + 0.2 * s, 0.1 * c, 0.0, 1.0, 0.05 * s, 1.0 + 0.1 * c])
        });
        let gamma = christoffels(&g).unwrap();
        let a = g.scale(-0.4);
        // ∇g = 0 holds only to discretization accuracy on a curved grid metric.
        assert!(curl(&a, &g, &gamma).unwrap().max_abs_component() < 1e-3);
        assert!(divergence(&a, &g, &gamma).unwrap().max_abs_component() < 1e-3);
        let flat = SymTensorField::constant(grid, Sym3::IDENTITY);
        let fg = christoffels(&flat).unwrap();
        assert_eq!(curl(&flat.scale(3.0), &flat, &fg).unwrap().max_abs_component(), 0.0);
    }
}
