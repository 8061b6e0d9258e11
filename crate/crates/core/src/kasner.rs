//! Closed-form Kasner vacuum spacetimes on the 3-torus.
//!
//! `−dτ² + Σ τ^{2p_i} (dx^i)²` with `Σp = Σp² = 1`. In CMC time `t = H = −1/τ`
//! the lapse is `N = τ²`. Every quantity here is evaluated analytically and
//! never touches the finite-difference pipeline, so it can serve as an oracle.
//!
//! A [`CoordinateWarp`] pulls the solution back by a fixed periodic
//! diffeomorphism of the torus. The pulled-back data is still an exact vacuum
//! solution but has non-constant components, which exposes discretization error.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{BrError, Result};
use crate::point::{Mat3, Sym3};

/// Tolerance on the two Kasner sum conditions.
pub const KASNER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KasnerParams {
    p: [f64; 3],
}

impl KasnerParams {
    pub fn new(p1: f64, p2: f64, p3: f64) -> Result<Self> {
        let sum = p1 + p2 + p3;
        let sum_sq = p1 * p1 + p2 * p2 + p3 * p3;
        if !((sum - 1.0).abs() <= KASNER_TOL && (sum_sq - 1.0).abs() <= KASNER_TOL) {
            return Err(BrError::InvalidKasner { p1, p2, p3, sum, sum_sq });
        }
        Ok(KasnerParams { p: [p1, p2, p3] })
    }

    /// Flat Kasner `(1, 0, 0)`: a quotient of Minkowski space.
    pub fn flat() -> Self {
        KasnerParams { p: [1.0, 0.0, 0.0] }
    }

    /// The axisymmetric triple `(2/3, 2/3, −1/3)`.
    pub fn axisymmetric() -> Self {
        KasnerParams { p: [2.0 / 3.0, 2.0 / 3.0, -1.0 / 3.0] }
    }

    /// Standard one-parameter form `(−u, 1 + u, u(1 + u)) / (1 + u + u²)`.
    pub fn from_u(u: f64) -> Result<Self> {
        let d = 1.0 + u + u * u;
        Self::new(-u / d, (1.0 + u) / d, u * (1.0 + u) / d)
    }

    pub fn exponents(&self) -> [f64; 3] {
        self.p
    }

    pub fn is_flat(&self) -> bool {
        self.p.iter().all(|&p| p.abs() < KASNER_TOL || (p - 1.0).abs() < KASNER_TOL)
    }
}

/// Kasner proper time for CMC time `t < 0`.
pub fn proper_time(t: f64) -> f64 {
    -1.0 / t
}

/// Fixed periodic diffeomorphism `y = x + A w(x)` of a torus with the given periods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoordinateWarp {
    pub amplitude: f64,
    pub period: [f64; 3],
}

impl CoordinateWarp {
    pub fn new(amplitude: f64, period: [f64; 3]) -> Self {
        CoordinateWarp { amplitude, period }
    }

    pub fn identity(period: [f64; 3]) -> Self {
        Self::new(0.0, period)
    }

    /// Jacobian `J[i][a] = ∂y^i/∂x^a`.
    pub fn jacobian(&self, x: [f64; 3]) -> Mat3 {
        let a = self.amplitude;
        let k: [f64; 3] = std::array::from_fn(|i| 2.0 * PI / self.period[i]);
        let c0 = (k[0] * x[0]).cos();
        let c1 = (k[1] * x[1]).cos();
        let c2 = (k[2] * x[2]).cos();
        [
            [1.0 + 0.5 * a * c0, a * c1, 0.0],
            [0.0, 1.0, a * c2],
            [a * c0, 0.0, 1.0],
        ]
    }

    /// `T_ab = J^i_a J^j_b T'_ij` for a tensor diagonal in the `y` frame.
    pub fn pull_back_diagonal(&self, x: [f64; 3], diag: [f64; 3]) -> Sym3 {
        let j = self.jacobian(x);
        Sym3::from_fn(|a, b| (0..3).map(|i| j[i][a] * j[i][b] * diag[i]).sum())
    }
}

/// Analytic Kasner quantities at CMC time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KasnerOracle {
    pub params: KasnerParams,
}

impl KasnerOracle {
    pub fn new(params: KasnerParams) -> Self {
        KasnerOracle { params }
    }

    pub fn metric_diag(&self, t: f64) -> [f64; 3] {
        let tau = proper_time(t);
        self.params.p.map(|p| tau.powf(2.0 * p))
    }

    /// `K = −½ ∂_τ g`
    pub fn extrinsic_diag(&self, t: f64) -> [f64; 3] {
        let tau = proper_time(t);
        self.params.p.map(|p| -p * tau.powf(2.0 * p - 1.0))
    }

    pub fn lapse(&self, t: f64) -> f64 {
        proper_time(t).powi(2)
    }

    /// `E_ii = R_{iτiτ} = −a_i a_i''` with `a_i = τ^{p_i}`.
    pub fn electric_diag(&self, t: f64) -> [f64; 3] {
        let tau = proper_time(t);
        self.params.p.map(|p| -(tau.powf(p)) * p * (p - 1.0) * tau.powf(p - 2.0))
    }

    /// Mixed eigenvalues `E^i_i`; these are the frame-independent values.
    pub fn electric_eigenvalues(&self, t: f64) -> [f64; 3] {
        let tau = proper_time(t);
        self.params.p.map(|p| p * (1.0 - p) / (tau * tau))
    }

    /// `Σ (p_i − p_i²)²`, the τ-independent factor of `|E|² τ⁴`.
    pub fn energy_coefficient(&self) -> f64 {
        self.params.p.iter().map(|p| (p - p * p).powi(2)).sum()
    }

    /// Pointwise `|E|² + |B|²` (`B = 0` for Kasner).
    pub fn energy_density(&self, t: f64) -> f64 {
        self.energy_coefficient() / proper_time(t).powi(4)
    }

    /// `sqrt(det g) = τ^{Σp} = τ` in the unwarped frame.
    pub fn volume_density(&self, t: f64) -> f64 {
        proper_time(t).powf(self.params.p.iter().sum())
    }

    /// Slice Bel-Robinson energy on a torus of coordinate volume `volume`
    /// (measured in the unwarped frame; a warp homotopic to the identity has
    /// unit-degree and preserves it).
    pub fn br_energy(&self, t: f64, volume: f64) -> f64 {
        volume * self.energy_density(t) * self.volume_density(t)
    }

    /// `dE_BR/dt`. Since `E_BR ∝ τ^{-3} = (−t)³`, this is `3 E_BR / t`.
    pub fn br_energy_rate(&self, t: f64, volume: f64) -> f64 {
        3.0 * self.br_energy(t, volume) / t
    }

    /// Power of `|t|` in `E_BR(t)`: `4 − Σp = 3`.
    pub fn decay_exponent(&self) -> f64 {
        4.0 - self.params.p.iter().sum::<f64>()
    }

    /// `∫_{t_a}^{t_b} dt N E_BR-density μ = c V |t_b² − t_a²| / 2`, counted with
    /// positive orientation regardless of the direction of travel.
    pub fn spacetime_br_energy(&self, t_a: f64, t_b: f64, volume: f64) -> f64 {
        0.5 * self.energy_coefficient() * volume * (t_b * t_b - t_a * t_a).abs()
    }

    pub fn mean_curvature(&self, t: f64) -> f64 {
        -1.0 / proper_time(t)
    }

    /// `|K|² = Σ p² / τ² = 1/τ²`
    pub fn k_norm_sq(&self, t: f64) -> f64 {
        self.params.p.iter().map(|p| p * p).sum::<f64>() / proper_time(t).powi(2)
    }

    /// `(sup sqrt(|E|² + |B|²))^{-1/2}`, uncapped; infinite when flat.
    pub fn curvature_radius(&self, t: f64) -> f64 {
        let density = self.energy_density(t).sqrt();
        if density == 0.0 {
            f64::INFINITY
        } else {
            density.powf(-0.5)
        }
    }

    pub fn metric(&self, t: f64, warp: &CoordinateWarp, x: [f64; 3]) -> Sym3 {
        warp.pull_back_diagonal(x, self.metric_diag(t))
    }

    pub fn extrinsic(&self, t: f64, warp: &CoordinateWarp, x: [f64; 3]) -> Sym3 {
        warp.pull_back_diagonal(x, self.extrinsic_diag(t))
    }

    pub fn electric(&self, t: f64, warp: &CoordinateWarp, x: [f64; 3]) -> Sym3 {
        warp.pull_back_diagonal(x, self.electric_diag(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_sum_conditions() {
        assert!(KasnerParams::new(1.0, 0.0, 0.0).is_ok());
        assert!(KasnerParams::new(2.0 / 3.0, 2.0 / 3.0, -1.0 / 3.0).is_ok());
        assert!(matches!(
            KasnerParams::new(0.7, 0.7, -0.4),
            Err(BrError::InvalidKasner { .. })
        ));
        let p = KasnerParams::from_u(2.0).unwrap().exponents();
        assert!((p[0] + 2.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn axisymmetric_at_unit_time() {
        let o = KasnerOracle::new(KasnerParams::axisymmetric());
        let g = o.metric_diag(-1.0);
        let k = o.extrinsic_diag(-1.0);
        assert_eq!(g, [1.0, 1.0, 1.0]);
        assert!((k[0] + 2.0 / 3.0).abs() < 1e-15 && (k[2] - 1.0 / 3.0).abs() < 1e-15);
        assert!((k.iter().sum::<f64>() + 1.0).abs() < 1e-15);
        assert_eq!(o.lapse(-1.0), 1.0);
        assert!((o.energy_coefficient() - 8.0 / 27.0).abs() < 1e-15);
    }

    #[test]
    fn electric_part_is_traceless_and_matches_gauss_formula() {
        for params in [KasnerParams::axisymmetric(), KasnerParams::from_u(0.37).unwrap()] {
            let o = KasnerOracle::new(params);
            let t = -0.6;
            let e = o.electric_diag(t);
            let g = o.metric_diag(t);
            let k = o.extrinsic_diag(t);
            let h: f64 = (0..3).map(|i| k[i] / g[i]).sum();
            assert!((h - t).abs() < 1e-14);
            let tr: f64 = (0..3).map(|i| e[i] / g[i]).sum();
            assert!(tr.abs() < 1e-14);
            for i in 0..3 {
                let gauss = h * k[i] - k[i] * k[i] / g[i];
                assert!((e[i] - gauss).abs() < 1e-13 * e[i].abs().max(1.0));
            }
        }
    }

    #[test]
    fn flat_kasner_is_curvature_free() {
        let o = KasnerOracle::new(KasnerParams::flat());
        assert_eq!(o.energy_coefficient(), 0.0);
        assert_eq!(o.curvature_radius(-2.0), f64::INFINITY);
    }

    #[test]
    fn warp_has_positive_jacobian() {
        let w = CoordinateWarp::new(0.2, [1.0, 2.0, 0.5]);
        for i in 0..10 {
            let x = [i as f64 * 0.1, i as f64 * 0.23, i as f64 * 0.07];
            let j = w.jacobian(x);
            let det = j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1])
                - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0])
                + j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
            assert!(det > 0.8);
        }
    }
}
