//! Random inputs and brute-force reference implementations shared by the
//! integration tests. Nothing here calls the library's tensor algebra.
#![allow(dead_code)]

use std::f64::consts::TAU;

use brlab::grid::{partial_derivative, Field, GridSpec, ScalarField, SymTensorField};
use brlab::point::Sym3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type M3 = [[f64; 3]; 3];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn to_m3(s: &Sym3) -> M3 {
    std::array::from_fn(|i| std::array::from_fn(|j| s.get(i, j)))
}

pub fn random_sym3(rng: &mut ChaCha8Rng) -> Sym3 {
    Sym3::from_fn(|_, _| rng.gen_range(-1.0..1.0))
}

/// `MᵀM + 0.2 I` for a random `M`; comfortably positive definite.
pub fn random_pd_sym3(rng: &mut ChaCha8Rng) -> Sym3 {
    let m: M3 = std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)));
    Sym3::from_fn(|i, j| (0..3).map(|k| m[k][i] * m[k][j]).sum::<f64>() + if i == j { 0.2 } else { 0.0 })
}

pub fn permutation_sign(a: usize, b: usize, c: usize) -> f64 {
    if a == b || b == c || a == c {
        return 0.0;
    }
    let mut p = [a, b, c];
    let mut sign = 1.0;
    for i in 0..3 {
        for j in 0..2 - i {
            if p[j] > p[j + 1] {
                p.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    sign
}

pub fn det(m: &M3) -> f64 {
    let mut s = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                s += permutation_sign(a, b, c) * m[0][a] * m[1][b] * m[2][c];
            }
        }
    }
    s
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub fn inverse(m: &M3) -> M3 {
    let mut a = *m;
    let mut inv: M3 = std::array::from_fn(|i| std::array::from_fn(|j| if i == j { 1.0 } else { 0.0 }));
    for col in 0..3 {
        let piv = (col..3).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col];
        for j in 0..3 {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for row in 0..3 {
            if row != col {
                let f = a[row][col];
                for j in 0..3 {
                    a[row][j] -= f * a[col][j];
                    inv[row][j] -= f * inv[col][j];
                }
            }
        }
    }
    inv
}

/// `eps_abc = sqrt(det g) [abc]` with all indices down.
pub fn eps_lower(g: &M3) -> [[[f64; 3]; 3]; 3] {
    let s = det(g).sqrt();
    std::array::from_fn(|a| std::array::from_fn(|b| std::array::from_fn(|c| s * permutation_sign(a, b, c))))
}

/// `eps_a^{bc}`
pub fn eps_mixed(g: &M3) -> [[[f64; 3]; 3]; 3] {
    let e = eps_lower(g);
    let gi = inverse(g);
    std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            std::array::from_fn(|c| {
                let mut s = 0.0;
                for d in 0..3 {
                    for f in 0..3 {
                        s += e[a][d][f] * gi[d][b] * gi[f][c];
                    }
                }
                s
            })
        })
    })
}

/// `(A ∧ B)_a = eps_a^{bc} A_b^d B_dc`
pub fn wedge_oracle(a: &M3, b: &M3, g: &M3) -> [f64; 3] {
    let em = eps_mixed(g);
    let gi = inverse(g);
    std::array::from_fn(|i| {
        let mut s = 0.0;
        for bb in 0..3 {
            for c in 0..3 {
                for d in 0..3 {
                    for e in 0..3 {
                        // A_b^d = A_be g^ed
                        s += em[i][bb][c] * a[bb][e] * gi[e][d] * b[d][c];
                    }
                }
            }
        }
        s
    })
}

/// `(A × B)_ab = eps_a^{cd} eps_b^{ef} A_ce B_df + (A·B) g_ab/3 − trA trB g_ab/3`
pub fn cross_oracle(a: &M3, b: &M3, g: &M3) -> M3 {
    let em = eps_mixed(g);
    let gi = inverse(g);
    let mut dot = 0.0;
    let (mut tra, mut trb) = (0.0, 0.0);
    for i in 0..3 {
        for j in 0..3 {
            tra += gi[i][j] * a[i][j];
            trb += gi[i][j] * b[i][j];
            for k in 0..3 {
                for l in 0..3 {
                    dot += gi[i][k] * gi[j][l] * a[i][j] * b[k][l];
                }
            }
        }
    }
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut s = 0.0;
            for c in 0..3 {
                for d in 0..3 {
                    for e in 0..3 {
                        for f in 0..3 {
                            s += em[i][c][d] * em[j][e][f] * a[c][e] * b[d][f];
                        }
                    }
                }
            }
            s + (dot - tra * trb) * g[i][j] / 3.0
        })
    })
}

/// Smooth periodic scalar built from a few random Fourier modes, sup ≤ 1.
pub fn smooth_scalar(grid: GridSpec, rng: &mut ChaCha8Rng) -> ScalarField {
    let period = grid.period();
    let modes: Vec<([f64; 3], f64, f64)> = (0..3)
        .map(|_| {
            let k: [f64; 3] = std::array::from_fn(|a| rng.gen_range(-2i32..=2) as f64 * TAU / period[a]);
            (k, rng.gen_range(-1.0..1.0) / 3.0, rng.gen_range(0.0..TAU))
        })
        .collect();
    Field::from_fn(grid, |x| {
        modes.iter().map(|(k, c, ph)| c * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2] + ph).cos()).sum()
    })
}

pub fn smooth_sym_field(grid: GridSpec, rng: &mut ChaCha8Rng) -> SymTensorField {
    let comps: Vec<ScalarField> = (0..6).map(|_| smooth_scalar(grid, rng)).collect();
    Field::from_fn(grid, |_| Sym3::ZERO).map_indexed(|p, _| {
        let mut s = Sym3::ZERO;
        for (c, f) in comps.iter().enumerate() {
            s.0[c] = f.at(p);
        }
        s
    })
}

/// Random positive-definite constant metric plus a smooth periodic bump small
/// enough to keep it positive definite.
pub fn random_metric_field(grid: GridSpec, rng: &mut ChaCha8Rng) -> SymTensorField {
    let base = random_pd_sym3(rng);
    let m = to_m3(&base);
    let gi = inverse(&m);
    // Smallest eigenvalue is at least 1/‖g⁻¹‖_F.
    let lam_min = 1.0 / gi.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    let bump = smooth_sym_field(grid, rng);
    let amp = 0.15 * lam_min;
    bump.map(|b| base + b * amp)
}

/// Brute-force `Γ^a_bc` from finite-difference derivatives of `g`.
pub fn christoffel_oracle(g: &SymTensorField) -> Vec<[[[f64; 3]; 3]; 3]> {
    let dg: Vec<SymTensorField> = (0..3).map(|a| partial_derivative(g, a)).collect();
    (0..g.grid().len())
        .map(|p| {
            let gi = inverse(&to_m3(&g.at(p)));
            let d = |c: usize, a: usize, b: usize| dg[c].at(p).get(a, b);
            std::array::from_fn(|a| {
                std::array::from_fn(|b| {
                    std::array::from_fn(|c| {
                        (0..3)
                            .map(|dd| 0.5 * gi[a][dd] * (d(b, dd, c) + d(c, dd, b) - d(dd, b, c)))
                            .sum()
                    })
                })
            })
        })
        .collect()
}

/// Brute-force `∇_t A_sb` at every point, indexed `[t][s][b]`.
pub fn covariant_derivative_oracle(a: &SymTensorField, gamma: &[[[[f64; 3]; 3]; 3]]) -> Vec<[M3; 3]> {
    let da: Vec<SymTensorField> = (0..3).map(|t| partial_derivative(a, t)).collect();
    (0..a.grid().len())
        .map(|p| {
            let av = to_m3(&a.at(p));
            let gm = &gamma[p];
            std::array::from_fn(|t| {
                std::array::from_fn(|s| {
                    std::array::from_fn(|b| {
                        let mut v = da[t].at(p).get(s, b);
                        for u in 0..3 {
                            v -= gm[u][t][s] * av[u][b] + gm[u][t][b] * av[s][u];
                        }
                        v
                    })
                })
            })
        })
        .collect()
}

/// `curl A_ab = (eps_a^{st} ∇_t A_sb + eps_b^{st} ∇_t A_sa) / 2`
pub fn curl_oracle(a: &SymTensorField, g: &SymTensorField) -> Vec<M3> {
    let gamma = christoffel_oracle(g);
    let nabla = covariant_derivative_oracle(a, &gamma);
    (0..a.grid().len())
        .map(|p| {
            let em = eps_mixed(&to_m3(&g.at(p)));
            let n = &nabla[p];
            let half = |x: usize, y: usize| {
                let mut s = 0.0;
                for st in 0..3 {
                    for t in 0..3 {
                        s += em[x][st][t] * n[t][st][y];
                    }
                }
                s
            };
            std::array::from_fn(|x| std::array::from_fn(|y| 0.5 * (half(x, y) + half(y, x))))
        })
        .collect()
}

/// `(div A)_b = g^{ac} ∇_a A_cb`
pub fn divergence_oracle(a: &SymTensorField, g: &SymTensorField) -> Vec<[f64; 3]> {
    let gamma = christoffel_oracle(g);
    let nabla = covariant_derivative_oracle(a, &gamma);
    (0..a.grid().len())
        .map(|p| {
            let gi = inverse(&to_m3(&g.at(p)));
            std::array::from_fn(|b| {
                let mut s = 0.0;
                for x in 0..3 {
                    for c in 0..3 {
                        s += gi[x][c] * nabla[p][x][c][b];
                    }
                }
                s
            })
        })
        .collect()
}

pub fn max_abs_m3(m: &M3) -> f64 {
    m.iter().flatten().fold(0.0_f64, |x, y| x.max(y.abs()))
}

/// `log2(coarse / fine)`
pub fn observed_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}
