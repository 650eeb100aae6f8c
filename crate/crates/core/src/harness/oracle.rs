//! Brute-force reference solvers: a dense Newton method on the Galerkin
//! system and a Newton method on a rational periodic chain.

use std::f64::consts::TAU;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::fourier::FourierSeries;
use crate::index_space::IndexSet;
use crate::short_range::ShortRangeModel;

/// Largest dense system the oracle will assemble.
pub const MAX_UNKNOWNS: usize = 4001;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("{unknowns} unknowns exceed the dense oracle limit of {limit}")]
    TooLarge { unknowns: usize, limit: usize },
    #[error("grid of {grid} points per frequency cannot resolve the index set (needs > {needed})")]
    GridTooCoarse { grid: usize, needed: usize },
    #[error("Newton diverged at iteration {iteration} (residual {residual:.3e})")]
    Divergence { iteration: usize, residual: f64 },
    #[error("Newton not converged after {0} iterations")]
    NotConverged(usize),
    #[error("singular Jacobian at iteration {0}")]
    Singular(usize),
    #[error("p/q = {p}/{q} is not in lowest terms")]
    Fraction { p: i64, q: usize },
}

#[derive(Clone, Debug)]
pub struct DenseSolution {
    pub h: FourierSeries,
    pub lambda: f64,
    pub iterations: usize,
    /// Sup norm of the Galerkin residual at exit.
    pub residual: f64,
}

/// Uniform grid on `T^N` with `m` points per side and its separable DFT.
struct Grid {
    n: usize,
    m: usize,
    points: usize,
}

impl Grid {
    fn new(n: usize, m: usize) -> Self {
        Self { n, m, points: m.pow(n as u32) }
    }

    fn sigma(&self, mut idx: usize) -> Vec<f64> {
        let mut s = vec![0.0; self.n];
        for v in s.iter_mut() {
            *v = TAU * (idx % self.m) as f64 / self.m as f64;
            idx /= self.m;
        }
        s
    }

    /// `c_k = m^{-N} sum_x g(x) e^{-i k.x}` for every `k mod m`, axis by axis.
    fn dft(&self, values: &[f64]) -> Vec<Complex64> {
        let m = self.m;
        let tw: Vec<Complex64> = (0..m).map(|j| Complex64::from_polar(1.0 / m as f64, -TAU * j as f64 / m as f64)).collect();
        let mut data: Vec<Complex64> = values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        let mut stride = 1;
        for _ in 0..self.n {
            let mut next = vec![Complex64::new(0.0, 0.0); self.points];
            for base in 0..self.points {
                if (base / stride) % m != 0 {
                    continue;
                }
                for k in 0..m {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for x in 0..m {
                        acc += data[base + x * stride] * tw[(k * x) % m];
                    }
                    next[base + k * stride] = acc;
                }
            }
            data = next;
            stride *= m;
        }
        data
    }

    fn slot(&self, k: &[i32]) -> usize {
        let m = self.m as i64;
        let mut idx = 0usize;
        let mut stride = 1usize;
        for &v in k {
            idx += (v as i64).rem_euclid(m) as usize * stride;
            stride *= self.m;
        }
        idx
    }
}

/// Newton on `E_k[h, lambda] = 0` (`k` in the set) with `<h> = 0`.
///
/// Composition is evaluated pointwise on a grid and projected back by a
/// direct DFT; the Jacobian `J_{k,m} = d_k delta_{km} + g_{k-m}` uses
/// `g = (d_alpha U)(sigma + alpha h)` on the same grid.
pub fn oracle_dense_newton(model: &ShortRangeModel, set: &Arc<IndexSet>, grid: usize, tol: f64) -> Result<DenseSolution, OracleError> {
    let b = &model.basis;
    let n = set.n();
    let half = set.half_positions();
    let unknowns = 2 * half.len() + 1;
    if unknowns > MAX_UNKNOWNS {
        return Err(OracleError::TooLarge {
            unknowns,
            limit: MAX_UNKNOWNS,
        });
    }
    let needed = 4 * set.per_dim_bounds().into_iter().max().unwrap_or(0) as usize;
    if grid <= needed {
        return Err(OracleError::GridTooCoarse { grid, needed });
    }
    let g = Grid::new(n, grid);
    if g.points.saturating_mul(grid) > 400_000_000 {
        return Err(OracleError::TooLarge {
            unknowns: g.points,
            limit: 400_000_000 / grid,
        });
    }
    let theta = b.rotation();
    let dk: Vec<f64> = set.members().iter().map(|k| 2.0 * k.dot(&theta).cos() - 2.0).collect();
    let u_shell = &model.shell_u;
    let du_shell = u_shell.derive_alpha(&b.alpha);
    let sigmas: Vec<Vec<f64>> = (0..g.points).map(|i| g.sigma(i)).collect();
    let dense_k: Vec<Vec<i32>> = set.members().iter().map(|k| (1..=n).map(|j| k.get(j)).collect()).collect();

    let mut h = FourierSeries::zeros(set);
    let mut lambda = 0.0;
    let mut last = f64::INFINITY;
    let mut rises = 0;
    for iteration in 0..60 {
        // pointwise composition
        let mut uvals = Vec::with_capacity(g.points);
        let mut dvals = Vec::with_capacity(g.points);
        for s in &sigmas {
            let hv = h.evaluate(s).re;
            let p: Vec<f64> = s.iter().zip(&b.alpha).map(|(x, a)| x + a * hv).collect();
            uvals.push(u_shell.evaluate(&p).re);
            dvals.push(du_shell.evaluate(&p).re);
        }
        let uhat = g.dft(&uvals);
        let ghat = g.dft(&dvals);
        let e: Vec<Complex64> = (0..set.len())
            .map(|i| {
                let z = if set.member(i).is_zero() { lambda } else { 0.0 };
                dk[i] * h.coeffs()[i] + uhat[g.slot(&dense_k[i])] + z
            })
            .collect();
        let res = e.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if !res.is_finite() {
            return Err(OracleError::Divergence { iteration, residual: res });
        }
        if res <= tol {
            return Ok(DenseSolution {
                h,
                lambda,
                iterations: iteration,
                residual: res,
            });
        }
        if res > last {
            rises += 1;
            if rises >= 3 {
                return Err(OracleError::Divergence { iteration, residual: res });
            }
        }
        last = res;

        // rows: zero mode, then Re/Im of each half member; columns: lambda, then Re/Im of each half member
        let jac = |ki: usize, mi: usize| -> Complex64 {
            let kd: Vec<i32> = dense_k[ki].iter().zip(&dense_k[mi]).map(|(a, c)| a - c).collect();
            let diag = if ki == mi { dk[ki] } else { 0.0 };
            ghat[g.slot(&kd)] + diag
        };
        let rows: Vec<usize> = std::iter::once(set.zero_position()).chain(half.iter().copied()).collect();
        let mut a = DMatrix::<f64>::zeros(unknowns, unknowns);
        let mut rhs = DVector::<f64>::zeros(unknowns);
        let put_row = |r: usize, ki: usize, take_im: bool, a: &mut DMatrix<f64>| {
            let part = |z: Complex64| if take_im { z.im } else { z.re };
            a[(r, 0)] = if set.member(ki).is_zero() && !take_im { 1.0 } else { 0.0 };
            for (c, &mi) in half.iter().enumerate() {
                let jp = jac(ki, mi);
                let jm = jac(ki, set.neg_position(mi));
                a[(r, 1 + 2 * c)] = part(jp + jm);
                a[(r, 2 + 2 * c)] = part(Complex64::new(0.0, 1.0) * (jp - jm));
            }
        };
        for (ri, &ki) in rows.iter().enumerate() {
            if ri == 0 {
                put_row(0, ki, false, &mut a);
                rhs[0] = -e[ki].re;
            } else {
                put_row(2 * ri - 1, ki, false, &mut a);
                put_row(2 * ri, ki, true, &mut a);
                rhs[2 * ri - 1] = -e[ki].re;
                rhs[2 * ri] = -e[ki].im;
            }
        }
        let step = a.lu().solve(&rhs).ok_or(OracleError::Singular(iteration))?;
        lambda += step[0];
        for (c, &mi) in half.iter().enumerate() {
            let z = Complex64::new(step[1 + 2 * c], step[2 + 2 * c]);
            h.coeffs_mut()[mi] += z;
            let neg = set.neg_position(mi);
            h.coeffs_mut()[neg] += z.conj();
        }
    }
    Err(OracleError::NotConverged(60))
}

#[derive(Clone, Debug)]
pub struct ChainSolution {
    /// `u_0 .. u_{q-1}`; `u_{n+q} = u_n + 2 pi p`.
    pub u: Vec<f64>,
    pub lambda: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Periodic equilibrium `u_{n+1} + u_{n-1} - 2 u_n + F(u_n) + lambda = 0`
/// with `u_{n+q} = u_n + 2 pi p` and `(1/q) sum_n (u_n - 2 pi p n / q) = 0`.
///
/// `force` returns `(F(u), F'(u))`; `seed` defaults to the flat orbit.
pub fn oracle_finite_chain(
    force: impl Fn(f64) -> (f64, f64),
    p: i64,
    q: usize,
    tol: f64,
    seed: Option<&[f64]>,
) -> Result<ChainSolution, OracleError> {
    if q == 0 || super::config::gcd(p.unsigned_abs(), q as u64) != 1 {
        return Err(OracleError::Fraction { p, q });
    }
    let shift = TAU * p as f64;
    let flat = |n: usize| shift * n as f64 / q as f64;
    // deviations v_n = u_n - theta_n are q-periodic and O(1), which keeps
    // the residual free of cancellation against |u_n| ~ 2 pi p
    let mut v: Vec<f64> = match seed {
        Some(s) if s.len() == q => s.iter().enumerate().map(|(n, u)| u - flat(n)).collect(),
        _ => vec![0.0; q],
    };
    let mut lambda = 0.0;
    let mut last = f64::INFINITY;
    let mut rises = 0;
    for iteration in 0..60 {
        let mut f = DVector::<f64>::zeros(q + 1);
        let mut jac = DMatrix::<f64>::zeros(q + 1, q + 1);
        for n in 0..q {
            let (fv, dv) = force(flat(n) + v[n]);
            f[n] = v[(n + 1) % q] + v[(n + q - 1) % q] - 2.0 * v[n] + fv + lambda;
            jac[(n, (n + 1) % q)] += 1.0;
            jac[(n, (n + q - 1) % q)] += 1.0;
            jac[(n, n)] += dv - 2.0;
            jac[(n, q)] = 1.0;
        }
        f[q] = v.iter().sum::<f64>() / q as f64;
        for n in 0..q {
            jac[(q, n)] = 1.0 / q as f64;
        }
        let res = f.amax();
        if !res.is_finite() {
            return Err(OracleError::Divergence { iteration, residual: res });
        }
        if res <= tol {
            return Ok(ChainSolution {
                u: v.iter().enumerate().map(|(n, x)| flat(n) + x).collect(),
                lambda,
                iterations: iteration,
                residual: res,
            });
        }
        if res > last {
            rises += 1;
            if rises >= 3 {
                return Err(OracleError::Divergence { iteration, residual: res });
            }
        }
        last = res;
        let step = jac.lu().solve(&(-f)).ok_or(OracleError::Singular(iteration))?;
        for n in 0..q {
            v[n] += step[n];
        }
        lambda += step[q];
    }
    Err(OracleError::NotConverged(60))
}

/// `max_n |u_n - theta_n - h(theta_n alpha)|` with `theta_n = 2 pi p n / q`.
pub fn chain_vs_hull(chain: &ChainSolution, h: &FourierSeries, alpha: &[f64], p: i64) -> f64 {
    let q = chain.u.len();
    (0..q)
        .map(|n| {
            let theta = TAU * p as f64 * n as f64 / q as f64;
            let sigma: Vec<f64> = alpha.iter().map(|a| a * theta).collect();
            (chain.u[n] - theta - h.evaluate(&sigma).re).abs()
        })
        .fold(0.0, f64::max)
}
