//! Scaled-form ADMM for the sparse residual loadings `H`.
//!
//! With `U` and `A` fixed the block problem is
//! `min_{H >= 0} KL(H) + lambda ||H||_1`, split as `H = Z`:
//!
//! * H-step: `argmin_{H >= 0} KL(H) + rho/2 ||H - Z + Gamma||_F^2`, solved by
//!   projected gradient with Armijo backtracking;
//! * Z-step: elementwise soft-thresholding of `H + Gamma` at `lambda / rho`;
//! * dual step: `Gamma += H - Z`.
//!
//! The caller then projects `[H]_+` onto the unit Frobenius sphere.

use ndarray::{Array1, Array2, Axis, Zip};

use super::objective::{edge_lowrank, pair_sums};
use crate::error::{Error, Result};
use crate::graph::CooccurrenceGraph;

/// Inner projected-gradient stopping rule: projected-gradient norm or step count.
pub const INNER_TOL: f64 = 1e-6;
pub const INNER_MAX_STEPS: usize = 50;

/// `sign(x) * max(|x| - tau, 0)`.
pub fn soft_threshold(x: f64, tau: f64) -> f64 {
    x.signum() * (x.abs() - tau).max(0.0)
}

fn frob(m: &Array2<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// The KL data term as a function of `H` alone.
pub struct HSubproblem<'a> {
    graph: &'a CooccurrenceGraph,
    u: &'a Array2<f64>,
    lowrank: Vec<f64>,
    lowrank_total: f64,
    sigma: Array1<f64>,
    eps: f64,
}

impl<'a> HSubproblem<'a> {
    pub fn new(graph: &'a CooccurrenceGraph, u: &'a Array2<f64>, a: &Array1<f64>, eps: f64) -> Self {
        HSubproblem {
            graph,
            u,
            lowrank: edge_lowrank(graph.edges(), u, a),
            lowrank_total: (a * &pair_sums(u)).sum(),
            sigma: u.sum_axis(Axis(0)),
            eps,
        }
    }

    fn cross(&self, h: &Array2<f64>, i: usize, j: usize) -> f64 {
        let (ui, uj, hi, hj) = (self.u.row(i), self.u.row(j), h.row(i), h.row(j));
        let mut t = 0.0;
        for k in 0..ui.len() {
            t += ui[k] * hj[k] + hi[k] * uj[k];
        }
        t
    }

    fn linear(&self, h: &Array2<f64>) -> f64 {
        let tau = h.sum_axis(Axis(0));
        self.lowrank_total + (&self.sigma * &tau).sum() - (self.u * h).sum()
    }

    /// `sum_{i<j} Theta_ij - sum_e W_e ln(Theta_e + eps)`.
    pub fn kl(&self, h: &Array2<f64>) -> f64 {
        let log_part: f64 = self
            .graph
            .edges()
            .iter()
            .zip(&self.lowrank)
            .map(|(e, lr)| e.weight * (lr + self.cross(h, e.i, e.j) + self.eps).ln())
            .sum();
        self.linear(h) - log_part
    }

    /// Value of `KL(H) + lambda ||H||_1`, the block objective ADMM minimizes.
    pub fn block_objective(&self, h: &Array2<f64>, lambda: f64) -> f64 {
        self.kl(h) + lambda * h.iter().map(|x| x.abs()).sum::<f64>()
    }

    pub fn gradient(&self, h: &Array2<f64>) -> Array2<f64> {
        let (v, k) = h.dim();
        let mut g = Array2::zeros((v, k));
        for ((i, c), x) in g.indexed_iter_mut() {
            *x = self.sigma[c] - self.u[[i, c]];
        }
        for (e, lr) in self.graph.edges().iter().zip(&self.lowrank) {
            let w = e.weight / (lr + self.cross(h, e.i, e.j) + self.eps);
            for c in 0..k {
                g[[e.i, c]] -= w * self.u[[e.j, c]];
                g[[e.j, c]] -= w * self.u[[e.i, c]];
            }
        }
        g
    }

    /// `argmin_{H >= 0} KL(H) + rho/2 ||H - target||_F^2`, warm-started at `h0`.
    pub fn solve_h_step(&self, h0: &Array2<f64>, target: &Array2<f64>, rho: f64) -> Array2<f64> {
        let f = |h: &Array2<f64>| {
            let d = h - target;
            self.kl(h) + 0.5 * rho * d.iter().map(|x| x * x).sum::<f64>()
        };
        let mut h = h0.mapv(|x| x.max(0.0));
        let mut fh = f(&h);
        let mut alpha = 1.0 / rho;
        for _ in 0..INNER_MAX_STEPS {
            let mut g = self.gradient(&h);
            g.zip_mut_with(&(&h - target), |gi, d| *gi += rho * d);
            let pg = Zip::from(&h)
                .and(&g)
                .fold(0.0, |acc, &hi, &gi| acc + (hi - (hi - gi).max(0.0)).powi(2))
                .sqrt();
            if pg <= INNER_TOL {
                break;
            }
            let mut accepted = false;
            for _ in 0..60 {
                let cand = Zip::from(&h).and(&g).map_collect(|&hi, &gi| (hi - alpha * gi).max(0.0));
                let step = &cand - &h;
                let fc = f(&cand);
                let model = fh
                    + Zip::from(&g).and(&step).fold(0.0, |acc, &gi, &si| acc + gi * si)
                    + step.iter().map(|x| x * x).sum::<f64>() / (2.0 * alpha);
                if fc.is_finite() && fc <= model {
                    h = cand;
                    fh = fc;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
            alpha *= 2.0;
        }
        h
    }
}

/// Scaled ADMM state carried across outer iterations (warm start).
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub z: Array2<f64>,
    pub dual: Array2<f64>,
}

impl AdmmState {
    /// `Z = H`, `Gamma = 0`.
    pub fn new(h: &Array2<f64>) -> Self {
        AdmmState {
            z: h.clone(),
            dual: Array2::zeros(h.dim()),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AdmmSettings {
    pub lambda: f64,
    pub rho: f64,
    pub max_iter: usize,
    /// Stop once primal and dual residuals fall below `tol * (1 + ||H||_F)`.
    pub tol: f64,
}

#[derive(Debug, Clone)]
pub struct AdmmOutcome {
    /// Nonnegative H iterate, before the unit-norm projection.
    pub h: Array2<f64>,
    pub primal_residual: f64,
    pub iterations: usize,
}

/// Runs the ADMM iterations for the `H` block.
pub fn run_admm(problem: &HSubproblem<'_>, h0: &Array2<f64>, state: &mut AdmmState, settings: AdmmSettings) -> Result<AdmmOutcome> {
    let tau = settings.lambda / settings.rho;
    let mut h = h0.clone();
    let mut primal = frob(&(&h - &state.z));
    let mut iterations = 0;
    for s in 0..settings.max_iter {
        iterations = s + 1;
        let target = &state.z - &state.dual;
        h = problem.solve_h_step(&h, &target, settings.rho);
        let z_prev = std::mem::replace(&mut state.z, (&h + &state.dual).mapv(|x| soft_threshold(x, tau)));
        state.dual += &(&h - &state.z);
        primal = frob(&(&h - &state.z));
        let dual = settings.rho * frob(&(&state.z - &z_prev));

        if !(primal.is_finite() && dual.is_finite()) || h.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical(format!(
                "ADMM iteration {s}: primal residual {primal}, dual residual {dual}, \
                 |H|_F {}, |Z|_F {}, |Gamma|_F {}",
                frob(&h),
                frob(&state.z),
                frob(&state.dual)
            )));
        }
        let scale = settings.tol * (1.0 + frob(&h));
        if primal <= scale && dual <= scale {
            break;
        }
    }
    Ok(AdmmOutcome {
        h: h.mapv(|x| x.max(0.0)),
        primal_residual: primal,
        iterations,
    })
}

/// `[H]_+ / ||[H]_+||_F`; returns the zero matrix and `true` when `[H]_+ = 0`.
pub fn project_unit_frobenius(h: &Array2<f64>) -> (Array2<f64>, bool) {
    let pos = h.mapv(|x| x.max(0.0));
    let n = frob(&pos);
    if n > 0.0 {
        (pos / n, false)
    } else {
        (pos, true)
    }
}
