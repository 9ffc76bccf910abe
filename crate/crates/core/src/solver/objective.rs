//! Model intensity, penalized objective, responsibilities and the Jensen surrogate.
//!
//! Only stored edges are visited for the log term. The linear term
//! `sum_{i<j} Theta_ij` over the full upper triangle is evaluated from column
//! sums: `sum_k a_k (sigma_k^2 - q_k) / 2 + sigma_k tau_k - <u_k, h_k>` with
//! `sigma = 1^T U`, `q = diag(U^T U)`, `tau = 1^T H`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::FactorModel;
use crate::graph::{CooccurrenceGraph, Edge};

/// `Theta_ij = sum_k a_k u_ik u_jk + u_ik h_jk + h_ik u_jk`.
pub fn theta(u: ArrayView2<f64>, a: ArrayView1<f64>, h: ArrayView2<f64>, i: usize, j: usize) -> f64 {
    let mut t = 0.0;
    for k in 0..a.len() {
        t += a[k] * u[[i, k]] * u[[j, k]] + u[[i, k]] * h[[j, k]] + h[[i, k]] * u[[j, k]];
    }
    t
}

/// Per-edge low-rank part `sum_k a_k u_ik u_jk`.
pub(crate) fn edge_lowrank(edges: &[Edge], u: &Array2<f64>, a: &Array1<f64>) -> Vec<f64> {
    edges
        .iter()
        .map(|e| {
            let (ui, uj) = (u.row(e.i), u.row(e.j));
            (0..a.len()).map(|k| a[k] * ui[k] * uj[k]).sum()
        })
        .collect()
}

/// `sum_{i<j} u_ik u_jk` for every column.
pub fn pair_sums(u: &Array2<f64>) -> Array1<f64> {
    let sigma = u.sum_axis(Axis(0));
    let q = u.mapv(|x| x * x).sum_axis(Axis(0));
    (&sigma * &sigma - &q) / 2.0
}

/// Closed-form `sum_{i<j} Theta_ij`.
pub fn linear_sum(u: &Array2<f64>, a: &Array1<f64>, h: &Array2<f64>) -> f64 {
    let sigma = u.sum_axis(Axis(0));
    let tau = h.sum_axis(Axis(0));
    let diag = (u * h).sum_axis(Axis(0));
    let lowrank: f64 = (a * &pair_sums(u)).sum();
    lowrank + (&sigma * &tau).sum() - diag.sum()
}

/// Off-diagonal decorrelator `||U^T U - diag(U^T U)||_F^2`.
pub fn decorrelation(u: &Array2<f64>) -> f64 {
    let g = u.t().dot(u);
    let mut r = 0.0;
    for ((k, l), v) in g.indexed_iter() {
        if k != l {
            r += v * v;
        }
    }
    r
}

/// Generalized-KL data term on the upper triangle.
pub fn kl_term(graph: &CooccurrenceGraph, model: &FactorModel, eps: f64) -> f64 {
    let (u, a, h) = (model.u.view(), model.a.view(), model.h.view());
    let log_part: f64 = graph
        .edges()
        .iter()
        .map(|e| e.weight * (theta(u, a, h, e.i, e.j) + eps).ln())
        .sum();
    linear_sum(&model.u, &model.a, &model.h) - log_part
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveParts {
    pub kl: f64,
    pub l1_h: f64,
    pub rdec: f64,
    pub total: f64,
}

/// `KL + lambda_h ||H||_1 + gamma / 2 R_dec(U)`.
pub fn objective_parts(graph: &CooccurrenceGraph, model: &FactorModel, lambda_h: f64, gamma: f64, eps: f64) -> ObjectiveParts {
    let kl = kl_term(graph, model, eps);
    let l1_h = model.h.iter().map(|x| x.abs()).sum();
    let rdec = decorrelation(&model.u);
    ObjectiveParts {
        kl,
        l1_h,
        rdec,
        total: kl + lambda_h * l1_h + 0.5 * gamma * rdec,
    }
}

/// Per-edge, per-topic shares of `Theta + eps` attributed to the low-rank
/// term (`s`), the `U H^T` term (`l`) and the `H U^T` term (`r`).
/// Rows follow `graph.edges()`.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    pub s: Array2<f64>,
    pub l: Array2<f64>,
    pub r: Array2<f64>,
    /// `Theta_ij` at the expansion point.
    pub theta: Vec<f64>,
    pub eps: f64,
}

impl Responsibilities {
    pub fn row_sum(&self, e: usize) -> f64 {
        self.s.row(e).sum() + self.l.row(e).sum() + self.r.row(e).sum()
    }
}

pub fn responsibilities(graph: &CooccurrenceGraph, model: &FactorModel, eps: f64) -> Responsibilities {
    let edges = graph.edges();
    let k = model.k();
    let mut s = Array2::zeros((edges.len(), k));
    let mut l = Array2::zeros((edges.len(), k));
    let mut r = Array2::zeros((edges.len(), k));
    let mut thetas = Vec::with_capacity(edges.len());
    let (u, a, h) = (&model.u, &model.a, &model.h);
    for (idx, e) in edges.iter().enumerate() {
        let t = theta(u.view(), a.view(), h.view(), e.i, e.j);
        let denom = t + eps;
        for c in 0..k {
            s[[idx, c]] = a[c] * u[[e.i, c]] * u[[e.j, c]] / denom;
            l[[idx, c]] = u[[e.i, c]] * h[[e.j, c]] / denom;
            r[[idx, c]] = h[[e.i, c]] * u[[e.j, c]] / denom;
        }
        thetas.push(t);
    }
    Responsibilities {
        s,
        l,
        r,
        theta: thetas,
        eps,
    }
}

fn xlogx_over(p: f64, x: f64) -> f64 {
    // p * ln(x / p), with 0 * ln(.) = 0
    if p == 0.0 {
        0.0
    } else if x <= 0.0 {
        f64::NEG_INFINITY
    } else {
        p * (x / p).ln()
    }
}

/// Jensen majorizer of [`kl_term`] built at the point where `resp` was
/// computed, evaluated at `model`.
///
/// Each edge's `ln(Theta' + eps)` is bounded below by
/// `sum_c P_c ln(x'_c / P_c) + P_eps ln(eps / P_eps)`, where the `x'_c` are the
/// `3K` component products of `model` and `P_eps = eps / (Theta + eps)` is
/// the share held by the stability constant. Equality holds at the expansion point.
pub fn kl_surrogate(graph: &CooccurrenceGraph, resp: &Responsibilities, model: &FactorModel) -> f64 {
    let (u, a, h) = (&model.u, &model.a, &model.h);
    let eps = resp.eps;
    let mut log_bound = 0.0;
    for (idx, e) in graph.edges().iter().enumerate() {
        let mut acc = 0.0;
        for c in 0..model.k() {
            acc += xlogx_over(resp.s[[idx, c]], a[c] * u[[e.i, c]] * u[[e.j, c]]);
            acc += xlogx_over(resp.l[[idx, c]], u[[e.i, c]] * h[[e.j, c]]);
            acc += xlogx_over(resp.r[[idx, c]], h[[e.i, c]] * u[[e.j, c]]);
        }
        let p_eps = eps / (resp.theta[idx] + eps);
        acc += xlogx_over(p_eps, eps);
        log_bound += e.weight * acc;
    }
    linear_sum(u, a, h) - log_bound
}
