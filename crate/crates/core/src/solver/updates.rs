//! Multiplicative MM updates for `A` and `U`, column renormalization and the
//! decorrelation step.

use log::warn;
use ndarray::{Array1, Array2, Axis};
use rand::Rng;

use super::objective::{pair_sums, Responsibilities};
use super::FactorModel;
use crate::graph::CooccurrenceGraph;

/// `a_k <- sum_e W_e P^S_ek / (sum_{i<j} u_ik u_jk + eps)`.
///
/// `P^S` already carries the factor `a_k`, so this is the multiplicative
/// rescale `a_k * [sum W u_i u_j / (Theta + eps)] / (sum u_i u_j + eps)`.
/// Zero entries stay zero.
pub fn update_a(graph: &CooccurrenceGraph, model: &FactorModel, resp: &Responsibilities) -> Array1<f64> {
    let k = model.k();
    let mut num = Array1::<f64>::zeros(k);
    for (idx, e) in graph.edges().iter().enumerate() {
        num.scaled_add(e.weight, &resp.s.row(idx));
    }
    let den = pair_sums(&model.u) + resp.eps;
    num / den
}

/// Multiplicative step for `U` before renormalization.
///
/// `u_ik <- N_ik / D_ik` where `N_ik` gathers the responsibility mass of every
/// component containing `u_ik` (low-rank and `U H^T` terms on pairs `(i, j>i)`,
/// low-rank and `H U^T` terms on pairs `(j<i, i)`), and
/// `D_ik = a_k sum_{j!=i} u_jk + sum_{j!=i} h_jk + eps`.
pub fn multiplicative_u(graph: &CooccurrenceGraph, model: &FactorModel, resp: &Responsibilities) -> Array2<f64> {
    let (v, k) = model.u.dim();
    let mut num = Array2::<f64>::zeros((v, k));
    for (idx, e) in graph.edges().iter().enumerate() {
        for c in 0..k {
            let s = e.weight * resp.s[[idx, c]];
            num[[e.i, c]] += s + e.weight * resp.l[[idx, c]];
            num[[e.j, c]] += s + e.weight * resp.r[[idx, c]];
        }
    }
    let sigma = model.u.sum_axis(Axis(0));
    let tau = model.h.sum_axis(Axis(0));
    let mut out = num;
    for ((i, c), x) in out.indexed_iter_mut() {
        let den = model.a[c] * (sigma[c] - model.u[[i, c]]) + (tau[c] - model.h[[i, c]]) + resp.eps;
        *x /= den;
    }
    out
}

/// Rescales every column of `u` to unit L1 norm and multiplies `a_k` by the
/// squared scale, leaving `U A U^T` unchanged. A column that has collapsed to
/// zero is redrawn from `uniform(0.1, 1.0)`; its index is returned.
pub fn renormalize<R: Rng>(u: &mut Array2<f64>, a: &mut Array1<f64>, rng: &mut R) -> Vec<usize> {
    let mut reset = Vec::new();
    for (c, mut col) in u.axis_iter_mut(Axis(1)).enumerate() {
        let s: f64 = col.sum();
        if s > 0.0 && s.is_finite() {
            col.mapv_inplace(|x| x / s);
            a[c] *= s * s;
        } else {
            warn!("topic column {c} collapsed to zero; reinitializing");
            col.mapv_inplace(|_| rng.gen_range(0.1..1.0));
            let s: f64 = col.sum();
            col.mapv_inplace(|x| x / s);
            reset.push(c);
        }
    }
    reset
}

/// `U (U^T U - diag(U^T U))`, the decorrelator gradient up to a constant factor.
pub fn decorrelation_direction(u: &Array2<f64>) -> Array2<f64> {
    let mut g = u.t().dot(u);
    for c in 0..g.nrows() {
        g[[c, c]] = 0.0;
    }
    u.dot(&g)
}

/// `max(0, U - step * gamma * U (U^T U - diag(U^T U)))`, not yet renormalized.
pub fn decorrelation_step(u: &Array2<f64>, step: f64, gamma: f64) -> Array2<f64> {
    let dir = decorrelation_direction(u);
    let mut out = u - &(dir * (step * gamma));
    out.mapv_inplace(|x| x.max(0.0));
    out
}

/// One unguarded `U` update: multiplicative step, renormalization with
/// compensation in `A`, then one decorrelation step and renormalization.
pub fn update_u<R: Rng>(
    graph: &CooccurrenceGraph,
    model: &FactorModel,
    resp: &Responsibilities,
    step: f64,
    gamma: f64,
    rng: &mut R,
) -> (Array2<f64>, Array1<f64>) {
    let mut u = multiplicative_u(graph, model, resp);
    let mut a = model.a.clone();
    renormalize(&mut u, &mut a, rng);
    if gamma > 0.0 {
        u = decorrelation_step(&u, step, gamma);
        renormalize(&mut u, &mut a, rng);
    }
    (u, a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::objective::responsibilities;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lowrank(u: &Array2<f64>, a: &Array1<f64>) -> Array2<f64> {
        let ua = u * a;
        ua.dot(&u.t())
    }

    #[test]
    fn renormalization_preserves_lowrank_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut u = array![[0.3, 2.0], [1.2, 0.5], [0.7, 0.1]];
        let mut a = array![0.8, 1.7];
        let before = lowrank(&u, &a);
        assert!(renormalize(&mut u, &mut a, &mut rng).is_empty());
        let after = lowrank(&u, &a);
        let diff = (&before - &after).mapv(|x| x * x).sum().sqrt();
        assert!(diff < 1e-10);
        for col in u.axis_iter(Axis(1)) {
            assert!((col.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_column_is_reinitialized() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut u = array![[0.0, 1.0], [0.0, 1.0]];
        let mut a = array![1.0, 1.0];
        assert_eq!(renormalize(&mut u, &mut a, &mut rng), vec![0]);
        assert!((u.column(0).sum() - 1.0).abs() < 1e-12);
        assert!(u.column(0).iter().all(|&x| x > 0.0));
    }

    #[test]
    fn orthogonal_support_has_no_decorrelation_push() {
        let u = array![[0.5, 0.0], [0.5, 0.0], [0.0, 1.0]];
        assert_eq!(decorrelation_step(&u, 0.1, 1.0), u);
    }

    #[test]
    fn a_update_fixed_point_on_exact_fit() {
        // every pair is an edge with W = Theta, so the rescale factor is 1 up to eps
        let u = array![[0.4, 0.1], [0.3, 0.2], [0.2, 0.3], [0.1, 0.4]];
        let a = array![2.0, 0.5];
        let h = Array2::zeros((4, 2));
        let model = FactorModel::new(u, a.clone(), h);
        let g = CooccurrenceGraph::from_dense_upper(4, |i, j| {
            crate::solver::objective::theta(model.u.view(), model.a.view(), model.h.view(), i, j)
        })
        .unwrap();
        let resp = responsibilities(&g, &model, 1e-10);
        let new_a = update_a(&g, &model, &resp);
        for c in 0..2 {
            assert!((new_a[c] - a[c]).abs() < 1e-8);
        }
    }

    #[test]
    fn a_update_keeps_zeros() {
        let u = array![[0.5], [0.5]];
        let model = FactorModel::new(u, array![0.0], Array2::zeros((2, 1)));
        let g = CooccurrenceGraph::from_dense_upper(2, |_, _| 1.0).unwrap();
        let resp = responsibilities(&g, &model, 1e-10);
        assert_eq!(update_a(&g, &model, &resp)[0], 0.0);
    }
}
