#![allow(dead_code)]

use influtopic::graph::CooccurrenceGraph;
use influtopic::solver::FactorModel;
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const EPS: f64 = 1e-10;

pub fn random_graph(v: usize, density: f64, rng: &mut ChaCha8Rng) -> CooccurrenceGraph {
    CooccurrenceGraph::from_dense_upper(v, |_, _| {
        if rng.gen::<f64>() < density {
            rng.gen_range(0.1..5.0)
        } else {
            0.0
        }
    })
    .unwrap()
}

pub fn random_model(v: usize, k: usize, rng: &mut ChaCha8Rng) -> FactorModel {
    let u = Array2::from_shape_fn((v, k), |_| rng.gen_range(0.05..1.0));
    let a = Array1::from_shape_fn(k, |_| rng.gen_range(0.5..4.0));
    let h = Array2::from_shape_fn((v, k), |_| rng.gen_range(0.0..0.3));
    FactorModel::new(u, a, h)
}

// plain double loops, no shared helpers
pub fn dense_theta(m: &FactorModel, i: usize, j: usize) -> f64 {
    (0..m.k())
        .map(|k| m.a[k] * m.u[[i, k]] * m.u[[j, k]] + m.u[[i, k]] * m.h[[j, k]] + m.h[[i, k]] * m.u[[j, k]])
        .sum()
}

pub fn dense_kl(g: &CooccurrenceGraph, m: &FactorModel) -> f64 {
    let mut total = 0.0;
    for i in 0..m.num_words() {
        for j in i + 1..m.num_words() {
            let t = dense_theta(m, i, j);
            total += t - g.weight(i, j) * (t + EPS).ln();
        }
    }
    total
}

pub fn dense_objective(g: &CooccurrenceGraph, m: &FactorModel, lambda: f64, gamma: f64) -> f64 {
    let mut rdec = 0.0;
    for k in 0..m.k() {
        for l in 0..m.k() {
            if k != l {
                let c: f64 = (0..m.num_words()).map(|i| m.u[[i, k]] * m.u[[i, l]]).sum();
                rdec += c * c;
            }
        }
    }
    dense_kl(g, m) + lambda * m.h.sum() + 0.5 * gamma * rdec
}

// coordinate-wise golden section on KL(H) + lambda |H|_1 over H >= 0; the
// problem is convex and smooth on the box, so cyclic exact minimization converges
pub fn oracle_h_minimum(g: &CooccurrenceGraph, u: &Array2<f64>, a: &Array1<f64>, lambda: f64) -> f64 {
    let (v, k) = u.dim();
    let f = |h: &Array2<f64>| {
        let m = FactorModel::new(u.clone(), a.clone(), h.clone());
        dense_kl(g, &m) + lambda * h.sum()
    };
    let mut h = Array2::from_elem((v, k), 0.1);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        for i in 0..v {
            for c in 0..k {
                let (mut lo, mut hi) = (0.0, 20.0);
                let eval = |x: f64, h: &mut Array2<f64>| {
                    h[[i, c]] = x;
                    f(h)
                };
                for _ in 0..80 {
                    let x1 = hi - phi * (hi - lo);
                    let x2 = lo + phi * (hi - lo);
                    if eval(x1, &mut h) <= eval(x2, &mut h) {
                        hi = x2;
                    } else {
                        lo = x1;
                    }
                }
                h[[i, c]] = 0.5 * (lo + hi);
            }
        }
    }
    f(&h)
}


pub fn cosine(x: &[f64], y: &[f64]) -> f64 {
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let n = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    dot / (n(x) * n(y))
}

/// Best average column cosine over all column matchings (K is tiny, so
/// enumerate permutations) and the matching itself: `perm[planted] = fitted`.
pub fn best_matching(fitted: &Array2<f64>, planted: &Array2<f64>) -> (Vec<usize>, Vec<f64>) {
    let k = planted.ncols();
    let sim: Vec<Vec<f64>> = (0..k)
        .map(|p| (0..k).map(|f| cosine(&planted.column(p).to_vec(), &fitted.column(f).to_vec())).collect())
        .collect();
    let mut best: (Vec<usize>, Vec<f64>, f64) = (Vec::new(), Vec::new(), f64::NEG_INFINITY);
    let mut perm: Vec<usize> = (0..k).collect();
    permute(&mut perm, 0, &mut |p| {
        let sims: Vec<f64> = p.iter().enumerate().map(|(a, &b)| sim[a][b]).collect();
        let total: f64 = sims.iter().sum();
        if total > best.2 {
            best = (p.to_vec(), sims, total);
        }
    });
    (best.0, best.1)
}

fn permute(p: &mut Vec<usize>, at: usize, visit: &mut dyn FnMut(&[usize])) {
    if at == p.len() {
        visit(p);
        return;
    }
    for i in at..p.len() {
        p.swap(at, i);
        permute(p, at + 1, visit);
        p.swap(at, i);
    }
}
