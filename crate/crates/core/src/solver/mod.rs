//! Poisson deconvolution factorization `W ~ U A U^T + U H^T + H U^T`.
//!
//! The fit alternates, per outer iteration:
//!
//! 1. responsibilities and the multiplicative `A` update;
//! 2. fresh responsibilities, the multiplicative `U` update and L1 column
//!    renormalization with `a_k <- s_k^2 a_k`;
//! 3. one projected-gradient decorrelation step on `U`;
//! 4. the ADMM block for `H` followed by projection onto `||H||_F = 1`.
//!
//! Every block is accepted only if the full penalized objective does not
//! increase. A rejected `U` step is retried with geometric damping
//! `U^(1-t) U_new^t`, a rejected decorrelation step halves the step size for
//! the rest of the fit, and a rejected `H` is blended towards the current one
//! before re-projection. The recorded objective is therefore nonincreasing.

pub mod admm;
pub mod objective;
pub mod updates;

use ndarray::{Array1, Array2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::CooccurrenceGraph;

pub use admm::{project_unit_frobenius, run_admm, soft_threshold, AdmmOutcome, AdmmSettings, AdmmState, HSubproblem};
pub use objective::{
    decorrelation, kl_surrogate, kl_term, linear_sum, objective_parts, responsibilities, theta, ObjectiveParts,
    Responsibilities,
};
pub use updates::{decorrelation_step, multiplicative_u, renormalize, update_a, update_u};

const MAX_DAMPING: usize = 8;

/// Fitted factors. `u` and `h` are `V x K`, `a` holds the diagonal of `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    pub u: Array2<f64>,
    pub a: Array1<f64>,
    pub h: Array2<f64>,
    /// Set when the residual collapsed to zero and could not be scaled to unit norm.
    pub h_zero: bool,
}

impl FactorModel {
    pub fn new(u: Array2<f64>, a: Array1<f64>, h: Array2<f64>) -> Self {
        assert_eq!(u.dim(), h.dim(), "U and H must have the same shape");
        assert_eq!(u.ncols(), a.len(), "A must have one entry per topic");
        let h_zero = h.iter().all(|&x| x == 0.0);
        FactorModel { u, a, h, h_zero }
    }

    /// `U` from `uniform(0.1, 1)` with unit L1 columns, `A = 1`, and a
    /// positive random `H` scaled to unit Frobenius norm.
    pub fn random<R: Rng>(v: usize, k: usize, rng: &mut R) -> Self {
        let mut u = Array2::from_shape_fn((v, k), |_| rng.gen_range(0.1..1.0));
        for mut col in u.axis_iter_mut(Axis(1)) {
            let s = col.sum();
            col.mapv_inplace(|x| x / s);
        }
        let h = Array2::from_shape_fn((v, k), |_| rng.gen_range(0.1..1.0));
        let (h, _) = project_unit_frobenius(&h);
        FactorModel {
            u,
            a: Array1::ones(k),
            h,
            h_zero: false,
        }
    }

    pub fn k(&self) -> usize {
        self.a.len()
    }

    pub fn num_words(&self) -> usize {
        self.u.nrows()
    }

    /// Indices of the `m` largest entries of column `topic` of `U`,
    /// ties broken towards the smaller word index.
    pub fn top_words(&self, topic: usize, m: usize) -> Vec<usize> {
        top_indices(self.u.column(topic).iter().copied(), m)
    }

    fn is_finite(&self) -> bool {
        self.u.iter().chain(self.a.iter()).chain(self.h.iter()).all(|x| x.is_finite())
    }
}

pub(crate) fn top_indices(values: impl Iterator<Item = f64>, m: usize) -> Vec<usize> {
    let mut idx: Vec<(usize, f64)> = values.enumerate().collect();
    idx.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    idx.into_iter().take(m).map(|(i, _)| i).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub k: usize,
    /// L1 weight on `H`; `None` means `0.1 * mean(W_ij over stored edges)`.
    pub lambda_h: Option<f64>,
    pub gamma: f64,
    pub rho: f64,
    pub eps: f64,
    pub max_outer: usize,
    pub max_admm: usize,
    pub admm_tol: f64,
    pub tol: f64,
    pub decorrelation_step: f64,
    pub seed: u64,
    pub restarts: usize,
    /// Keep `H` at its initial value (no ADMM block).
    pub freeze_h: bool,
    /// Reset `Z = H, Gamma = 0` at every outer iteration instead of warm-starting.
    pub cold_admm: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            k: 10,
            lambda_h: None,
            gamma: 0.1,
            rho: 1.0,
            eps: 1e-10,
            max_outer: 300,
            max_admm: 30,
            admm_tol: 1e-7,
            tol: 1e-6,
            decorrelation_step: 1e-3,
            seed: 0,
            restarts: 1,
            freeze_h: false,
            cold_admm: false,
        }
    }
}

impl SolverConfig {
    pub fn with_k(k: usize) -> Self {
        SolverConfig {
            k,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if let Some(l) = self.lambda_h {
            if !(l >= 0.0 && l.is_finite()) {
                return bad(format!("lambda-h must be nonnegative, got {l}"));
            }
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be nonnegative, got {}", self.gamma));
        }
        for (name, v) in [
            ("rho", self.rho),
            ("eps", self.eps),
            ("admm-tol", self.admm_tol),
            ("decorrelation-step", self.decorrelation_step),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_outer == 0 || self.restarts == 0 {
            return bad("max-outer and restarts must be at least 1".into());
        }
        Ok(())
    }

    /// The L1 weight actually used on `graph`.
    pub fn resolved_lambda(&self, graph: &CooccurrenceGraph) -> f64 {
        self.lambda_h.unwrap_or_else(|| {
            if graph.nnz() == 0 {
                0.0
            } else {
                0.1 * graph.total_weight() / graph.nnz() as f64
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub objective: f64,
    pub kl: f64,
    pub l1_h: f64,
    pub rdec: f64,
    pub admm_residual: f64,
}

/// Objective history; record 0 is the initial point.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FitTrace {
    pub records: Vec<TraceRecord>,
    pub converged: bool,
    pub seed: u64,
    pub lambda_h: f64,
}

impl FitTrace {
    pub fn final_objective(&self) -> f64 {
        self.records.last().map_or(f64::INFINITY, |r| r.objective)
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }

    /// `iteration,objective,kl,l1_h,rdec,admm_residual` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,objective,kl,l1_h,rdec,admm_residual\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.iteration, r.objective, r.kl, r.l1_h, r.rdec, r.admm_residual
            ));
        }
        out
    }
}

/// Fits `cfg.restarts` models with seeds `seed, seed + 1, ...` and keeps the
/// one with the lowest final objective (first one on ties).
pub fn fit(graph: &CooccurrenceGraph, cfg: &SolverConfig) -> Result<(FactorModel, FitTrace)> {
    cfg.validate()?;
    if graph.nnz() == 0 {
        return Err(Error::Data("cannot factorize an all-zero graph".into()));
    }
    if cfg.k > graph.num_words() {
        return Err(Error::Config(format!(
            "k = {} exceeds the vocabulary size {}",
            cfg.k,
            graph.num_words()
        )));
    }
    let mut best: Option<(FactorModel, FitTrace)> = None;
    for r in 0..cfg.restarts {
        let seed = cfg.seed.wrapping_add(r as u64);
        let (model, trace) = fit_single(graph, cfg, seed)?;
        let better = best
            .as_ref()
            .is_none_or(|(_, t)| trace.final_objective() < t.final_objective());
        if better {
            best = Some((model, trace));
        }
    }
    Ok(best.expect("restarts >= 1"))
}

fn fit_single(graph: &CooccurrenceGraph, cfg: &SolverConfig, seed: u64) -> Result<(FactorModel, FitTrace)> {
    let lambda = cfg.resolved_lambda(graph);
    let eps = cfg.eps;
    let eval = |m: &FactorModel| objective_parts(graph, m, lambda, cfg.gamma, eps);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = FactorModel::random(graph.num_words(), cfg.k, &mut rng);
    let mut state = AdmmState::new(&model.h);
    let mut step = cfg.decorrelation_step;
    let mut cur = eval(&model);
    let mut trace = FitTrace {
        records: Vec::new(),
        converged: false,
        seed,
        lambda_h: lambda,
    };
    check_finite(&model, &cur, 0, "initialization")?;
    trace.records.push(record(0, &cur, 0.0));

    for iteration in 1..=cfg.max_outer {
        let prev = cur.total;

        let resp = responsibilities(graph, &model, eps);
        let cand = FactorModel {
            a: update_a(graph, &model, &resp),
            ..model.clone()
        };
        let parts = eval(&cand);
        if parts.total <= cur.total {
            model = cand;
            cur = parts;
        }

        let resp = responsibilities(graph, &model, eps);
        let target = multiplicative_u(graph, &model, &resp);
        let mut t = 1.0f64;
        for _ in 0..MAX_DAMPING {
            let mut u = if t == 1.0 {
                target.clone()
            } else {
                Zip::from(&model.u)
                    .and(&target)
                    .map_collect(|&old, &new| old.powf(1.0 - t) * new.powf(t))
            };
            let mut a = model.a.clone();
            renormalize(&mut u, &mut a, &mut rng);
            let cand = FactorModel {
                u,
                a,
                ..model.clone()
            };
            let parts = eval(&cand);
            if parts.total <= cur.total {
                model = cand;
                cur = parts;
                break;
            }
            t *= 0.5;
        }

        if cfg.gamma > 0.0 {
            for _ in 0..MAX_DAMPING {
                let mut u = decorrelation_step(&model.u, step, cfg.gamma);
                let mut a = model.a.clone();
                renormalize(&mut u, &mut a, &mut rng);
                let cand = FactorModel {
                    u,
                    a,
                    ..model.clone()
                };
                let parts = eval(&cand);
                if parts.total <= cur.total {
                    model = cand;
                    cur = parts;
                    break;
                }
                step *= 0.5;
            }
        }

        let mut residual = 0.0;
        if !cfg.freeze_h {
            if cfg.cold_admm {
                state = AdmmState::new(&model.h);
            }
            let problem = HSubproblem::new(graph, &model.u, &model.a, eps);
            let outcome = run_admm(
                &problem,
                &model.h,
                &mut state,
                AdmmSettings {
                    lambda,
                    rho: cfg.rho,
                    max_iter: cfg.max_admm,
                    tol: cfg.admm_tol,
                },
            )?;
            residual = outcome.primal_residual;
            let (projected, _) = project_unit_frobenius(&outcome.h);
            let mut t = 1.0f64;
            for _ in 0..MAX_DAMPING {
                let (h, h_zero) = if t == 1.0 {
                    project_unit_frobenius(&projected)
                } else {
                    project_unit_frobenius(&(&model.h * (1.0 - t) + &projected * t))
                };
                let cand = FactorModel {
                    h,
                    h_zero,
                    ..model.clone()
                };
                let parts = eval(&cand);
                if parts.total <= cur.total {
                    model = cand;
                    cur = parts;
                    break;
                }
                t *= 0.5;
            }
        }

        check_finite(&model, &cur, iteration, "outer iteration")?;
        trace.records.push(record(iteration, &cur, residual));

        let rel = (prev - cur.total) / prev.abs().max(f64::MIN_POSITIVE);
        if rel < cfg.tol {
            trace.converged = true;
            break;
        }
    }
    Ok((model, trace))
}

fn record(iteration: usize, parts: &ObjectiveParts, admm_residual: f64) -> TraceRecord {
    TraceRecord {
        iteration,
        objective: parts.total,
        kl: parts.kl,
        l1_h: parts.l1_h,
        rdec: parts.rdec,
        admm_residual,
    }
}

fn check_finite(model: &FactorModel, parts: &ObjectiveParts, iteration: usize, stage: &str) -> Result<()> {
    if model.is_finite() && parts.total.is_finite() {
        return Ok(());
    }
    Err(Error::Numerical(format!(
        "{stage} {iteration}: objective {} (kl {}, l1_h {}, rdec {}), a = {:?}, max|U| = {}, max|H| = {}",
        parts.total,
        parts.kl,
        parts.l1_h,
        parts.rdec,
        model.a.to_vec(),
        model.u.iter().fold(0.0f64, |m, x| m.max(x.abs())),
        model.h.iter().fold(0.0f64, |m, x| m.max(x.abs())),
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_graph() -> CooccurrenceGraph {
        CooccurrenceGraph::from_dense_upper(6, |i, j| if (i < 3) == (j < 3) { 1.0 } else { 0.0 }).unwrap()
    }

    #[test]
    fn k_larger_than_vocab_is_config_error() {
        let err = fit(&small_graph(), &SolverConfig::with_k(7)).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn empty_graph_is_data_error() {
        let g = CooccurrenceGraph::from_dense_upper(4, |_, _| 0.0).unwrap();
        assert_eq!(fit(&g, &SolverConfig::with_k(2)).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn infinite_tol_stops_after_one_iteration() {
        let cfg = SolverConfig {
            tol: f64::INFINITY,
            ..SolverConfig::with_k(2)
        };
        let (model, trace) = fit(&small_graph(), &cfg).unwrap();
        assert_eq!(trace.records.len(), 2);
        assert!(trace.converged);
        for col in model.u.axis_iter(Axis(1)) {
            assert!((col.sum() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn same_seed_same_trace() {
        let cfg = SolverConfig {
            max_outer: 20,
            seed: 11,
            ..SolverConfig::with_k(2)
        };
        let (m1, t1) = fit(&small_graph(), &cfg).unwrap();
        let (m2, t2) = fit(&small_graph(), &cfg).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(m1, m2);
    }

    #[test]
    fn top_words_tie_break() {
        let m = FactorModel::new(
            ndarray::array![[0.25], [0.5], [0.25]],
            ndarray::array![1.0],
            Array2::zeros((3, 1)),
        );
        assert_eq!(m.top_words(0, 3), vec![1, 0, 2]);
    }
}
