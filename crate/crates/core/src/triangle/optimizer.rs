//! Heuristic search for triangle-local models close to a target.
//!
//! `P(a)` is multilinear in the six parameter blocks `p1, p2, p3, q1, q2,
//! q3`: every term holds exactly one entry of each. Fixing five blocks
//! leaves `P = Σ_k θ_k G_k` linear in the sixth, so the best update of one
//! block is a small LP (distance) or a per-row argmax (linear witness).
//!
//! Each restart runs exponentiated-gradient steps on the squared error to
//! get into a good basin, then polishes with exact block updates until the
//! improvement drops below the tolerance. Results are heuristic upper
//! bounds on the true distance to the triangle-local set.

use rayon::prelude::*;
use serde::Serialize;

use crate::correlations::{l1_distance, Behavior, LinearWitness};
use crate::devices::{random_triangle_model, triangle_exact_distribution, TriangleLocalModel, PARENTS};
use crate::lp::{solve, LpOutcome, StandardForm};
use crate::rng::stream_rng;

#[derive(Debug, Clone)]
pub enum Objective {
    /// Minimize worst-case-input ℓ1 distance to the target.
    Distance(Behavior),
    /// Maximize the witness value.
    Witness(LinearWitness),
}

impl Objective {
    fn outputs(&self) -> usize {
        match self {
            Objective::Distance(b) => b.alphabet().outputs,
            Objective::Witness(w) => w.alphabet().outputs,
        }
    }

    /// Raw objective value of `p`.
    pub fn value(&self, p: &Behavior) -> f64 {
        match self {
            Objective::Distance(t) => l1_distance(p, t).expect("alphabets checked"),
            Objective::Witness(w) => p.as_slice().iter().zip(w.coeffs()).map(|(a, b)| a * b).sum(),
        }
    }

    /// `a` is strictly better than `b`.
    fn better(&self, a: f64, b: f64) -> bool {
        match self {
            Objective::Distance(_) => a < b,
            Objective::Witness(_) => a > b,
        }
    }

    fn minimizing(&self) -> bool {
        matches!(self, Objective::Distance(_))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproxOptions {
    pub supports: [usize; 3],
    pub outputs: [usize; 3],
    pub restarts: usize,
    /// Cap on gradient steps and on polishing sweeps, each.
    pub iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for ApproxOptions {
    fn default() -> Self {
        Self {
            supports: [4, 4, 4],
            outputs: [2, 2, 2],
            restarts: 50,
            iters: 500,
            tol: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproxResult {
    pub model: TriangleLocalModel,
    pub value: f64,
    pub restart: usize,
    /// Best value reached by each restart.
    pub restart_values: Vec<f64>,
    pub method: &'static str,
}

/// Block `b` of the parameters and its simplex rows `(width, rows)`.
fn block(model: &TriangleLocalModel, b: usize) -> (&[f64], usize, usize) {
    if b < 3 {
        (model.sources()[b], model.supports[b], 1)
    } else {
        let i = b - 3;
        let (s, t) = PARENTS[i];
        (model.responses()[i], model.outputs[i], model.supports[s] * model.supports[t])
    }
}

fn block_mut(model: &mut TriangleLocalModel, b: usize) -> &mut Vec<f64> {
    match b {
        0 => &mut model.p1,
        1 => &mut model.p2,
        2 => &mut model.p3,
        3 => &mut model.q1,
        4 => &mut model.q2,
        _ => &mut model.q3,
    }
}

/// `G[k][a] = ∂P(a)/∂θ_k` for every parameter of block `b`, plus `P`.
fn block_jacobian(model: &TriangleLocalModel, b: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let parties = model.parties();
    let cells = parties.joint_outputs();
    let (theta, _, _) = block(model, b);
    let mut g = vec![vec![0.0; cells]; theta.len()];
    let mut p = vec![0.0; cells];
    let [s1, s2, s3] = model.supports;
    let [o1, o2, o3] = model.outputs;
    for l1 in 0..s1 {
        for l2 in 0..s2 {
            for l3 in 0..s3 {
                let lambda = [l1, l2, l3];
                let rows: [usize; 3] = [0, 1, 2].map(|i| {
                    let (s, t) = PARENTS[i];
                    lambda[s] * model.supports[t] + lambda[t]
                });
                for a1 in 0..o1 {
                    for a2 in 0..o2 {
                        for a3 in 0..o3 {
                            let out = [a1, a2, a3];
                            let idx: [usize; 6] = [
                                l1,
                                l2,
                                l3,
                                rows[0] * o1 + a1,
                                rows[1] * o2 + a2,
                                rows[2] * o3 + a3,
                            ];
                            let f: [f64; 6] = [
                                model.p1[l1],
                                model.p2[l2],
                                model.p3[l3],
                                model.q1[idx[3]],
                                model.q2[idx[4]],
                                model.q3[idx[5]],
                            ];
                            let rest: f64 = (0..6).filter(|&j| j != b).map(|j| f[j]).product();
                            if rest == 0.0 {
                                continue;
                            }
                            let a = parties.encode(&out);
                            g[idx[b]][a] += rest;
                            p[a] += rest * f[b];
                        }
                    }
                }
            }
        }
    }
    (g, p)
}

fn normalize_rows(v: &mut [f64], width: usize) {
    for row in v.chunks_mut(width) {
        row.iter_mut().for_each(|x| *x = x.max(0.0));
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            row.iter_mut().for_each(|x| *x /= s);
        } else {
            row.iter_mut().for_each(|x| *x = 1.0 / width as f64);
        }
    }
}

/// Optimal replacement of block `b` with the other blocks fixed.
fn best_block(model: &TriangleLocalModel, b: usize, objective: &Objective) -> Option<Vec<f64>> {
    let (_, width, rows) = block(model, b);
    let (g, _) = block_jacobian(model, b);
    let k = g.len();
    match objective {
        Objective::Witness(w) => {
            let score: Vec<f64> = g.iter().map(|gk| gk.iter().zip(w.coeffs()).map(|(a, c)| a * c).sum()).collect();
            let mut theta = vec![0.0; k];
            for r in 0..rows {
                let row = &score[r * width..(r + 1) * width];
                let best = (0..width).fold(0, |bi, j| if row[j] > row[bi] { j } else { bi });
                theta[r * width + best] = 1.0;
            }
            Some(theta)
        }
        Objective::Distance(target) => {
            let t = target.as_slice();
            let d = t.len();
            let cols = k + 2 * d;
            let mut a = Vec::with_capacity(d + rows);
            let mut rhs = Vec::with_capacity(d + rows);
            for cell in 0..d {
                let mut row = vec![0.0; cols];
                for (j, gk) in g.iter().enumerate() {
                    row[j] = gk[cell];
                }
                row[k + cell] = 1.0;
                row[k + d + cell] = -1.0;
                a.push(row);
                rhs.push(t[cell]);
            }
            for r in 0..rows {
                let mut row = vec![0.0; cols];
                row[r * width..(r + 1) * width].iter_mut().for_each(|v| *v = 1.0);
                a.push(row);
                rhs.push(1.0);
            }
            let mut c = vec![0.0; cols];
            c[k..].iter_mut().for_each(|v| *v = 1.0);
            match solve(&StandardForm { a, b: rhs, c }) {
                Ok(LpOutcome::Optimal(sol)) => {
                    let mut theta = sol.x[..k].to_vec();
                    normalize_rows(&mut theta, width);
                    Some(theta)
                }
                _ => None,
            }
        }
    }
}

/// One exponentiated-gradient step on every block of the squared error
/// (distance) or of the negated witness.
fn gradient_step(model: &mut TriangleLocalModel, objective: &Objective, eta: f64) {
    for b in 0..6 {
        let (g, p) = block_jacobian(model, b);
        let residual: Vec<f64> = match objective {
            Objective::Distance(t) => p.iter().zip(t.as_slice()).map(|(x, y)| 2.0 * (x - y)).collect(),
            Objective::Witness(w) => w.coeffs().iter().map(|c| -c).collect(),
        };
        let width = block(model, b).1;
        let theta = block_mut(model, b);
        for (th, gk) in theta.iter_mut().zip(&g) {
            let grad: f64 = gk.iter().zip(&residual).map(|(a, r)| a * r).sum();
            *th *= (-eta * grad).exp();
            // keep every entry reachable by later multiplicative steps
            *th = th.max(1e-300);
        }
        normalize_rows(theta, width);
    }
}

fn evaluate(model: &TriangleLocalModel, objective: &Objective) -> f64 {
    objective.value(&triangle_exact_distribution(model).expect("optimizer keeps models valid"))
}

fn run_restart(objective: &Objective, opts: &ApproxOptions, restart: usize) -> (TriangleLocalModel, f64) {
    let mut rng = stream_rng(opts.seed, restart as u64);
    let mut model = random_triangle_model(opts.supports, opts.outputs, &mut rng);
    let mut best = model.clone();
    let mut best_value = evaluate(&model, objective);

    for _ in 0..opts.iters {
        gradient_step(&mut model, objective, 1.0);
        let v = evaluate(&model, objective);
        if objective.better(v, best_value) {
            best = model.clone();
            best_value = v;
        }
    }

    model = best.clone();
    let mut current = best_value;
    for _ in 0..opts.iters {
        let before = current;
        for b in 0..6 {
            let Some(theta) = best_block(&model, b, objective) else { continue };
            let mut candidate = model.clone();
            *block_mut(&mut candidate, b) = theta;
            let v = evaluate(&candidate, objective);
            if objective.better(v, current) {
                model = candidate;
                current = v;
            }
        }
        let gain = if objective.minimizing() { before - current } else { current - before };
        if gain < opts.tol {
            break;
        }
    }
    if objective.better(current, best_value) {
        (model, current)
    } else {
        (best, best_value)
    }
}

/// Best model over `opts.restarts` independent restarts; restart `i` is
/// seeded with `derive_seed(opts.seed, i)`, and ties go to the lowest index.
pub fn best_local_approx(objective: &Objective, opts: &ApproxOptions) -> ApproxResult {
    assert_eq!(
        objective.outputs(),
        opts.outputs.iter().product::<usize>(),
        "objective alphabet must match the triangle outputs"
    );
    assert!(opts.restarts >= 1, "at least one restart is required");
    let runs: Vec<(TriangleLocalModel, f64)> =
        (0..opts.restarts).into_par_iter().map(|i| run_restart(objective, opts, i)).collect();
    let mut best = 0;
    for (i, (_, v)) in runs.iter().enumerate() {
        if objective.better(*v, runs[best].1) {
            best = i;
        }
    }
    let restart_values = runs.iter().map(|r| r.1).collect();
    let (model, value) = runs[best].clone();
    ApproxResult {
        model,
        value,
        restart: best,
        restart_values,
        method: "heuristic",
    }
}
