//! Finite-population chain over compositions `(i_C, i_D)`.
//!
//! One step: a focal individual of strategy `X` is picked with probability
//! `i_X/Z`. With probability `μ` it mutates to one of the two other
//! strategies; otherwise it picks a role model of strategy `Y` among the other
//! `Z−1` and imitates it with the Fermi probability
//! `p(X,Y) = 1/(1 + e^{β(f_X − f_Y)})`. In matrix form (default, "scaled"):
//!
//! ```text
//! T_XY = (i_X/Z) [ (1−μ) (i_Y/(Z−1)) p(X,Y) + μ/2 ]
//! ```
//!
//! The "literal" form `(i_X/Z)(i_Y/(Z−1)) p(X,Y) (1−μ) + μ/2` (mutation term
//! applied whenever `i_X ≥ 1`) is available behind [`MutationForm::Literal`].

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameParams, MutationForm, PopulationState, StateSpace, Strategy};
use crate::io::{csv_line, fmt_f64};
use crate::sampling::FitnessLandscape;

/// Moves in row order.
pub const MOVES: [(Strategy, Strategy); 6] = [
    (Strategy::Cooperate, Strategy::Defect),
    (Strategy::Cooperate, Strategy::Outside),
    (Strategy::Defect, Strategy::Cooperate),
    (Strategy::Defect, Strategy::Outside),
    (Strategy::Outside, Strategy::Cooperate),
    (Strategy::Outside, Strategy::Defect),
];

/// Largest dense system the LU cross-check accepts.
pub const DENSE_LIMIT: usize = 2000;

/// Probability that an `X` player adopts the strategy of a `Y` role model.
pub fn imitation_probability(beta: f64, f_x: f64, f_y: f64) -> f64 {
    let t = beta * (f_x - f_y);
    if t.is_nan() {
        return 0.5;
    }
    if t > 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    }
}

/// `(Δi_C, Δi_D)` of a move.
pub fn displacement(from: Strategy, to: Strategy) -> (i32, i32) {
    let unit = |s: Strategy| match s {
        Strategy::Cooperate => (1, 0),
        Strategy::Defect => (0, 1),
        Strategy::Outside => (0, 0),
    };
    let (a, b) = (unit(from), unit(to));
    (b.0 - a.0, b.1 - a.1)
}

/// Probabilities of the six moves out of `state`, in [`MOVES`] order.
pub fn move_probabilities(land: &FitnessLandscape, state: &PopulationState) -> [f64; 6] {
    let p = land.params();
    let z = p.population as f64;
    let f = land.fitness_of(state);
    let mut out = [0.0; 6];
    for (slot, &(from, to)) in out.iter_mut().zip(MOVES.iter()) {
        let ix = state.count(from) as f64;
        let iy = state.count(to) as f64;
        if ix == 0.0 {
            continue;
        }
        let imitate = (iy / (z - 1.0)) * imitation_probability(p.beta, f.get(from), f.get(to));
        *slot = match p.mutation_form {
            MutationForm::Scaled => (ix / z) * ((1.0 - p.mu) * imitate + p.mu / 2.0),
            MutationForm::Literal => (ix / z) * imitate * (1.0 - p.mu) + p.mu / 2.0,
        };
    }
    out
}

/// Row-stochastic matrix in compressed-row form.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseChain {
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// The game's chain over compositions, at most seven entries per row.
#[derive(Clone, Debug)]
pub struct MarkovModel {
    params: GameParams,
    space: StateSpace,
    chain: SparseChain,
}

impl MarkovModel {
    pub fn from_landscape(land: &FitnessLandscape) -> Result<Self> {
        let space = land.space();
        let states: Vec<PopulationState> = space.iter().collect();
        let rows: Vec<Vec<(usize, f64)>> = states
            .par_iter()
            .map(|s| {
                let probs = move_probabilities(land, s);
                let mut row = Vec::with_capacity(7);
                let mut out = 0.0;
                for (&(from, to), &pr) in MOVES.iter().zip(probs.iter()) {
                    if pr > 0.0 {
                        let next = s.after_switch(from, to).expect("move from a present strategy");
                        row.push((space.index_of(&next), pr));
                        out += pr;
                    }
                }
                row.push((space.index_of(s), 1.0 - out));
                row.sort_by_key(|e| e.0);
                row
            })
            .collect();
        let mut row_start = Vec::with_capacity(rows.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_start.push(0);
        for (i, row) in rows.iter().enumerate() {
            let stay = row.iter().find(|e| e.0 == i).map_or(0.0, |e| e.1);
            if stay < -1e-12 {
                return Err(Error::param(
                    "mu",
                    format!(
                        "outflow probabilities exceed 1 at (i_C={}, i_D={}); reduce mu or use the scaled mutation form",
                        states[i].cooperators, states[i].defectors
                    ),
                ));
            }
            for &(j, v) in row {
                cols.push(j);
                vals.push(if j == i { v.max(0.0) } else { v });
            }
            row_start.push(cols.len());
        }
        Ok(MarkovModel {
            params: land.params().clone(),
            space,
            chain: SparseChain {
                row_start,
                cols,
                vals,
            },
        })
    }

    pub fn params(&self) -> &GameParams {
        &self.params
    }

    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn chain(&self) -> &SparseChain {
        &self.chain
    }
}

impl std::ops::Deref for MarkovModel {
    type Target = SparseChain;

    fn deref(&self) -> &SparseChain {
        &self.chain
    }
}

impl SparseChain {
    /// Builds a chain from explicit rows of `(column, probability)` pairs.
    pub fn from_rows(rows: &[Vec<(usize, f64)>]) -> Result<Self> {
        let n = rows.len();
        let mut row_start = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            let mut row = row.clone();
            row.sort_by_key(|e| e.0);
            let mut total = 0.0;
            for &(j, v) in &row {
                if j >= n || v.is_nan() || v < 0.0 {
                    return Err(Error::InvalidArgument(format!("bad entry ({i}, {j}) = {v}")));
                }
                total += v;
                cols.push(j);
                vals.push(v);
            }
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!("row {i} sums to {total}")));
            }
            row_start.push(cols.len());
        }
        Ok(SparseChain {
            row_start,
            cols,
            vals,
        })
    }

    pub fn len(&self) -> usize {
        self.row_start.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Nonzero pattern of row `i` as `(column, probability)` pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_start[i]..self.row_start[i + 1];
        self.cols[r.clone()].iter().cloned().zip(self.vals[r].iter().cloned())
    }

    pub fn probability(&self, from: usize, to: usize) -> f64 {
        self.row(from).find(|e| e.0 == to).map_or(0.0, |e| e.1)
    }

    /// `π T`.
    pub fn left_multiply(&self, pi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (i, &p) in pi.iter().enumerate() {
            for (j, v) in self.row(i) {
                out[j] += p * v;
            }
        }
        out
    }

    /// Every state reaches every other state through positive entries.
    pub fn is_irreducible(&self) -> bool {
        let n = self.len();
        let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            for (j, v) in self.row(i) {
                if v > 0.0 && j != i {
                    reverse[j].push(i);
                }
            }
        }
        let reach = |next: &dyn Fn(usize) -> Vec<usize>| {
            let mut seen = vec![false; n];
            let mut queue = VecDeque::from([0usize]);
            seen[0] = true;
            let mut count = 1;
            while let Some(i) = queue.pop_front() {
                for j in next(i) {
                    if !seen[j] {
                        seen[j] = true;
                        count += 1;
                        queue.push_back(j);
                    }
                }
            }
            count == n
        };
        let forward = |i: usize| {
            self.row(i)
                .filter(|&(j, v)| v > 0.0 && j != i)
                .map(|e| e.0)
                .collect::<Vec<_>>()
        };
        let backward = |i: usize| reverse[i].clone();
        reach(&forward) && reach(&backward)
    }

    /// Columns of `T` as `(row, probability)` lists, i.e. the rows of `Tᵀ`.
    fn transpose(&self) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
        let n = self.len();
        let mut count = vec![0usize; n + 1];
        for &j in &self.cols {
            count[j + 1] += 1;
        }
        for j in 0..n {
            count[j + 1] += count[j];
        }
        let start = count.clone();
        let mut fill = count;
        let mut rows = vec![0usize; self.cols.len()];
        let mut vals = vec![0.0; self.cols.len()];
        for i in 0..n {
            for (j, v) in self.row(i) {
                rows[fill[j]] = i;
                vals[fill[j]] = v;
                fill[j] += 1;
            }
        }
        (start, rows, vals)
    }

    pub fn residual(&self, pi: &[f64]) -> f64 {
        self.left_multiply(pi)
            .iter()
            .zip(pi)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

pub fn build_chain(params: &GameParams) -> Result<MarkovModel> {
    MarkovModel::from_landscape(&FitnessLandscape::new(params.clone())?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StationaryMethod {
    /// `π ← πT` with periodic renormalization.
    Power,
    /// Gauss–Seidel sweeps on `π(I − T) = 0`.
    GaussSeidel,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryOptions {
    pub method: StationaryMethod,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for StationaryOptions {
    fn default() -> Self {
        StationaryOptions {
            method: StationaryMethod::Power,
            tolerance: 1e-10,
            max_iterations: 5_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationarySummary {
    /// Means of `x` are taken over states with members, renormalized there.
    pub mean_x: f64,
    pub sd_x: f64,
    pub mean_y: f64,
    pub sd_y: f64,
    /// Stationary mass of the all-outsider state, where `x` is undefined.
    pub mass_without_members: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryResult {
    pub pi: Vec<f64>,
    /// `‖πT − π‖∞`.
    pub residual: f64,
    pub iterations: usize,
    pub summary: StationarySummary,
}

fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|p| *p /= s);
}

pub fn summarize(space: StateSpace, pi: &[f64]) -> StationarySummary {
    let (mut mx, mut mx2, mut wx, mut my, mut my2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut empty = 0.0;
    for (s, &p) in space.iter().zip(pi) {
        let y = s.y();
        my += p * y;
        my2 += p * y * y;
        match s.x() {
            Some(x) => {
                mx += p * x;
                mx2 += p * x * x;
                wx += p;
            }
            None => empty += p,
        }
    }
    let mean_x = mx / wx;
    StationarySummary {
        mean_x,
        sd_x: (mx2 / wx - mean_x * mean_x).max(0.0).sqrt(),
        mean_y: my,
        sd_y: (my2 - my * my).max(0.0).sqrt(),
        mass_without_members: empty,
    }
}

const CHECK_EVERY: usize = 50;

/// Stationary distribution of the game chain with its summary.
pub fn stationary(model: &MarkovModel, options: &StationaryOptions) -> Result<StationaryResult> {
    let (pi, residual, iterations) = solve_stationary(model.chain(), options)?;
    let summary = summarize(model.space(), &pi);
    Ok(StationaryResult {
        pi,
        residual,
        iterations,
        summary,
    })
}

/// `(π, ‖πT − π‖∞, iterations)` of an irreducible chain.
pub fn solve_stationary(chain: &SparseChain, options: &StationaryOptions) -> Result<(Vec<f64>, f64, usize)> {
    let n = chain.len();
    let (start, rows, vals) = chain.transpose();
    let mut pi = vec![1.0 / n as f64; n];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < options.max_iterations {
        match options.method {
            StationaryMethod::Power => {
                let next: Vec<f64> = (0..n)
                    .into_par_iter()
                    .map(|j| {
                        (start[j]..start[j + 1])
                            .map(|k| pi[rows[k]] * vals[k])
                            .sum::<f64>()
                    })
                    .collect();
                pi = next;
            }
            StationaryMethod::GaussSeidel => {
                for j in 0..n {
                    let mut inflow = 0.0;
                    let mut stay = 0.0;
                    for k in start[j]..start[j + 1] {
                        if rows[k] == j {
                            stay = vals[k];
                        } else {
                            inflow += pi[rows[k]] * vals[k];
                        }
                    }
                    pi[j] = inflow / (1.0 - stay);
                }
            }
        }
        iterations += 1;
        if iterations % CHECK_EVERY == 0 || iterations == options.max_iterations {
            normalize(&mut pi);
            residual = chain.residual(&pi);
            if !residual.is_finite() {
                break;
            }
            if residual < options.tolerance {
                break;
            }
        }
    }
    if residual.is_nan() || residual >= options.tolerance {
        return Err(Error::NonConvergence {
            iterations,
            residual,
        });
    }
    Ok((pi, residual, iterations))
}

/// Stationary distribution from a dense LU solve; a cross-check for small chains.
pub fn stationary_dense(chain: &SparseChain) -> Result<Vec<f64>> {
    let n = chain.len();
    if n > DENSE_LIMIT {
        return Err(Error::Capacity(format!(
            "dense solve limited to {DENSE_LIMIT} states, chain has {n}"
        )));
    }
    // (Tᵀ − I) π = 0 with the last equation replaced by Σπ = 1.
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for (j, v) in chain.row(i) {
            a[(j, i)] += v;
        }
        a[(i, i)] -= 1.0;
    }
    for i in 0..n {
        a[(n - 1, i)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::InvalidState("singular system: chain is reducible".into()))?;
    Ok(x.iter().cloned().collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientPoint {
    pub cooperators: usize,
    pub defectors: usize,
    /// `NaN` without members.
    pub x: f64,
    pub y: f64,
    /// Expected one-step changes of `i_C` and `i_D`.
    pub delta_cooperators: f64,
    pub delta_defectors: f64,
    /// The same displacement in `(x, y)` coordinates.
    pub grad_x: f64,
    pub grad_y: f64,
    /// `|(E Δi_C, E Δi_D)| / Z`.
    pub speed: f64,
    /// Most probable move, if any move is possible.
    pub likely_move: Option<(Strategy, Strategy)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionGradient {
    pub points: Vec<GradientPoint>,
}

pub fn selection_gradient(land: &FitnessLandscape) -> SelectionGradient {
    let z = land.population() as f64;
    let states: Vec<PopulationState> = land.space().iter().collect();
    let points = states
        .par_iter()
        .map(|s| {
            let probs = move_probabilities(land, s);
            let (mut dc, mut dd) = (0.0, 0.0);
            let mut likely = None;
            let mut best = 0.0;
            for (&(from, to), &pr) in MOVES.iter().zip(probs.iter()) {
                let (a, b) = displacement(from, to);
                dc += a as f64 * pr;
                dd += b as f64 * pr;
                if pr > best {
                    best = pr;
                    likely = Some((from, to));
                }
            }
            let m = s.members() as f64;
            let grad_x = if s.members() == 0 {
                0.0
            } else {
                (s.defectors as f64 * dc - s.cooperators as f64 * dd) / (m * m)
            };
            GradientPoint {
                cooperators: s.cooperators,
                defectors: s.defectors,
                x: s.x().unwrap_or(f64::NAN),
                y: s.y(),
                delta_cooperators: dc,
                delta_defectors: dd,
                grad_x,
                grad_y: (dc + dd) / z,
                speed: dc.hypot(dd) / z,
                likely_move: likely,
            }
        })
        .collect();
    SelectionGradient { points }
}

impl SelectionGradient {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i_C,i_D,x,y,grad_x,grad_y,speed\n");
        for p in &self.points {
            csv_line(
                &mut out,
                &[
                    p.cooperators.to_string(),
                    p.defectors.to_string(),
                    fmt_f64(p.x),
                    fmt_f64(p.y),
                    fmt_f64(p.grad_x),
                    fmt_f64(p.grad_y),
                    fmt_f64(p.speed),
                ],
            );
        }
        out
    }
}

pub fn stationary_csv(space: StateSpace, pi: &[f64]) -> String {
    let mut out = String::from("i_C,i_D,x,y,pi\n");
    for (s, &p) in space.iter().zip(pi) {
        csv_line(
            &mut out,
            &[
                s.cooperators.to_string(),
                s.defectors.to_string(),
                fmt_f64(s.x().unwrap_or(f64::NAN)),
                fmt_f64(s.y()),
                fmt_f64(p),
            ],
        );
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloOptions {
    pub steps: u64,
    pub seed: u64,
    /// Starting composition `(i_C, i_D)`.
    pub start: (usize, usize),
    /// Record the composition every `stride` steps (0 disables the trajectory).
    pub stride: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    /// Fraction of steps spent in each state, indexed like the state space.
    pub occupancy: Vec<f64>,
    pub trajectory: Vec<(usize, usize)>,
    pub final_state: (usize, usize),
}

/// Individual-based simulation of the imitation–mutation process.
///
/// Mutation always follows the scaled form: the focal individual, not the
/// transition, carries the mutation probability.
pub fn monte_carlo(land: &FitnessLandscape, options: &MonteCarloOptions) -> Result<MonteCarloResult> {
    let p = land.params();
    let z = p.population;
    let space = land.space();
    let (mut c, mut d) = options.start;
    if c + d > z {
        return Err(Error::InvalidArgument(format!(
            "start ({c}, {d}) exceeds Z = {z}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut counts = vec![0u64; space.len()];
    let mut trajectory = Vec::new();
    let pick = |r: usize, c: usize, d: usize| {
        if r < c {
            Strategy::Cooperate
        } else if r < c + d {
            Strategy::Defect
        } else {
            Strategy::Outside
        }
    };
    for step in 0..options.steps {
        let focal = pick(rng.random_range(0..z), c, d);
        let target = if rng.random::<f64>() < p.mu {
            let others: Vec<Strategy> = Strategy::ALL.into_iter().filter(|&s| s != focal).collect();
            Some(others[rng.random_range(0..2)])
        } else {
            // Role model among the other Z−1: drop the focal from its own class.
            let (mut rc, mut rd) = (c, d);
            match focal {
                Strategy::Cooperate => rc -= 1,
                Strategy::Defect => rd -= 1,
                Strategy::Outside => {}
            }
            let model = pick(rng.random_range(0..z - 1), rc, rd);
            let f = land.fitness(c, d);
            let adopt = rng.random::<f64>() < imitation_probability(p.beta, f.get(focal), f.get(model));
            (model != focal && adopt).then_some(model)
        };
        if let Some(to) = target {
            let (a, b) = displacement(focal, to);
            c = (c as i64 + a as i64) as usize;
            d = (d as i64 + b as i64) as usize;
        }
        counts[space.index(c, d)] += 1;
        if options.stride > 0 && step % options.stride == 0 {
            trajectory.push((c, d));
        }
    }
    let total = options.steps.max(1) as f64;
    Ok(MonteCarloResult {
        occupancy: counts.iter().map(|&k| k as f64 / total).collect(),
        trajectory,
        final_state: (c, d),
    })
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(p, q)| (p - q).abs()).sum::<f64>()
}
