//! Exact and greedy solvers for the concept-coverage program.
//!
//! With non-negative weights the concept variables can be eliminated: the
//! best `z` for a fixed sentence set `S` is `z_i = min(1, sum_{j in S} A_ij)`.
//! That leaves a budgeted monotone submodular maximization over `S`, solved
//! exactly by depth-first branch-and-bound. The bound at a node is the current
//! objective plus a fractional knapsack over the marginal gains of the
//! undecided sentences, which is admissible by submodularity.
//!
//! Among optimal sets the solver returns the one with the fewest sentences,
//! then the lexicographically smallest sorted index list.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::concepts::CoocMatrix;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const DEFAULT_NODE_LIMIT: u64 = 5_000_000;

#[derive(Clone, Debug)]
pub struct CoverageInstance {
    weights: Vec<f64>,
    /// Non-zero entries of each sentence column, ascending by concept.
    columns: Vec<Vec<(usize, f64)>>,
    lengths: Vec<usize>,
    budget: usize,
}

impl CoverageInstance {
    /// `matrix` is concepts by sentences with entries in `[0, 1]`.
    pub fn new(weights: Vec<f64>, matrix: &Matrix, lengths: Vec<usize>, budget: usize) -> Result<Self> {
        let columns = (0..matrix.ncols())
            .map(|j| {
                (0..matrix.nrows())
                    .filter_map(|i| {
                        let a = matrix.get(i, j);
                        (a != 0.0).then_some((i, a))
                    })
                    .collect()
            })
            .collect();
        Self::from_sparse_columns(weights, matrix.nrows(), columns, lengths, budget)
    }

    /// Sub-block of a binary matrix restricted to the listed columns.
    pub fn from_binary(
        weights: Vec<f64>,
        a: &CoocMatrix,
        columns: &[usize],
        lengths: Vec<usize>,
        budget: usize,
    ) -> Result<Self> {
        let cols = columns
            .iter()
            .map(|&j| a.column(j).iter().map(|&i| (i, 1.0)).collect())
            .collect();
        Self::from_sparse_columns(weights, a.n_concepts(), cols, lengths, budget)
    }

    /// Sub-block of a dense matrix restricted to the listed columns.
    pub fn from_dense_columns(
        weights: Vec<f64>,
        matrix: &Matrix,
        columns: &[usize],
        lengths: Vec<usize>,
        budget: usize,
    ) -> Result<Self> {
        Self::new(weights, &matrix.select_columns(columns), lengths, budget)
    }

    pub fn from_sparse_columns(
        weights: Vec<f64>,
        n_concepts: usize,
        columns: Vec<Vec<(usize, f64)>>,
        lengths: Vec<usize>,
        budget: usize,
    ) -> Result<Self> {
        if weights.len() != n_concepts {
            return Err(Error::DimensionMismatch {
                expected: format!("{n_concepts} weights"),
                found: weights.len().to_string(),
            });
        }
        if lengths.len() != columns.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} lengths", columns.len()),
                found: lengths.len().to_string(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::Invalid(format!("concept weight {w} is not a finite non-negative number")));
        }
        if lengths.contains(&0) {
            return Err(Error::Invalid("sentence lengths must be positive".into()));
        }
        let mut columns = columns;
        for col in &mut columns {
            col.sort_by_key(|&(i, _)| i);
            for &(i, a) in col.iter() {
                if i >= n_concepts {
                    return Err(Error::Invalid(format!("concept index {i} out of range")));
                }
                if !(0.0..=1.0).contains(&a) {
                    return Err(Error::Invalid(format!("matrix entry {a} outside [0, 1]")));
                }
            }
            col.retain(|&(_, a)| a != 0.0);
        }
        Ok(CoverageInstance {
            weights,
            columns,
            lengths,
            budget,
        })
    }

    pub fn n_concepts(&self) -> usize {
        self.weights.len()
    }

    pub fn n_sentences(&self) -> usize {
        self.columns.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn column(&self, j: usize) -> &[(usize, f64)] {
        &self.columns[j]
    }

    /// Copy of the instance with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        CoverageInstance {
            weights: self.weights.iter().map(|w| w * factor).collect(),
            ..self.clone()
        }
    }

    pub fn with_budget(&self, budget: usize) -> Self {
        CoverageInstance {
            budget,
            ..self.clone()
        }
    }

    fn standalone_gain(&self, j: usize) -> f64 {
        self.columns[j]
            .iter()
            .map(|&(i, a)| self.weights[i] * a.min(1.0))
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Chosen sentence indices, ascending.
    pub chosen: Vec<usize>,
    pub objective: f64,
    pub z_values: Vec<f64>,
    /// False for greedy results and for exact searches that hit the node limit.
    pub optimal: bool,
    pub nodes: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    #[default]
    Exact,
    Greedy,
}

impl std::str::FromStr for SolveMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "exact" => Ok(SolveMode::Exact),
            "greedy" => Ok(SolveMode::Greedy),
            other => Err(format!("unknown solver mode `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub mode: SolveMode,
    pub node_limit: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            mode: SolveMode::Exact,
            node_limit: DEFAULT_NODE_LIMIT,
        }
    }
}

/// Optimal concept scores for a fixed sentence set and the resulting objective.
///
/// Coverage is accumulated over `chosen` in ascending index order and the
/// objective over concepts in ascending order, so equal sets always give
/// bit-identical objectives.
pub fn reduce_z(instance: &CoverageInstance, chosen: &[usize]) -> (Vec<f64>, f64) {
    let mut sorted = chosen.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut cover = vec![0.0; instance.n_concepts()];
    for &j in &sorted {
        for &(i, a) in &instance.columns[j] {
            cover[i] += a;
        }
    }
    let z: Vec<f64> = cover.iter().map(|c| c.min(1.0)).collect();
    let objective = z.iter().zip(&instance.weights).map(|(z, w)| w * z).sum();
    (z, objective)
}

pub fn solve(instance: &CoverageInstance, mode: SolveMode) -> Selection {
    solve_with(
        instance,
        &SolverOptions {
            mode,
            ..Default::default()
        },
    )
}

pub fn solve_with(instance: &CoverageInstance, opts: &SolverOptions) -> Selection {
    match opts.mode {
        SolveMode::Exact => branch_and_bound(instance, opts.node_limit),
        SolveMode::Greedy => greedy(instance),
    }
}

fn finish(instance: &CoverageInstance, chosen: Vec<usize>, optimal: bool, nodes: u64) -> Selection {
    let (z_values, objective) = reduce_z(instance, &chosen);
    Selection {
        chosen,
        objective,
        z_values,
        optimal,
        nodes,
    }
}

/// Prefers fewer sentences, then the lexicographically smaller index list.
fn tie_break(a: &[usize], b: &[usize]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

fn marginal_gain(instance: &CoverageInstance, cover: &[f64], j: usize) -> f64 {
    instance.columns[j]
        .iter()
        .map(|&(i, a)| {
            let c = cover[i];
            instance.weights[i] * ((c + a).min(1.0) - c.min(1.0))
        })
        .sum()
}

fn greedy(instance: &CoverageInstance) -> Selection {
    let m = instance.n_sentences();
    let mut cover = vec![0.0; instance.n_concepts()];
    let mut used = vec![false; m];
    let mut remaining = instance.budget;
    let mut chosen = Vec::new();
    loop {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..m {
            if used[j] || instance.lengths[j] > remaining {
                continue;
            }
            let gain = marginal_gain(instance, &cover, j);
            if gain <= 0.0 {
                continue;
            }
            let ratio = gain / instance.lengths[j] as f64;
            let better = match best {
                None => true,
                Some((_, r, g)) => ratio > r || (ratio == r && gain > g),
            };
            if better {
                best = Some((j, ratio, gain));
            }
        }
        let Some((j, _, _)) = best else { break };
        used[j] = true;
        remaining -= instance.lengths[j];
        for &(i, a) in &instance.columns[j] {
            cover[i] += a;
        }
        chosen.push(j);
    }
    chosen.sort_unstable();
    finish(instance, chosen, false, 0)
}

struct Search<'a> {
    instance: &'a CoverageInstance,
    order: Vec<usize>,
    cover: Vec<f64>,
    value: f64,
    chosen: Vec<usize>,
    remaining: usize,
    best_objective: f64,
    best_set: Vec<usize>,
    eps: f64,
    nodes: u64,
    node_limit: u64,
    aborted: bool,
}

impl Search<'_> {
    fn offer(&mut self) {
        if self.value < self.best_objective - self.eps {
            return;
        }
        let mut set = self.chosen.clone();
        set.sort_unstable();
        let (_, objective) = reduce_z(self.instance, &set);
        let better = objective > self.best_objective
            || (objective == self.best_objective && tie_break(&set, &self.best_set) == Ordering::Less);
        if better {
            self.best_objective = objective;
            self.best_set = set;
        }
    }

    fn dfs(&mut self, pos: usize) {
        if self.aborted {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.node_limit {
            self.aborted = true;
            return;
        }
        self.offer();

        // undecided sentences that still fit and still add something;
        // the others can never help below this node
        let mut items: Vec<(usize, f64, usize)> = Vec::new();
        for p in pos..self.order.len() {
            let j = self.order[p];
            let len = self.instance.lengths[j];
            if len > self.remaining {
                continue;
            }
            let gain = marginal_gain(self.instance, &self.cover, j);
            if gain > 0.0 {
                items.push((p, gain, len));
            }
        }
        if items.is_empty() {
            return;
        }
        let bound = self.value + fractional_knapsack(&items, self.remaining);
        if bound < self.best_objective - self.eps {
            return;
        }

        let (p, gain, len) = items[0];
        let j = self.order[p];

        self.chosen.push(j);
        self.remaining -= len;
        let saved: Vec<f64> = self.instance.columns[j].iter().map(|&(i, _)| self.cover[i]).collect();
        for &(i, a) in &self.instance.columns[j] {
            self.cover[i] += a;
        }
        let prev_value = self.value;
        self.value += gain;

        self.dfs(p + 1);

        self.value = prev_value;
        for (&(i, _), c) in self.instance.columns[j].iter().zip(saved) {
            self.cover[i] = c;
        }
        self.remaining += len;
        self.chosen.pop();

        self.dfs(p + 1);
    }
}

fn fractional_knapsack(items: &[(usize, f64, usize)], capacity: usize) -> f64 {
    let mut by_ratio: Vec<(f64, f64, usize)> = items
        .iter()
        .map(|&(_, g, l)| (g / l as f64, g, l))
        .collect();
    by_ratio.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut room = capacity as f64;
    let mut total = 0.0;
    for (ratio, gain, len) in by_ratio {
        if room <= 0.0 {
            break;
        }
        let len = len as f64;
        if len <= room {
            total += gain;
            room -= len;
        } else {
            total += ratio * room;
            room = 0.0;
        }
    }
    total
}

fn branch_and_bound(instance: &CoverageInstance, node_limit: u64) -> Selection {
    let m = instance.n_sentences();
    let gains: Vec<f64> = (0..m).map(|j| instance.standalone_gain(j)).collect();
    let mut order: Vec<usize> = (0..m)
        .filter(|&j| gains[j] > 0.0 && instance.lengths[j] <= instance.budget)
        .collect();
    order.sort_by(|&a, &b| {
        let ra = gains[a] / instance.lengths[a] as f64;
        let rb = gains[b] / instance.lengths[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let scale: f64 = instance.weights.iter().sum::<f64>().max(1.0);

    let mut search = Search {
        instance,
        order,
        cover: vec![0.0; instance.n_concepts()],
        value: 0.0,
        chosen: Vec::new(),
        remaining: instance.budget,
        best_objective: 0.0,
        best_set: Vec::new(),
        eps: 1e-9 * scale,
        nodes: 0,
        node_limit,
        aborted: false,
    };
    search.dfs(0);
    if search.aborted {
        log::warn!(
            "branch-and-bound hit the node limit ({node_limit}); returning the incumbent"
        );
    }
    let nodes = search.nodes;
    let optimal = !search.aborted;
    finish(instance, search.best_set, optimal, nodes)
}
