//! Leave-one-task-out selection of the completion lambda.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rouge::{score_summaries, Metric};
use crate::summarize::{Summarizer, Summary, System};

/// `0, 0.5, ..., 5`.
pub fn default_grid() -> Vec<f64> {
    (0..=10).map(|k| k as f64 * 0.5).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub held_out: String,
    pub lambda: f64,
    /// Mean ROUGE-1 recall over the training tasks at `lambda`.
    pub train_score: f64,
    /// ROUGE-1 recall of the held-out task at `lambda`.
    pub test_score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub grid: Vec<f64>,
    /// `scores[g][t]`: ROUGE-1 recall of task `t` at `grid[g]`.
    pub scores: Vec<Vec<f64>>,
    pub folds: Vec<Fold>,
    /// `ilp_mc` summaries at each grid point, in task order.
    pub summaries: Vec<Vec<Summary>>,
}

impl TuneResult {
    pub fn lambda_for(&self, task_id: &str) -> Option<f64> {
        self.folds.iter().find(|f| f.held_out == task_id).map(|f| f.lambda)
    }

    /// Summaries for each held-out task at its own fold's lambda.
    pub fn held_out_summaries(&self) -> Vec<Summary> {
        self.folds
            .iter()
            .enumerate()
            .map(|(t, f)| {
                let g = self.grid.iter().position(|l| *l == f.lambda).unwrap_or(0);
                self.summaries[g][t].clone()
            })
            .collect()
    }

    /// Mean held-out ROUGE-1 recall.
    pub fn cv_score(&self) -> f64 {
        self.folds.iter().map(|f| f.test_score).sum::<f64>() / self.folds.len() as f64
    }

    pub fn write_csv(&self, mut out: impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "held_out,lambda,train_r1_recall,test_r1_recall")?;
        for f in &self.folds {
            writeln!(out, "{},{},{},{}", f.held_out, f.lambda, f.train_score, f.test_score)?;
        }
        Ok(())
    }
}

/// For each task, picks the grid lambda maximizing mean ROUGE-1 recall on the
/// other tasks; ties go to the smaller lambda.
pub fn tune_lambda(summarizer: &Summarizer<'_>, grid: &[f64]) -> Result<TuneResult> {
    let corpus = summarizer.corpus();
    let n_tasks = corpus.tasks.len();
    if n_tasks < 2 {
        return Err(Error::Invalid(format!(
            "lambda tuning needs at least 2 tasks, corpus has {n_tasks}"
        )));
    }
    if grid.is_empty() {
        return Err(Error::Invalid("empty lambda grid".into()));
    }
    if let Some(bad) = grid.iter().find(|l| !l.is_finite() || **l < 0.0) {
        return Err(Error::Invalid(format!("invalid lambda {bad}")));
    }

    let mut scores = Vec::with_capacity(grid.len());
    let mut summaries = Vec::with_capacity(grid.len());
    for &lambda in grid {
        log::info!("tuning: lambda = {lambda}");
        let completions = summarizer.complete(lambda)?;
        let run = summarizer.run_with(System::IlpMc, Some(&completions))?;
        let report = score_summaries(corpus, &run)?;
        scores.push(
            report
                .per_task
                .iter()
                .map(|(_, s)| s.get(Metric::Rouge1).recall)
                .collect::<Vec<_>>(),
        );
        summaries.push(run);
    }

    let folds = corpus
        .tasks
        .iter()
        .enumerate()
        .map(|(held, task)| {
            let mut best: Option<(usize, f64)> = None;
            for (g, row) in scores.iter().enumerate() {
                let train = row
                    .iter()
                    .enumerate()
                    .filter(|(t, _)| *t != held)
                    .map(|(_, s)| s)
                    .sum::<f64>()
                    / (n_tasks - 1) as f64;
                let better = match best {
                    None => true,
                    Some((bg, bs)) => train > bs || (train == bs && grid[g] < grid[bg]),
                };
                if better {
                    best = Some((g, train));
                }
            }
            let (g, train_score) = best.expect("non-empty grid");
            Fold {
                held_out: task.task_id.clone(),
                lambda: grid[g],
                train_score,
                test_score: scores[g][held],
            }
        })
        .collect();

    Ok(TuneResult {
        grid: grid.to_vec(),
        scores,
        folds,
        summaries,
    })
}
