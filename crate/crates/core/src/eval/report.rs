use std::io::Write;

use serde::{Deserialize, Serialize};

use super::grid::GridOutcome;
use super::similarity::SimilarityReport;
use super::wilcoxon::{wilcoxon_signed_rank, WilcoxonOutcome};
use crate::augment::Technique;
use crate::corpus::CvssMetric;
use crate::error::Result;
use crate::forest::ModelKind;

/// Pairing used for the significance tests.
pub const PAIRING_UNIT: &str = "task x round test MCC";

/// A technique against the `None` baseline for one model family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub model: ModelKind,
    pub technique: Technique,
    pub pairing: String,
    pub n_pairs: usize,
    /// Mean of `technique - baseline` over the pairs.
    pub mean_difference: f64,
    pub outcome: WilcoxonOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSimilarity {
    pub task: CvssMetric,
    pub technique: Technique,
    /// Averaged over rounds and over classes with synthetic samples.
    pub same_mean: f64,
    pub other_max_mean: f64,
}

impl TaskSimilarity {
    /// Averages per-round reports.
    pub fn from_rounds(task: CvssMetric, technique: Technique, rounds: &[SimilarityReport]) -> Option<Self> {
        let avgs: Vec<(f64, f64)> = rounds.iter().filter_map(SimilarityReport::averages).collect();
        if avgs.is_empty() {
            return None;
        }
        let n = avgs.len() as f64;
        Some(TaskSimilarity {
            task,
            technique,
            same_mean: avgs.iter().map(|a| a.0).sum::<f64>() / n,
            other_max_mean: avgs.iter().map(|a| a.1).sum::<f64>() / n,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub outcomes: Vec<GridOutcome>,
    pub comparisons: Vec<Comparison>,
    pub similarity: Vec<TaskSimilarity>,
    pub complete: bool,
}

fn f6(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else {
        "nan".into()
    }
}

/// `(value - baseline) / |baseline|` in percent; NaN for a zero baseline.
pub fn percent_difference(value: f64, baseline: f64) -> f64 {
    if baseline == 0.0 {
        f64::NAN
    } else {
        (value - baseline) / baseline.abs() * 100.0
    }
}

impl ExperimentReport {
    /// Sorts outcomes into (model, task, technique) order and runs the
    /// baseline comparisons.
    pub fn new(mut outcomes: Vec<GridOutcome>, mut similarity: Vec<TaskSimilarity>, complete: bool) -> Result<Self> {
        outcomes.sort_by_key(|o| (o.model, o.task, o.technique));
        similarity.sort_by_key(|s| (s.task, s.technique));
        let mut comparisons = Vec::new();
        for model in Self::models_of(&outcomes) {
            for technique in Technique::ALL.into_iter().filter(|&t| t != Technique::None) {
                let mut a = Vec::new();
                let mut b = Vec::new();
                for task in CvssMetric::ALL {
                    let find = |t| outcomes.iter().find(|o| o.model == model && o.task == task && o.technique == t);
                    let (Some(x), Some(base)) = (find(technique), find(Technique::None)) else { continue };
                    for rx in &x.rounds {
                        if let Some(rb) = base.rounds.iter().find(|r| r.round == rx.round) {
                            a.push(rx.test_mcc);
                            b.push(rb.test_mcc);
                        }
                    }
                }
                if a.is_empty() {
                    continue;
                }
                let mean_difference = a.iter().zip(&b).map(|(x, y)| x - y).sum::<f64>() / a.len() as f64;
                comparisons.push(Comparison {
                    model,
                    technique,
                    pairing: PAIRING_UNIT.to_string(),
                    n_pairs: a.len(),
                    mean_difference,
                    outcome: wilcoxon_signed_rank(&a, &b)?,
                });
            }
        }
        Ok(ExperimentReport { outcomes, comparisons, similarity, complete })
    }

    fn models_of(outcomes: &[GridOutcome]) -> Vec<ModelKind> {
        let mut m: Vec<ModelKind> = outcomes.iter().map(|o| o.model).collect();
        m.sort();
        m.dedup();
        m
    }

    pub fn models(&self) -> Vec<ModelKind> {
        Self::models_of(&self.outcomes)
    }

    pub fn outcome(&self, model: ModelKind, task: CvssMetric, technique: Technique) -> Option<&GridOutcome> {
        self.outcomes.iter().find(|o| o.model == model && o.task == task && o.technique == technique)
    }

    pub fn comparison(&self, model: ModelKind, technique: Technique) -> Option<&Comparison> {
        self.comparisons.iter().find(|c| c.model == model && c.technique == technique)
    }

    fn techniques(&self) -> Vec<Technique> {
        let mut t: Vec<Technique> = self.outcomes.iter().map(|o| o.technique).collect();
        t.sort();
        t.dedup();
        t
    }

    fn tasks(&self) -> Vec<CvssMetric> {
        let mut t: Vec<CvssMetric> = self.outcomes.iter().map(|o| o.task).collect();
        t.sort();
        t.dedup();
        t
    }

    /// One row per (task, model, technique). Test columns are statistics of
    /// the model-level comparison of that technique against `none`.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(
            out,
            "task,model,technique,hyperparameters,mean_test_mcc,mean_test_f1,\
             round1_test_mcc,round2_test_mcc,round3_test_mcc,p_value,z,effect_r,magnitude,significant"
        )?;
        for o in &self.outcomes {
            let round = |i: usize| o.rounds.iter().find(|r| r.round == i).map(|r| f6(r.test_mcc)).unwrap_or_default();
            let stats = match self.comparison(o.model, o.technique).and_then(|c| c.outcome.result()) {
                Some(r) => format!("{},{},{},{},{}", f6(r.p_value), f6(r.z), f6(r.r), r.magnitude.name(), r.significant),
                None => ",,,,".into(),
            };
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                o.task.abbrev(),
                o.model,
                o.technique,
                o.selected_spec,
                f6(o.mean_test_mcc),
                f6(o.mean_test_f1),
                round(1),
                round(2),
                round(3),
                stats
            )?;
        }
        Ok(())
    }

    pub fn write_comparisons_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "model,technique,pairing,n_pairs,mean_difference,outcome,w,z,p_value,effect_r,magnitude,significant")?;
        for c in &self.comparisons {
            let tail = match c.outcome {
                WilcoxonOutcome::Tested(r) => format!(
                    "tested,{},{},{},{},{},{}",
                    f6(r.w),
                    f6(r.z),
                    f6(r.p_value),
                    f6(r.r),
                    r.magnitude.name(),
                    r.significant
                ),
                WilcoxonOutcome::NoDifference => "no_difference,,,,,,".into(),
                WilcoxonOutcome::TooFewPairs { .. } => "too_few_pairs,,,,,,".into(),
            };
            writeln!(out, "{},{},{},{},{},{}", c.model, c.technique, c.pairing, c.n_pairs, f6(c.mean_difference), tail)?;
        }
        Ok(())
    }

    /// `(value - none) / |none|` per (model, technique, task).
    pub fn write_percent_tsv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "model\ttechnique\ttask\tbaseline_mcc\tmcc\tpercent_difference")?;
        for o in self.outcomes.iter().filter(|o| o.technique != Technique::None) {
            if let Some(base) = self.outcome(o.model, o.task, Technique::None) {
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}",
                    o.model,
                    o.technique,
                    o.task.abbrev(),
                    f6(base.mean_test_mcc),
                    f6(o.mean_test_mcc),
                    f6(percent_difference(o.mean_test_mcc, base.mean_test_mcc))
                )?;
            }
        }
        Ok(())
    }

    /// Best percentage improvement over `none` for one model and task.
    pub fn best_improvement(&self, model: ModelKind, task: CvssMetric) -> Option<f64> {
        let base = self.outcome(model, task, Technique::None)?.mean_test_mcc;
        self.outcomes
            .iter()
            .filter(|o| o.model == model && o.task == task && o.technique != Technique::None)
            .map(|o| percent_difference(o.mean_test_mcc, base))
            .filter(|v| v.is_finite())
            .reduce(f64::max)
    }

    /// Mean test MCC tables (techniques by tasks) per model family.
    pub fn write_markdown(&self, mut out: impl Write) -> Result<()> {
        let tasks = self.tasks();
        let header: Vec<&str> = tasks.iter().map(|t| t.abbrev()).collect();
        writeln!(out, "# Testing performance (mean test MCC over rounds)\n")?;
        if !self.complete {
            writeln!(out, "**Incomplete run: results are partial.**\n")?;
        }
        for model in self.models() {
            writeln!(out, "## {model}\n")?;
            writeln!(out, "| Technique | {} | Avg. |", header.join(" | "))?;
            writeln!(out, "|---|{}---|", "---|".repeat(tasks.len()))?;
            for technique in self.techniques() {
                let vals: Vec<Option<f64>> =
                    tasks.iter().map(|&t| self.outcome(model, t, technique).map(|o| o.mean_test_mcc)).collect();
                let present: Vec<f64> = vals.iter().flatten().copied().collect();
                let avg = if present.is_empty() { f64::NAN } else { present.iter().sum::<f64>() / present.len() as f64 };
                let cells: Vec<String> = vals.iter().map(|v| v.map(|x| format!("{x:.3}")).unwrap_or("-".into())).collect();
                writeln!(out, "| {technique} | {} | {avg:.3} |", cells.join(" | "))?;
            }
            let best: Vec<Option<f64>> = tasks.iter().map(|&t| self.best_improvement(model, t)).collect();
            let cells: Vec<String> = best.iter().map(|v| v.map(|x| format!("{x:.1}%")).unwrap_or("-".into())).collect();
            writeln!(out, "| % of best improvement | {} | |", cells.join(" | "))?;
            writeln!(out)?;
        }
        let models = self.models();
        if models.len() > 1 {
            writeln!(out, "## Avg. % of best improvements over {} model families\n", models.len())?;
            writeln!(out, "| | {} |", header.join(" | "))?;
            writeln!(out, "|---|{}", "---|".repeat(tasks.len()))?;
            let cells: Vec<String> = tasks
                .iter()
                .map(|&t| {
                    let v: Vec<f64> = models.iter().filter_map(|&m| self.best_improvement(m, t)).collect();
                    if v.is_empty() {
                        "-".into()
                    } else {
                        format!("{:.1}%", v.iter().sum::<f64>() / v.len() as f64)
                    }
                })
                .collect();
            writeln!(out, "| Avg. | {} |\n", cells.join(" | "))?;
        }
        if !self.comparisons.is_empty() {
            writeln!(out, "## Wilcoxon signed-rank vs. none (pairs: {PAIRING_UNIT})\n")?;
            writeln!(out, "| Model | Technique | N | p-value | r | Magnitude |")?;
            writeln!(out, "|---|---|---|---|---|---|")?;
            for c in &self.comparisons {
                match c.outcome {
                    WilcoxonOutcome::Tested(r) => writeln!(
                        out,
                        "| {} | {} | {} | {:.4} | {:.3} | {} |",
                        c.model,
                        c.technique,
                        r.n,
                        r.p_value,
                        r.r,
                        r.magnitude.name()
                    )?,
                    WilcoxonOutcome::NoDifference => {
                        writeln!(out, "| {} | {} | {} | - | - | no difference |", c.model, c.technique, c.n_pairs)?
                    }
                    WilcoxonOutcome::TooFewPairs { n } => {
                        writeln!(out, "| {} | {} | {n} | - | - | too few pairs |", c.model, c.technique)?
                    }
                }
            }
            writeln!(out)?;
        }
        if !self.similarity.is_empty() {
            writeln!(out, "## Centroid cosine similarity of synthetic samples\n")?;
            writeln!(out, "| Task | Technique | Same | Other (max) |")?;
            writeln!(out, "|---|---|---|---|")?;
            for s in &self.similarity {
                writeln!(out, "| {} | {} | {:.3} | {:.3} |", s.task.abbrev(), s.technique, s.same_mean, s.other_max_mean)?;
            }
        }
        Ok(())
    }

    pub fn write_similarity_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "task,technique,same_mean,other_max_mean")?;
        for s in &self.similarity {
            writeln!(out, "{},{},{},{}", s.task.abbrev(), s.technique, f6(s.same_mean), f6(s.other_max_mean))?;
        }
        Ok(())
    }
}
