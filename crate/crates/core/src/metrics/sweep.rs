//! Accuracy sweep over oracle success probabilities.

use std::fmt::Write as _;

use super::scenario::{generate, Generated, ScenarioSpec, SpecError};
use super::score::{parsed, score};
use crate::par;
use crate::pipeline::{run, RunConfig};
use crate::rules::ActivityGraph;

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub p_reid: Vec<f64>,
    pub p_action: Vec<f64>,
    /// Each seed draws its own trace and its own oracle failures.
    pub seeds: Vec<u64>,
    pub tolerance_s: f64,
    pub run: RunConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub p_reid: f64,
    pub p_action: f64,
    /// Mean over seeds where the value is defined.
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub runs: usize,
    pub undefined_precision: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or("undefined".into(), |v| format!("{v:.3}"))
}

impl SweepResult {
    pub fn cell(&self, p_reid: f64, p_action: f64) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.p_reid == p_reid && c.p_action == p_action)
    }

    /// One row per p_reid, one `P/R` column per p_action.
    pub fn to_text(&self) -> String {
        let mut reids: Vec<f64> = self.cells.iter().map(|c| c.p_reid).collect();
        let mut acts: Vec<f64> = self.cells.iter().map(|c| c.p_action).collect();
        for v in [&mut reids, &mut acts] {
            v.sort_by(|a, b| b.total_cmp(a));
            v.dedup();
        }
        let mut s = String::from("p_reid\\p_action");
        for a in &acts {
            write!(s, "\t{a:.2}").unwrap();
        }
        s.push('\n');
        for r in &reids {
            write!(s, "{r:.2}").unwrap();
            for a in &acts {
                match self.cell(*r, *a) {
                    Some(c) => write!(s, "\t{}/{}", fmt_opt(c.precision), fmt_opt(c.recall)).unwrap(),
                    None => s.push_str("\t-"),
                }
            }
            s.push('\n');
        }
        s
    }
}

/// Runs every (p_reid, p_action, seed) combination. Traces are generated
/// once per seed and shared by all cells.
pub fn sweep(
    spec: &ScenarioSpec,
    graphs: &[ActivityGraph],
    actions: &[String],
    cfg: &SweepConfig,
) -> Result<SweepResult, SpecError> {
    let traces: Vec<Generated> = par::map(&cfg.seeds, |&seed| generate(spec, seed, graphs))
        .into_iter()
        .collect::<Result<_, _>>()?;
    let mut jobs = Vec::new();
    for &r in &cfg.p_reid {
        for &a in &cfg.p_action {
            for i in 0..cfg.seeds.len() {
                jobs.push((r, a, i));
            }
        }
    }
    let scores = par::map(&jobs, |&(r, a, i)| {
        let mut rc = cfg.run;
        rc.oracle.p_reid = r;
        rc.oracle.p_action = a;
        rc.oracle.seed = cfg.seeds[i];
        let g = &traces[i];
        let out = run(&g.trace, &g.topology, graphs, actions.iter().cloned(), &rc);
        let rep = score(&parsed(&out.events), &g.gt, cfg.tolerance_s);
        (rep.precision(), rep.recall())
    });
    let mut cells = Vec::new();
    for (chunk, group) in scores.chunks(cfg.seeds.len().max(1)).zip(jobs.chunks(cfg.seeds.len().max(1))) {
        let ps: Vec<f64> = chunk.iter().filter_map(|x| x.0).collect();
        let rs: Vec<f64> = chunk.iter().filter_map(|x| x.1).collect();
        cells.push(SweepCell {
            p_reid: group[0].0,
            p_action: group[0].1,
            precision: mean(&ps),
            recall: mean(&rs),
            runs: chunk.len(),
            undefined_precision: chunk.len() - ps.len(),
        });
    }
    Ok(SweepResult { cells })
}
