//! Stand-ins for the action and re-identification networks.
//!
//! Every answer is a pure function of the seed and the query key, so the
//! order in which queries arrive never changes what they return.

use std::collections::BTreeSet;
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::Crop;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub p_action: f64,
    pub p_reid: f64,
    pub tau: f64,
    pub seed: u64,
    pub action_cost_s: f64,
    pub gpu_workers: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            p_action: 1.0,
            p_reid: 1.0,
            tau: 0.5,
            seed: 0,
            action_cost_s: 0.040,
            gpu_workers: 1,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, p) in [("p_action", self.p_action), ("p_reid", self.p_reid)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(format!("tau must lie in (0, 1), got {}", self.tau));
        }
        if self.gpu_workers == 0 {
            return Err("gpu_workers must be at least 1".into());
        }
        if !(self.action_cost_s >= 0.0) {
            return Err("action cost must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionReport {
    pub tube_id: u64,
    pub chunk: i64,
    pub labels: Vec<(String, f64)>,
}

impl ActionReport {
    /// Labels whose confidence is above `tau`.
    pub fn accepted(&self, tau: f64) -> impl Iterator<Item = &str> {
        self.labels
            .iter()
            .filter(move |(_, c)| *c > tau)
            .map(|(l, _)| l.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvocationLedger {
    pub count: u64,
    pub total_cost_s: f64,
    pub per_worker_busy_s: Vec<f64>,
}

struct Workers {
    count: u64,
    busy_until: Vec<f64>,
    busy: Vec<f64>,
}

pub struct Oracle {
    pub config: OracleConfig,
    actions: Vec<String>,
    workers: Mutex<Workers>,
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn hash_str(s: &str) -> u64 {
    // FNV-1a: stable across platforms and releases
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

fn keyed_rng(seed: u64, parts: &[u64]) -> ChaCha8Rng {
    let h = parts.iter().fold(mix(seed), |h, &p| mix(h ^ p));
    ChaCha8Rng::seed_from_u64(h)
}

const ACTION_TAG: u64 = 0x41;
const REID_TAG: u64 = 0x52;

fn crop_key(c: &Crop) -> (u64, u64, u64) {
    (hash_str(&c.camera_id), c.frame_index, c.box_id as u64)
}

impl Oracle {
    /// `actions` is the vocabulary's action set; wrong answers are drawn from it.
    pub fn new(config: OracleConfig, actions: impl IntoIterator<Item = String>) -> Oracle {
        let actions: BTreeSet<String> = actions.into_iter().collect();
        let n = config.gpu_workers.max(1);
        Oracle {
            config,
            actions: actions.into_iter().collect(),
            workers: Mutex::new(Workers {
                count: 0,
                busy_until: vec![0.0; n],
                busy: vec![0.0; n],
            }),
        }
    }

    /// The answer for one chunk of one tube. Chunks without any true action
    /// report nothing; otherwise the accuracy coin decides between the truth
    /// and a single wrong label.
    pub fn answer_actions(&self, tube_id: u64, chunk: i64, gt: &BTreeSet<String>) -> ActionReport {
        let mut labels = Vec::new();
        if !gt.is_empty() {
            let mut rng = keyed_rng(self.config.seed, &[ACTION_TAG, tube_id, chunk as u64]);
            if rng.gen_bool(self.config.p_action) {
                labels.extend(gt.iter().map(|a| (a.clone(), 1.0)));
            } else {
                let wrong: Vec<&String> = self.actions.iter().filter(|a| !gt.contains(*a)).collect();
                if !wrong.is_empty() {
                    labels.push((wrong[rng.gen_range(0..wrong.len())].clone(), 1.0));
                }
            }
        }
        ActionReport {
            tube_id,
            chunk,
            labels,
        }
    }

    /// Runs one action query submitted at `submit_ts`; returns the report and
    /// the simulated time at which it finishes.
    pub fn detect_actions(
        &self,
        tube_id: u64,
        chunk: i64,
        gt: &BTreeSet<String>,
        submit_ts: f64,
    ) -> (ActionReport, f64) {
        let report = self.answer_actions(tube_id, chunk, gt);
        (report, self.dispatch(submit_ts))
    }

    /// Charges one invocation to the earliest free worker.
    pub fn dispatch(&self, submit_ts: f64) -> f64 {
        let cost = self.config.action_cost_s;
        let mut w = self.workers.lock().unwrap();
        let mut best = 0;
        for i in 1..w.busy_until.len() {
            if w.busy_until[i] < w.busy_until[best] {
                best = i;
            }
        }
        let start = w.busy_until[best].max(submit_ts);
        let finish = start + cost;
        w.busy_until[best] = finish;
        w.busy[best] += cost;
        w.count += 1;
        finish
    }

    pub fn same_identity(&self, a: &Crop, b: &Crop) -> bool {
        let (ka, kb) = (crop_key(a), crop_key(b));
        let (lo, hi) = if ka <= kb { (ka, kb) } else { (kb, ka) };
        let mut rng = keyed_rng(self.config.seed, &[REID_TAG, lo.0, lo.1, lo.2, hi.0, hi.1, hi.2]);
        let truth = a.gt_identity.is_some() && a.gt_identity == b.gt_identity;
        if rng.gen_bool(self.config.p_reid) {
            truth
        } else {
            !truth
        }
    }

    pub fn ledger(&self) -> InvocationLedger {
        let w = self.workers.lock().unwrap();
        InvocationLedger {
            count: w.count,
            total_cost_s: w.count as f64 * self.config.action_cost_s,
            per_worker_busy_s: w.busy.clone(),
        }
    }
}
