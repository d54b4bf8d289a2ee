//! End-to-end micro scenarios: the full pipeline against the brute-force
//! matcher fed by the brute-force spatial operators.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xcam::ingest::CameraTopology;
use xcam::matcher::{Atom, Mode};
use xcam::pipeline::{make_atom, run, RunConfig};
use xcam::rules::{load_graphs, ActivityGraph, Vocabulary};
use xcam::spatial::{chunk_index, Interval, SpatialConfig};
use xcam::tracker::{Tube, TubeStore};

use super::{matcher_ref, micro, spatial_ref};

pub const MICRO_RULES: &str = "\
r1: p: person; (p stop) then (p move)
r2: p: person, q: person; (p near q) and (p give) then (q disappear)
r3: p: person; (p talk) or (p stop) and (p move)
r4: p: person; (p stop) then not (p give) then (p move)
r5: p: person; (p talk) then (p give)
r6: p: person, q: person; (p near q) then (p talk) and (q stop)
r7: p: person, b: bag; (p approach b) and (p use-phone)
r8: p: person, c: car; (p near c) and ((p move) then (p disappear))
";

pub fn micro_graphs() -> Vec<ActivityGraph> {
    load_graphs(MICRO_RULES, &Vocabulary::standard()).unwrap()
}

fn chunk_spans(t: &Tube, t_chunk: f64) -> Vec<(Interval, BTreeSet<String>)> {
    let mut out: Vec<(i64, Interval, BTreeSet<String>)> = Vec::new();
    for b in &t.boxes {
        let k = chunk_index(b.timestamp, t_chunk);
        match out.last_mut() {
            Some((kk, iv, labels)) if *kk == k => {
                iv.end = b.timestamp;
                labels.extend(b.gt_actions.iter().cloned());
            }
            _ => out.push((k, Interval::point(b.timestamp), b.gt_actions.iter().cloned().collect())),
        }
    }
    out.into_iter().map(|(_, iv, l)| (iv, l)).collect()
}

/// Atoms over finished tubes from the reference operators and the true
/// per-chunk action labels.
pub fn reference_atoms(store: &TubeStore, cfg: &SpatialConfig) -> Vec<Arc<Atom>> {
    let tubes: Vec<&Tube> = store.iter().collect();
    let mut out = Vec::new();
    for t in &tubes {
        for iv in spatial_ref::stop(t, cfg) {
            out.push(make_atom("stop", t, None, iv, iv.end));
        }
        for iv in spatial_ref::move_(t, cfg) {
            out.push(make_atom("move", t, None, iv, iv.end));
        }
        if let Some(iv) = spatial_ref::disappear(t) {
            out.push(make_atom("disappear", t, None, iv, iv.end));
        }
        if t.is_person() {
            for (iv, labels) in chunk_spans(t, cfg.t_chunk) {
                for l in labels {
                    out.push(make_atom(&l, t, None, iv, iv.end));
                }
            }
        }
    }
    for (i, a) in tubes.iter().enumerate() {
        for b in &tubes[i + 1..] {
            for iv in spatial_ref::near(a, b, cfg) {
                out.push(make_atom("near", a, Some(b), iv, iv.end));
            }
            for iv in spatial_ref::approach(a, b, cfg) {
                out.push(make_atom("approach", a, Some(b), iv, iv.end));
            }
        }
    }
    out
}

pub struct SceneOutcome {
    pub want: Vec<String>,
    pub lazy: Vec<String>,
    pub strawman: Vec<String>,
}

pub fn run_scene(seed: u64, graphs: &[ActivityGraph]) -> SceneOutcome {
    let trace = micro::random_trace(&mut ChaCha8Rng::seed_from_u64(seed));
    let topo = CameraTopology::default();
    let actions: Vec<String> = Vocabulary::standard().actions.into_iter().collect();
    let keys = |mode| {
        let cfg = RunConfig { mode, ..RunConfig::default() };
        let out = run(&trace, &topo, graphs, actions.clone(), &cfg);
        let mut k: Vec<String> = out.events.iter().map(|e| e.key()).collect();
        k.sort();
        (k, out.tracker.store)
    };
    let (lazy, store) = keys(Mode::Lazy);
    let (strawman, _) = keys(Mode::Strawman);
    let want = matcher_ref::brute_force(graphs, &reference_atoms(&store, &SpatialConfig::default()));
    SceneOutcome { want, lazy, strawman }
}
