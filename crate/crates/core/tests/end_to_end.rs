use xcam::matcher::Mode;
use xcam::metrics::{generate, parsed, score, RandomPlants, ScenarioSpec, DEFAULT_TOLERANCE_S};
use xcam::pipeline::{run, RunConfig};
use xcam::rules::{load_graphs, Vocabulary, STANDARD_RULES};

fn scene(cams: usize, plants: usize, bg: f64, seed: u64) -> xcam::metrics::Generated {
    let mut s = ScenarioSpec::chain(cams, 60.0 * plants as f64 / cams as f64 + 120.0, (4.0, 20.0));
    s.random = Some(RandomPlants {
        count: plants,
        activities: Vec::new(),
    });
    s.background.per_lane_per_min = bg;
    generate(&s, seed, &graphs()).unwrap()
}

fn graphs() -> Vec<xcam::rules::ActivityGraph> {
    load_graphs(STANDARD_RULES, &Vocabulary::standard()).unwrap()
}

fn actions() -> Vec<String> {
    Vocabulary::standard().actions.into_iter().collect()
}

#[test]
fn perfect_oracles_recover_the_ground_truth() {
    let g = scene(3, 14, 1.0, 5);
    for mode in [Mode::Lazy, Mode::Strawman] {
        let cfg = RunConfig { mode, ..RunConfig::default() };
        let out = run(&g.trace, &g.topology, &graphs(), actions(), &cfg);
        let r = score(&parsed(&out.events), &g.gt, DEFAULT_TOLERANCE_S);
        eprintln!("{}\n{}", out.accounting.to_text(), r.to_text());
        assert_eq!(r.overall.fp, 0, "{mode:?}");
        assert_eq!(r.overall.fn_, 0, "{mode:?}");
    }
}

#[test]
fn lazy_and_strawman_report_the_same_events() {
    let g = scene(2, 10, 2.0, 8);
    let lazy = run(&g.trace, &g.topology, &graphs(), actions(), &RunConfig::default());
    let straw = run(
        &g.trace,
        &g.topology,
        &graphs(),
        actions(),
        &RunConfig {
            mode: Mode::Strawman,
            ..RunConfig::default()
        },
    );
    let key = |o: &xcam::pipeline::RunOutput| {
        let mut v: Vec<String> = o.events.iter().map(|e| e.log_line().split_whitespace().take(2).chain(e.log_line().split_whitespace().skip(3)).collect::<Vec<_>>().join(" ")).collect();
        v.sort();
        v
    };
    assert_eq!(key(&lazy), key(&straw));
    assert!(lazy.accounting.action_invocations <= straw.accounting.action_invocations);
    assert!(lazy.accounting.uploaded_bytes < straw.accounting.uploaded_bytes);
}


#[test]
fn eight_cameras_replay_faster_than_real_time() {
    let spec = ScenarioSpec::load(concat!(env!("CARGO_MANIFEST_DIR"), "/assets/scenarios/crowd_eight.toml")).unwrap();
    let g = generate(&spec, spec.seed, &graphs()).unwrap();
    let t = std::time::Instant::now();
    let out = run(&g.trace, &g.topology, &graphs(), actions(), &RunConfig::default());
    let wall = t.elapsed().as_secs_f64();
    let (lo, hi) = g.trace.span();
    let speedup = (hi - lo) / wall;
    eprintln!("{} detections over {:.0}s replayed in {wall:.2}s: {speedup:.0}x real time", out.accounting.detections, hi - lo);
    assert!(speedup > 20.0, "{speedup:.1}x");
}
