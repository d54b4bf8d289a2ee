use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use xcam::ingest::{CameraTopology, Trace, DEFAULT_CACHE_LIMIT};
use xcam::matcher::Mode;
use xcam::metrics::{generate, parse_event_log, parse_gt, score, sweep, RunFigures, ScenarioSpec, SweepConfig};
use xcam::pipeline::{run, RunConfig, RunOutput};
use xcam::rules::{load_graphs, ActivityGraph, Vocabulary, STANDARD_RULES};
use xcam::spatial::{self, SpatialConfig, SpatialOp};

type Result<T> = std::result::Result<T, Box<dyn Error>>;

#[derive(Parser)]
#[command(name = "xcam", version, about = "Cross-camera complex activity detection over detection traces")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compile rules and print each activity graph.
    Parse(RuleArgs),
    /// Generate a trace, topology and ground truth from a scenario file.
    Gen {
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides the scenario's own seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for trace.txt, topology.txt and gt.txt.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        rules: RuleArgs,
    },
    /// Run the pipeline and print the event log followed by the accounting.
    Run {
        #[command(flatten)]
        input: TraceArgs,
        #[command(flatten)]
        rules: RuleArgs,
        #[command(flatten)]
        cfg: RunArgs,
        /// Also score against this ground truth.
        #[arg(long)]
        gt: Option<PathBuf>,
    },
    /// Score an event log against ground truth.
    Eval {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, default_value_t = xcam::metrics::DEFAULT_TOLERANCE_S)]
        tolerance: f64,
    },
    /// Precision/recall matrix over oracle success probabilities.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        rules: RuleArgs,
        #[arg(long, value_delimiter = ',', default_value = "1.0,0.75,0.5")]
        p_reid_grid: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1.0,0.75,0.5")]
        p_action_grid: Vec<f64>,
        /// Number of seeds per cell, starting at 1.
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Lazy)]
        mode: ModeArg,
        /// Matrix output; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Track a trace and print the tubes in trace format.
    DumpTubes {
        #[command(flatten)]
        input: TraceArgs,
    },
    /// Evaluate one spatial operator over the tubes of a trace.
    Probe {
        #[command(flatten)]
        input: TraceArgs,
        /// stop, move, disappear, near or approach.
        #[arg(long)]
        op: String,
    },
}

#[derive(Args)]
struct RuleArgs {
    /// Rule file; the bundled standard rules when absent.
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Vocabulary file; the bundled vocabulary when absent.
    #[arg(long)]
    vocab: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    topology: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Lazy,
    Strawman,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Lazy => Mode::Lazy,
            ModeArg::Strawman => Mode::Strawman,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Lazy)]
    mode: ModeArg,
    /// Replay speed relative to real time; `inf` for as fast as possible.
    #[arg(long, default_value_t = f64::INFINITY)]
    speed: f64,
    #[arg(long, default_value_t = DEFAULT_CACHE_LIMIT)]
    cache_limit_bytes: u64,
    #[arg(long, default_value_t = 1.0)]
    p_action: f64,
    #[arg(long, default_value_t = 1.0)]
    p_reid: f64,
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    gpu_workers: usize,
    #[arg(long, default_value_t = 40.0)]
    action_cost_ms: f64,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut c = RunConfig {
            mode: self.mode.into(),
            speed: self.speed,
            cache_limit_bytes: self.cache_limit_bytes,
            ..RunConfig::default()
        };
        c.oracle.p_action = self.p_action;
        c.oracle.p_reid = self.p_reid;
        c.oracle.tau = self.tau;
        c.oracle.seed = self.seed;
        c.oracle.gpu_workers = self.gpu_workers;
        c.oracle.action_cost_s = self.action_cost_ms / 1000.0;
        c.oracle.validate()?;
        if !(self.speed > 0.0) {
            return Err("--speed must be positive".into());
        }
        Ok(c)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

impl RuleArgs {
    fn vocab(&self) -> Result<Vocabulary> {
        Ok(match &self.vocab {
            Some(p) => Vocabulary::load(p)?,
            None => Vocabulary::standard(),
        })
    }

    fn load(&self) -> Result<(Vec<ActivityGraph>, Vec<String>)> {
        let vocab = self.vocab()?;
        let text = match &self.rules {
            Some(p) => read(p)?,
            None => STANDARD_RULES.to_string(),
        };
        let graphs = load_graphs(&text, &vocab)?;
        Ok((graphs, vocab.actions.into_iter().collect()))
    }
}

impl TraceArgs {
    fn load(&self) -> Result<(Trace, CameraTopology)> {
        let trace = Trace::load(&self.trace)?;
        let mut topo = match &self.topology {
            Some(p) => CameraTopology::load(p)?,
            None => CameraTopology::default(),
        };
        for ev in trace.events() {
            topo.add_camera(&ev.camera_id);
        }
        Ok((trace, topo))
    }

    /// Tubes come from a perfect-oracle run of the standard rules.
    fn tracked(&self) -> Result<RunOutput> {
        let (trace, topo) = self.load()?;
        let (graphs, actions) = RuleArgs { rules: None, vocab: None }.load()?;
        Ok(run(&trace, &topo, &graphs, actions, &RunConfig::default()))
    }
}

/// Writes to stdout; a closed pipe (`| head`) ends output quietly.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Parse(rules) => {
            let (graphs, _) = rules.load()?;
            let dumps: Vec<String> = graphs.iter().map(|g| g.dump()).collect();
            emit(&dumps.join("\n"));
        }
        Cmd::Gen { scenario, seed, out, rules } => {
            let spec = ScenarioSpec::load(&scenario)?;
            let (graphs, _) = rules.load()?;
            let g = generate(&spec, seed.unwrap_or(spec.seed), &graphs)?;
            fs::create_dir_all(&out)?;
            fs::write(out.join("trace.txt"), g.trace.to_text())?;
            fs::write(out.join("topology.txt"), g.topology.to_text())?;
            fs::write(out.join("gt.txt"), g.gt_text())?;
            eprintln!("{} detections, {} planted, {} ground truth entries", g.trace.len(), g.plants.len(), g.gt.len());
        }
        Cmd::Run { input, rules, cfg, gt } => {
            let (trace, topo) = input.load()?;
            let (graphs, actions) = rules.load()?;
            let config = cfg.config()?;
            let t = Instant::now();
            let out = run(&trace, &topo, &graphs, actions, &config);
            let wall = t.elapsed().as_secs_f64();
            let mut text = out.event_log();
            for line in out.accounting.to_text().lines() {
                text += &format!("# {line}\n");
            }
            text += &format!("# wall_s={wall:.3}\n");
            if let Some(gt) = gt {
                let mut rep = score(&xcam::metrics::parsed(&out.events), &parse_gt(&read(&gt)?)?, xcam::metrics::DEFAULT_TOLERANCE_S);
                rep.run = Some(RunFigures {
                    throughput_eps: out.accounting.detections as f64 / wall.max(1e-9),
                    uploaded_bytes: out.accounting.uploaded_bytes,
                    peak_cache_bytes: out.accounting.peak_cache_bytes,
                    invocations: out.accounting.action_invocations,
                });
                for line in rep.to_text().lines() {
                    text += &format!("# {line}\n");
                }
            }
            emit(&text);
        }
        Cmd::Eval { events, gt, tolerance } => {
            let events = parse_event_log(&read(&events)?)?;
            let gt = parse_gt(&read(&gt)?)?;
            emit(&score(&events, &gt, tolerance).to_text());
        }
        Cmd::Sweep {
            scenario,
            rules,
            p_reid_grid,
            p_action_grid,
            seeds,
            mode,
            out,
        } => {
            if seeds == 0 {
                return Err("--seeds must be at least 1".into());
            }
            for p in p_reid_grid.iter().chain(&p_action_grid) {
                if !(0.0..=1.0).contains(p) {
                    return Err(format!("grid value {p} outside [0, 1]").into());
                }
            }
            let spec = ScenarioSpec::load(&scenario)?;
            let (graphs, actions) = rules.load()?;
            let cfg = SweepConfig {
                p_reid: p_reid_grid,
                p_action: p_action_grid,
                seeds: (1..=seeds).collect(),
                tolerance_s: xcam::metrics::DEFAULT_TOLERANCE_S,
                run: RunConfig {
                    mode: mode.into(),
                    ..RunConfig::default()
                },
            };
            let text = sweep(&spec, &graphs, &actions, &cfg)?.to_text();
            match out {
                Some(p) => fs::write(p, text)?,
                None => emit(&text),
            }
        }
        Cmd::DumpTubes { input } => {
            let out = input.tracked()?;
            emit(&out.tracker.store.iter().map(|t| t.to_trace_text()).collect::<String>());
        }
        Cmd::Probe { input, op } => {
            let op = SpatialOp::from_name(&op)
                .filter(|o| !matches!(o, SpatialOp::ReIdentified | SpatialOp::SameCamera))
                .ok_or_else(|| format!("unknown or unsupported operator `{op}`"))?;
            let (_, topo) = input.load()?;
            let out = input.tracked()?;
            let cfg = SpatialConfig::default();
            let tubes: Vec<_> = out.tracker.store.iter().collect();
            let mut text = String::new();
            for (i, a) in tubes.iter().enumerate() {
                let found: Vec<(u64, _)> = match op {
                    SpatialOp::Stop => spatial::stop(a, &cfg).into_iter().map(|iv| (a.tube_id, iv)).collect(),
                    SpatialOp::Move => spatial::move_(a, &cfg).into_iter().map(|iv| (a.tube_id, iv)).collect(),
                    SpatialOp::Disappear => spatial::disappear(a, topo.frame_size(&a.camera_id), &cfg)
                        .map(|(iv, _)| (a.tube_id, iv))
                        .into_iter()
                        .collect(),
                    _ => tubes[i + 1..]
                        .iter()
                        .flat_map(|b| {
                            let ivs = if op == SpatialOp::Near { spatial::near(a, b, &cfg) } else { spatial::approach(a, b, &cfg) };
                            ivs.into_iter().map(|iv| (b.tube_id, iv))
                        })
                        .collect(),
                };
                for (other, iv) in found {
                    if op.is_binary() {
                        text += &format!("{op} {} {other} {iv}\n", a.tube_id);
                    } else {
                        text += &format!("{op} {} {iv}\n", a.tube_id);
                    }
                }
            }
            emit(&text);
        }
    }
    Ok(())
}
