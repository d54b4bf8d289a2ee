//! Synthetic multi-camera scenes with planted complex activities.
//!
//! People walk along horizontal lanes spaced so that boxes in different
//! lanes are never proximate. Background walkers stream through lanes at a
//! fixed speed; planted activities book their lanes (or a whole camera when
//! a car is involved) so nothing else wanders into them. The ground truth is
//! not taken from the script: it is derived by running the exhaustive matcher
//! over ground-truth tubes, and every plant must show up in it.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use thiserror::Error;

use super::score::{dedup, parsed, GroundTruthActivity, DEFAULT_TOLERANCE_S};
use crate::ingest::{ordered, BoundingBox, CameraTopology, DetectionEvent, Trace};
use crate::matcher::{reference_match, Plan};
use crate::pipeline::batch_atoms;
use crate::rules::ActivityGraph;
use crate::spatial::SpatialConfig;
use crate::tracker::{TubeBox, TubeStore};

pub const WALK_SPEED: f64 = 160.0;
pub const PERSON: (f64, f64) = (60.0, 150.0);
pub const BAG: (f64, f64) = (40.0, 40.0);
pub const CAR: (f64, f64) = (300.0, 150.0);
const LANE_TOP: f64 = 40.0;
const LANE_PITCH: f64 = 260.0;
/// Quiet time around every booking, longer than the tracker's association gap.
const PAD: f64 = 3.0;
const BACKGROUND_ACTIONS: [&str; 3] = ["eat", "drink", "read"];

pub const TEMPLATES: [&str; 7] = [
    "use_phone_then_talk",
    "stand_phone_open_door",
    "approach_and_give",
    "walk_together_then_talk",
    "load_and_get_on_car",
    "ride_with_bag_two_cams",
    "walk_together_two_cams",
];

/// Which group a template belongs to: nn-only, mixed or spatial-only.
pub fn category(activity: &str) -> Option<&'static str> {
    match activity {
        "use_phone_then_talk" => Some("nn-only"),
        "stand_phone_open_door" | "approach_and_give" | "walk_together_then_talk" | "load_and_get_on_car" => {
            Some("mixed")
        }
        "ride_with_bag_two_cams" | "walk_together_two_cams" => Some("spatial-only"),
        _ => None,
    }
}

fn two_camera(activity: &str) -> bool {
    activity.ends_with("_two_cams")
}

fn default_fps() -> f64 {
    10.0
}
fn default_width() -> f64 {
    1920.0
}
fn default_height() -> f64 {
    1080.0
}
fn default_label() -> String {
    "person".into()
}
fn default_action_prob() -> f64 {
    0.3
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    pub id: String,
    #[serde(default = "default_width")]
    pub width: f64,
    #[serde(default = "default_height")]
    pub height: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub a: String,
    pub b: String,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundSpec {
    /// Mean walkers entering each lane per minute.
    #[serde(default)]
    pub per_lane_per_min: f64,
    /// Chance that a background walker performs an unrelated action.
    #[serde(default = "default_action_prob")]
    pub action_prob: f64,
    /// Chance that a walker stops mid-lane for a few seconds.
    #[serde(default)]
    pub pause_prob: f64,
    /// Chance that a walker has a companion at their side.
    #[serde(default)]
    pub pair_prob: f64,
}

impl Default for BackgroundSpec {
    fn default() -> Self {
        BackgroundSpec {
            per_lane_per_min: 0.0,
            action_prob: default_action_prob(),
            pause_prob: 0.0,
            pair_prob: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionSpec {
    pub from: f64,
    pub to: f64,
    pub name: String,
}

/// A scripted walker visit: straight segments between `[t, x, y]` keyframes.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkerSpec {
    #[serde(default = "default_label")]
    pub label: String,
    pub identity: u64,
    pub camera: String,
    pub size: Option<[f64; 2]>,
    pub keyframes: Vec<[f64; 3]>,
    #[serde(default)]
    pub actions: Vec<ActionSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSpec {
    pub activity: String,
    pub camera: String,
    /// Second camera for the two-camera activities.
    pub to: Option<String>,
    pub at: f64,
    pub lane: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomPlants {
    pub count: usize,
    /// Templates to cycle through; all seven when empty.
    #[serde(default)]
    pub activities: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    #[serde(default)]
    pub name: String,
    pub duration_s: f64,
    #[serde(default = "default_fps")]
    pub fps: f64,
    #[serde(default)]
    pub seed: u64,
    pub cameras: Vec<CameraSpec>,
    #[serde(default)]
    pub links: Vec<LinkSpec>,
    #[serde(default)]
    pub background: BackgroundSpec,
    #[serde(default)]
    pub walkers: Vec<WalkerSpec>,
    #[serde(default)]
    pub plants: Vec<PlantSpec>,
    pub random: Option<RandomPlants>,
}

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed scenario: {0}")]
    Format(#[from] toml::de::Error),
    #[error("{0}")]
    Invalid(String),
    #[error("plant {index} ({activity} at {at:.1}s): {reason}")]
    Plant {
        index: usize,
        activity: String,
        at: f64,
        reason: String,
    },
    #[error("planted {activity} at {at:.1}s is not derivable from the generated trace")]
    NotDerivable { activity: String, at: f64 },
}

impl ScenarioSpec {
    pub fn from_toml(text: &str) -> Result<ScenarioSpec, SpecError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ScenarioSpec, SpecError> {
        ScenarioSpec::from_toml(&std::fs::read_to_string(path)?)
    }

    /// A chain of `n` cameras `c1 - c2 - ...` with the given travel window.
    pub fn chain(n: usize, duration_s: f64, travel: (f64, f64)) -> ScenarioSpec {
        let cameras: Vec<CameraSpec> = (1..=n)
            .map(|i| CameraSpec {
                id: format!("c{i}"),
                width: default_width(),
                height: default_height(),
            })
            .collect();
        let links = (1..n)
            .map(|i| LinkSpec {
                a: format!("c{i}"),
                b: format!("c{}", i + 1),
                min: travel.0,
                max: travel.1,
            })
            .collect();
        ScenarioSpec {
            name: format!("chain{n}"),
            duration_s,
            fps: default_fps(),
            seed: 0,
            cameras,
            links,
            background: BackgroundSpec::default(),
            walkers: Vec::new(),
            plants: Vec::new(),
            random: None,
        }
    }

    pub fn topology(&self) -> CameraTopology {
        let mut topo = CameraTopology::default();
        for c in &self.cameras {
            topo.cameras.insert(c.id.clone(), (c.width, c.height));
        }
        for l in &self.links {
            topo.add_edge(&l.a, &l.b, l.min, l.max);
        }
        topo
    }

    fn check(&self) -> Result<(), SpecError> {
        let bad = |m: String| Err(SpecError::Invalid(m));
        if !(self.duration_s > 0.0) || !(self.fps > 0.0) {
            return bad("duration_s and fps must be positive".into());
        }
        if self.cameras.is_empty() {
            return bad("at least one camera is required".into());
        }
        let ids: BTreeSet<&str> = self.cameras.iter().map(|c| c.id.as_str()).collect();
        if ids.len() != self.cameras.len() {
            return bad("camera ids must be unique".into());
        }
        for c in &self.cameras {
            if !crate::ingest::is_camera_id(&c.id) {
                return bad(format!("invalid camera id `{}`", c.id));
            }
            if c.height < LANE_TOP + PERSON.1 || c.width < 4.0 * CAR.0 {
                return bad(format!("camera `{}` is too small for the lane layout", c.id));
            }
        }
        for l in &self.links {
            if !ids.contains(l.a.as_str()) || !ids.contains(l.b.as_str()) {
                return bad(format!("link {}-{} names an unknown camera", l.a, l.b));
            }
            if !(0.0 <= l.min && l.min <= l.max) {
                return bad(format!("link {}-{} has an empty travel window", l.a, l.b));
            }
        }
        let bg = &self.background;
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        if !unit(bg.action_prob) || !unit(bg.pause_prob) || !unit(bg.pair_prob) || !(bg.per_lane_per_min >= 0.0) {
            return bad("background rates out of range".into());
        }
        for w in &self.walkers {
            if !ids.contains(w.camera.as_str()) {
                return bad(format!("walker {} is in unknown camera `{}`", w.identity, w.camera));
            }
            if w.keyframes.is_empty() || w.keyframes.windows(2).any(|k| k[1][0] < k[0][0]) {
                return bad(format!("walker {} needs keyframes in time order", w.identity));
            }
        }
        Ok(())
    }
}

/// One continuous appearance of one object in one camera.
#[derive(Debug, Clone)]
struct Visit {
    camera: usize,
    label: String,
    identity: u64,
    size: (f64, f64),
    keys: Vec<(f64, f64, f64)>,
    actions: Vec<(f64, f64, String)>,
}

impl Visit {
    fn new(camera: usize, label: &str, identity: u64, size: (f64, f64), t: f64, x: f64, y: f64) -> Visit {
        Visit {
            camera,
            label: label.into(),
            identity,
            size,
            keys: vec![(t, x, y)],
            actions: Vec::new(),
        }
    }

    fn last(&self) -> (f64, f64, f64) {
        *self.keys.last().unwrap()
    }

    fn start(&self) -> f64 {
        self.keys[0].0
    }

    fn end(&self) -> f64 {
        self.last().0
    }

    fn walk_to(&mut self, x: f64, speed: f64) -> &mut Self {
        let (t, x0, y) = self.last();
        self.keys.push((t + (x - x0).abs() / speed, x, y));
        self
    }

    fn wait(&mut self, d: f64) -> &mut Self {
        let (t, x, y) = self.last();
        self.keys.push((t + d, x, y));
        self
    }

    fn act(&mut self, from: f64, to: f64, name: &str) -> &mut Self {
        self.actions.push((from, to, name.into()));
        self
    }

    fn position(&self, t: f64) -> (f64, f64) {
        let i = self.keys.partition_point(|k| k.0 <= t);
        if i == 0 {
            return (self.keys[0].1, self.keys[0].2);
        }
        if i == self.keys.len() {
            let k = self.last();
            return (k.1, k.2);
        }
        let (a, b) = (self.keys[i - 1], self.keys[i]);
        let f = if b.0 > a.0 { (t - a.0) / (b.0 - a.0) } else { 1.0 };
        (a.1 + f * (b.1 - a.1), a.2 + f * (b.2 - a.2))
    }

    fn actions_at(&self, t: f64) -> Vec<String> {
        let mut v: Vec<String> = self
            .actions
            .iter()
            .filter(|(a, b, _)| *a <= t && t < *b)
            .map(|(_, _, n)| n.clone())
            .collect();
        v.sort();
        v.dedup();
        v
    }
}

#[derive(Debug, Clone, Copy)]
struct Booking {
    camera: usize,
    /// `None` books every lane.
    lane: Option<usize>,
    t0: f64,
    t1: f64,
}

impl Booking {
    fn clashes(&self, o: &Booking) -> bool {
        self.camera == o.camera
            && (self.lane.is_none() || o.lane.is_none() || self.lane == o.lane)
            && self.t0 < o.t1 + PAD
            && o.t0 < self.t1 + PAD
    }
}

/// What a plant was scripted to produce, for the self-check.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantRecord {
    pub activity: String,
    pub at: f64,
    pub end: f64,
    pub cameras: Vec<String>,
    pub identities: Vec<u64>,
}

pub struct Generated {
    pub trace: Trace,
    pub topology: CameraTopology,
    pub gt: Vec<GroundTruthActivity>,
    pub plants: Vec<PlantRecord>,
}

impl Generated {
    /// Ground-truth file: the plants as comments, then one line per activity.
    pub fn gt_text(&self) -> String {
        let mut s = String::new();
        for p in &self.plants {
            let ids: Vec<String> = p.identities.iter().map(u64::to_string).collect();
            s.push_str(&format!(
                "# planted {} {:.1}-{:.1} {} {}\n",
                p.activity,
                p.at,
                p.end,
                ids.join(","),
                p.cameras.join(",")
            ));
        }
        s.push_str(&super::score::format_gt(&self.gt));
        s
    }
}

struct Builder<'a> {
    spec: &'a ScenarioSpec,
    rng: ChaCha8Rng,
    visits: Vec<Visit>,
    bookings: Vec<Booking>,
    plants: Vec<PlantRecord>,
    next_identity: u64,
}

struct Scene {
    w: f64,
    lanes: usize,
}

impl<'a> Builder<'a> {
    fn scene(&self, cam: usize) -> Scene {
        let c = &self.spec.cameras[cam];
        Scene {
            w: c.width,
            lanes: (((c.height - LANE_TOP - PERSON.1) / LANE_PITCH).floor() as usize) + 1,
        }
    }

    fn camera_index(&self, id: &str) -> Option<usize> {
        self.spec.cameras.iter().position(|c| c.id == id)
    }

    fn fresh(&mut self) -> u64 {
        let g = self.next_identity;
        self.next_identity += 1;
        g
    }

    fn quantize(&self, t: f64) -> f64 {
        (t * self.spec.fps).round() / self.spec.fps
    }

    fn travel(&self, a: usize, b: usize) -> Option<f64> {
        let (ia, ib) = (&self.spec.cameras[a].id, &self.spec.cameras[b].id);
        self.spec
            .links
            .iter()
            .find(|l| (&l.a == ia && &l.b == ib) || (&l.a == ib && &l.b == ia))
            .map(|l| self.quantize(l.min + 0.25 * (l.max - l.min)).max(l.min))
    }

    /// Scripts one plant. Returns its visits and bookings without committing.
    fn script(
        &mut self,
        activity: &str,
        cam: usize,
        to: Option<usize>,
        t0: f64,
        lane: usize,
    ) -> Result<(Vec<Visit>, Vec<Booking>), String> {
        let sc = self.scene(cam);
        if lane >= sc.lanes {
            return Err(format!("lane {lane} does not exist"));
        }
        let y = LANE_TOP + LANE_PITCH * lane as f64;
        let exit = sc.w - PERSON.0;
        let v = WALK_SPEED;
        let mut visits = Vec::new();
        let whole = |t0: f64, t1: f64| Booking { camera: cam, lane: None, t0, t1 };
        let in_lane = |camera: usize, lane: usize, t0: f64, t1: f64| Booking {
            camera,
            lane: Some(lane),
            t0,
            t1,
        };
        let bookings;
        match activity {
            "use_phone_then_talk" => {
                let g = self.fresh();
                let mut p = Visit::new(cam, "person", g, PERSON, t0, 0.0, y);
                p.walk_to(800.0, v);
                let s = p.end();
                p.wait(9.0).act(s + 1.0, s + 4.0, "use-phone").act(s + 5.0, s + 8.0, "talk");
                p.walk_to(exit, v);
                bookings = vec![in_lane(cam, lane, t0, p.end())];
                visits.push(p);
            }
            "stand_phone_open_door" => {
                let (gp, gc) = (self.fresh(), self.fresh());
                let car_x = 1200.0;
                let mut p = Visit::new(cam, "person", gp, PERSON, t0 + 1.0, 0.0, y);
                p.walk_to(700.0, v);
                let s1 = p.end();
                p.wait(4.0).act(s1 + 0.5, s1 + 3.5, "use-phone");
                p.walk_to(car_x - PERSON.0 - 10.0, v);
                let s2 = p.end();
                p.wait(3.0).act(s2 + 0.5, s2 + 2.5, "open-door");
                p.walk_to(0.0, v);
                let mut c = Visit::new(cam, "car", gc, CAR, t0, car_x, y);
                c.wait(p.end() + 2.0 - t0).walk_to(sc.w - CAR.0, 2.0 * v);
                bookings = vec![whole(t0, c.end())];
                visits.push(p);
                visits.push(c);
            }
            "approach_and_give" => {
                let (g1, g2) = (self.fresh(), self.fresh());
                let stand = 1100.0;
                let mut p2 = Visit::new(cam, "person", g2, PERSON, t0, exit, y);
                p2.walk_to(stand, v);
                let mut p1 = Visit::new(cam, "person", g1, PERSON, t0 + 2.0, 0.0, y);
                p1.walk_to(stand - PERSON.0 - 20.0, v);
                let s = p1.end();
                p1.wait(4.0).act(s + 0.5, s + 2.5, "give");
                p1.walk_to(0.0, v);
                p2.wait(s + 5.0 - p2.end()).walk_to(exit, v);
                bookings = vec![in_lane(cam, lane, t0, p1.end().max(p2.end()))];
                visits.push(p1);
                visits.push(p2);
            }
            "walk_together_then_talk" => {
                let (ga, gb) = (self.fresh(), self.fresh());
                let gap = PERSON.0 + 20.0;
                let mut a = Visit::new(cam, "person", ga, PERSON, t0, gap, y);
                let mut b = Visit::new(cam, "person", gb, PERSON, t0, 0.0, y);
                a.walk_to(1000.0, v);
                b.walk_to(1000.0 - gap, v);
                let s = a.end();
                a.wait(5.0).act(s + 1.0, s + 4.0, "talk");
                b.wait(5.0).act(s + 1.5, s + 4.0, "talk");
                a.walk_to(exit, v);
                b.walk_to(exit - gap, v);
                bookings = vec![in_lane(cam, lane, t0, a.end().max(b.end()))];
                visits.push(a);
                visits.push(b);
            }
            "load_and_get_on_car" => {
                let (gp, gc) = (self.fresh(), self.fresh());
                let car_x = 1200.0;
                let mut p = Visit::new(cam, "person", gp, PERSON, t0 + 1.0, 0.0, y);
                p.walk_to(car_x - PERSON.0 - 10.0, v);
                let s = p.end();
                p.wait(4.0).act(s + 0.5, s + 3.0, "load");
                p.walk_to(car_x + 90.0, v);
                let mut c = Visit::new(cam, "car", gc, CAR, t0, car_x, y);
                c.wait(p.end() + 2.0 - t0).walk_to(sc.w - CAR.0, 2.0 * v);
                bookings = vec![whole(t0, c.end())];
                visits.push(p);
                visits.push(c);
            }
            "ride_with_bag_two_cams" | "walk_together_two_cams" => {
                let cam_b = to.ok_or("needs a second camera (`to`)")?;
                let tau = self.travel(cam, cam_b).ok_or("the two cameras are not linked")?;
                let sb = self.scene(cam_b);
                if lane >= sb.lanes {
                    return Err(format!("lane {lane} does not exist in the second camera"));
                }
                let bag = activity.starts_with("ride");
                let (gp, gq) = (self.fresh(), self.fresh());
                // follower sits left of the leader: a bag, or the second walker
                let (fl, fsize, off) = if bag {
                    ("bag", BAG, BAG.0 + 5.0)
                } else {
                    ("person", PERSON, PERSON.0 + 20.0)
                };
                let fy = if bag { y + 70.0 } else { y };
                let mut lead_a = Visit::new(cam, "person", gp, PERSON, t0, off, y);
                lead_a.walk_to(exit, v);
                let mut fol_a = Visit::new(cam, fl, gq, fsize, t0, 0.0, fy);
                fol_a.walk_to(exit - off, v);
                let tb = self.quantize(lead_a.end() + tau);
                let mut lead_b = Visit::new(cam_b, "person", gp, PERSON, tb, off, y);
                lead_b.walk_to(sb.w - PERSON.0, v);
                let mut fol_b = Visit::new(cam_b, fl, gq, fsize, tb, 0.0, fy);
                fol_b.walk_to(sb.w - PERSON.0 - off, v);
                bookings = vec![
                    in_lane(cam, lane, t0, lead_a.end()),
                    in_lane(cam_b, lane, tb, lead_b.end()),
                ];
                visits.extend([lead_a, fol_a, lead_b, fol_b]);
            }
            other => return Err(format!("no template for activity `{other}`")),
        }
        if to.is_some() && !two_camera(activity) {
            return Err("`to` is only meaningful for two-camera activities".into());
        }
        Ok((visits, bookings))
    }

    fn plant(&mut self, activity: &str, cam: usize, to: Option<usize>, t0: f64, lane: usize) -> Result<(), String> {
        let saved = self.next_identity;
        let (visits, bookings) = match self.script(activity, cam, to, t0, lane) {
            Ok(x) => x,
            Err(e) => {
                self.next_identity = saved;
                return Err(e);
            }
        };
        let end = visits.iter().map(Visit::end).fold(t0, f64::max);
        let problem = if end > self.spec.duration_s {
            Some("runs past the end of the scenario".to_string())
        } else if bookings.iter().any(|b| self.bookings.iter().any(|o| o.clashes(b))) {
            Some("overlaps another plant".to_string())
        } else {
            None
        };
        if let Some(p) = problem {
            self.next_identity = saved;
            return Err(p);
        }
        let mut ids: Vec<u64> = visits.iter().map(|v| v.identity).collect();
        ids.sort();
        ids.dedup();
        let mut cams: Vec<String> = visits.iter().map(|v| self.spec.cameras[v.camera].id.clone()).collect();
        cams.dedup();
        self.plants.push(PlantRecord {
            activity: activity.into(),
            at: t0,
            end,
            cameras: cams,
            identities: ids,
        });
        self.bookings.extend(bookings);
        self.visits.extend(visits);
        Ok(())
    }

    fn linked_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for l in &self.spec.links {
            if let (Some(a), Some(b)) = (self.camera_index(&l.a), self.camera_index(&l.b)) {
                out.push((a, b));
                out.push((b, a));
            }
        }
        out
    }

    fn random_plants(&mut self, r: &RandomPlants) -> Result<(), SpecError> {
        let pool: Vec<String> = if r.activities.is_empty() {
            TEMPLATES.iter().map(|s| s.to_string()).collect()
        } else {
            r.activities.clone()
        };
        let pairs = self.linked_pairs();
        for i in 0..r.count {
            let activity = pool[i % pool.len()].clone();
            let mut placed = false;
            for _ in 0..500 {
                let (cam, to) = if two_camera(&activity) {
                    if pairs.is_empty() {
                        return Err(SpecError::Invalid(format!("{activity} needs linked cameras")));
                    }
                    let (a, b) = pairs[self.rng.gen_range(0..pairs.len())];
                    (a, Some(b))
                } else {
                    (self.rng.gen_range(0..self.spec.cameras.len()), None)
                };
                let lanes = self.scene(cam).lanes;
                let lane = self.rng.gen_range(0..lanes);
                let t0 = self.rng.gen_range(1.0..self.spec.duration_s.max(1.5));
                let t0 = self.quantize(t0);
                if self.plant(&activity, cam, to, t0, lane).is_ok() {
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(SpecError::Invalid(format!(
                    "could not fit random plant {i} ({activity}); lengthen the scenario"
                )));
            }
        }
        Ok(())
    }

    /// Background streams: same speed and direction per lane, never inside a
    /// booked lane. A walker may pause mid-lane or walk with a companion; the
    /// next entry waits out the pause so nobody catches up from behind.
    fn background(&mut self) {
        let bg = self.spec.background.clone();
        if bg.per_lane_per_min <= 0.0 {
            return;
        }
        let mean_gap = 60.0 / bg.per_lane_per_min;
        let side = PERSON.0 + 20.0;
        for cam in 0..self.spec.cameras.len() {
            let sc = self.scene(cam);
            let far = sc.w - PERSON.0;
            let cross = far / WALK_SPEED;
            for lane in 0..sc.lanes {
                let y = LANE_TOP + LANE_PITCH * lane as f64;
                let rightward = lane % 2 == 0;
                let t = self.rng.gen_range(0.0..mean_gap);
                let mut t = self.quantize(t);
                loop {
                    let pause = if self.rng.gen_bool(bg.pause_prob) {
                        let d = self.rng.gen_range(3.0..6.0);
                        self.quantize(d)
                    } else {
                        0.0
                    };
                    let paired = self.rng.gen_bool(bg.pair_prob);
                    if t + cross + pause > self.spec.duration_s {
                        break;
                    }
                    let b = Booking {
                        camera: cam,
                        lane: Some(lane),
                        t0: t,
                        t1: t + cross + pause,
                    };
                    if !self.bookings.iter().any(|o| o.clashes(&b)) {
                        let stop_at = self.rng.gen_range(0.25..0.75) * far;
                        let act = self.rng.gen_bool(bg.action_prob);
                        let mut members = vec![0.0];
                        if paired {
                            members.push(side);
                        }
                        for (k, back) in members.into_iter().enumerate() {
                            let g = self.fresh();
                            // a companion trails by `side` pixels
                            let (x0, x1, xs) = if rightward {
                                (side - back, far - back, stop_at - back)
                            } else {
                                (far - side + back, back, far - stop_at + back)
                            };
                            let mut p = Visit::new(cam, "person", g, PERSON, t, x0, y);
                            if pause > 0.0 {
                                p.walk_to(xs, WALK_SPEED).wait(pause);
                            }
                            p.walk_to(x1, WALK_SPEED);
                            if act && k == 0 {
                                let a = BACKGROUND_ACTIONS[self.rng.gen_range(0..BACKGROUND_ACTIONS.len())];
                                let from = t + self.rng.gen_range(1.0..cross / 2.0);
                                let from = self.quantize(from);
                                let to = from + self.rng.gen_range(2.0..5.0);
                                let to = self.quantize(to);
                                p.act(from, to, a);
                            }
                            self.visits.push(p);
                        }
                    }
                    let u: f64 = self.rng.gen_range(f64::EPSILON..1.0);
                    t = self.quantize(t + pause + PAD + 0.5 + (-u.ln()) * mean_gap);
                }
            }
        }
    }

    fn render(&self) -> Trace {
        let fps = self.spec.fps;
        let mut events = Vec::new();
        for v in &self.visits {
            let cam = &self.spec.cameras[v.camera];
            let f0 = (v.start() * fps - 1e-9).ceil() as u64;
            let f1 = (v.end() * fps + 1e-9).floor() as u64;
            for f in f0..=f1 {
                let t = f as f64 / fps;
                let (x, y) = v.position(t);
                let x = x.round().clamp(0.0, cam.width - v.size.0);
                let y = y.round().clamp(0.0, cam.height - v.size.1);
                events.push(DetectionEvent {
                    camera_id: cam.id.clone(),
                    frame_index: f,
                    box_id: 0,
                    timestamp: t,
                    bbox: BoundingBox::new(x, y, v.size.0, v.size.1),
                    label: v.label.clone(),
                    gt_identity: Some(v.identity),
                    gt_actions: v.actions_at(t),
                });
            }
        }
        // box ids follow identity order within a frame
        events.sort_by_key(|e| e.gt_identity);
        Trace::from_events(events)
    }
}

/// Tubes built straight from the annotations: one per identity per camera
/// visit, in creation order, persons carrying their true identity.
pub fn ground_truth_store(trace: &Trace, gap_s: f64) -> TubeStore {
    let mut store = TubeStore::default();
    let mut open: BTreeMap<(&str, u64), u64> = BTreeMap::new();
    let mut cams: BTreeMap<&str, std::sync::Arc<str>> = BTreeMap::new();
    for ev in ordered(trace) {
        let Some(g) = ev.gt_identity else { continue };
        let key = (ev.camera_id.as_str(), g);
        let b = TubeBox::from_event(ev);
        match open.get(&key) {
            Some(&id) if ev.timestamp - store.get(id).end_ts() <= gap_s => store.append(id, b),
            _ => {
                let cam = cams.entry(&ev.camera_id).or_insert_with(|| ev.camera_id.as_str().into()).clone();
                let id = store.create(cam, &ev.label, b);
                if ev.label == "person" {
                    store.set_identity(id, g);
                }
                if let Some(old) = open.insert(key, id) {
                    store.close(old);
                }
            }
        }
    }
    for id in store.open_ids() {
        store.close(id);
    }
    store
}

/// Activities the exhaustive matcher finds over ground-truth tubes with
/// perfect action answers, deduplicated like scored events.
pub fn derive_ground_truth(
    trace: &Trace,
    topo: &CameraTopology,
    graphs: &[ActivityGraph],
    cfg: &SpatialConfig,
) -> Vec<GroundTruthActivity> {
    let store = ground_truth_store(trace, 2.0);
    let atoms = batch_atoms(&store, topo, cfg, &mut |_, _, boxes| {
        let mut v: Vec<String> = boxes.iter().flat_map(|b| b.gt_actions.iter().cloned()).collect();
        v.sort();
        v.dedup();
        v
    });
    let plans: Vec<Plan> = graphs.iter().cloned().map(Plan::new).collect();
    let events = reference_match(&plans, &atoms);
    let cams_of = |ids: &[u64]| -> Vec<String> {
        let mut c: Vec<String> = store
            .iter()
            .filter(|t| t.majority_gt().is_some_and(|g| ids.contains(&g)))
            .map(|t| t.camera_id.to_string())
            .collect();
        c.sort();
        c.dedup();
        c
    };
    dedup(&parsed(&events), DEFAULT_TOLERANCE_S)
        .into_iter()
        .map(|e| GroundTruthActivity {
            cameras: cams_of(&e.gt_identities),
            activity: e.activity,
            identities: e.gt_identities,
            completion_ts: e.completion_ts,
        })
        .collect()
}

/// Builds the scene, renders it and derives (and checks) its ground truth.
pub fn generate(spec: &ScenarioSpec, seed: u64, graphs: &[ActivityGraph]) -> Result<Generated, SpecError> {
    spec.check()?;
    let mut b = Builder {
        spec,
        rng: ChaCha8Rng::seed_from_u64(seed),
        visits: Vec::new(),
        bookings: Vec::new(),
        plants: Vec::new(),
        next_identity: spec.walkers.iter().map(|w| w.identity).max().unwrap_or(0) + 1,
    };
    for w in &spec.walkers {
        let cam = b.camera_index(&w.camera).expect("checked");
        let size = w.size.map_or(PERSON, |s| (s[0], s[1]));
        let k = w.keyframes[0];
        let mut v = Visit::new(cam, &w.label, w.identity, size, k[0], k[1], k[2]);
        v.keys = w.keyframes.iter().map(|k| (k[0], k[1], k[2])).collect();
        v.actions = w.actions.iter().map(|a| (a.from, a.to, a.name.clone())).collect();
        b.visits.push(v);
    }
    for (index, p) in spec.plants.iter().enumerate() {
        let err = |reason: String| SpecError::Plant {
            index,
            activity: p.activity.clone(),
            at: p.at,
            reason,
        };
        let cam = b.camera_index(&p.camera).ok_or_else(|| err(format!("unknown camera `{}`", p.camera)))?;
        let to = match &p.to {
            Some(c) => Some(b.camera_index(c).ok_or_else(|| err(format!("unknown camera `{c}`")))?),
            None => None,
        };
        let at = b.quantize(p.at);
        b.plant(&p.activity, cam, to, at, p.lane.unwrap_or(0)).map_err(err)?;
    }
    if let Some(r) = &spec.random {
        b.random_plants(r)?;
    }
    b.background();
    let trace = b.render();
    let topology = spec.topology();
    let gt = derive_ground_truth(&trace, &topology, graphs, &SpatialConfig::default());
    // plants of activities outside the rule set cannot be checked
    for p in b.plants.iter().filter(|p| graphs.iter().any(|g| g.name == p.activity)) {
        let found = gt.iter().any(|g| {
            g.activity == p.activity
                && g.identities == p.identities
                && g.completion_ts >= p.at
                && g.completion_ts <= p.end + 1e-9
        });
        if !found {
            return Err(SpecError::NotDerivable {
                activity: p.activity.clone(),
                at: p.at,
            });
        }
    }
    Ok(Generated {
        trace,
        topology,
        gt,
        plants: b.plants,
    })
}
