use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use super::trace::is_camera_id;

pub const DEFAULT_FRAME: (f64, f64) = (1920.0, 1080.0);
pub const DEFAULT_TRAVEL: (f64, f64) = (1.0, 120.0);

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("cannot read topology: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

/// Cameras and the walkable links between them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CameraTopology {
    /// Frame size per camera.
    pub cameras: BTreeMap<String, (f64, f64)>,
    /// Unordered pairs, stored with the smaller id first.
    pub edges: BTreeMap<(String, String), (f64, f64)>,
}

fn key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl CameraTopology {
    pub fn add_camera(&mut self, id: &str) {
        self.cameras.entry(id.to_string()).or_insert(DEFAULT_FRAME);
    }

    pub fn add_edge(&mut self, a: &str, b: &str, min: f64, max: f64) {
        self.add_camera(a);
        self.add_camera(b);
        self.edges.insert(key(a, b), (min, max));
    }

    pub fn frame_size(&self, camera: &str) -> (f64, f64) {
        self.cameras.get(camera).copied().unwrap_or(DEFAULT_FRAME)
    }

    pub fn travel(&self, a: &str, b: &str) -> Option<(f64, f64)> {
        self.edges.get(&key(a, b)).copied()
    }

    /// Adjacent cameras with their travel bounds, in id order.
    pub fn neighbors<'a>(&'a self, camera: &'a str) -> impl Iterator<Item = (&'a str, f64, f64)> + 'a {
        self.edges.iter().filter_map(move |((a, b), &(lo, hi))| {
            if a == camera {
                Some((b.as_str(), lo, hi))
            } else if b == camera {
                Some((a.as_str(), lo, hi))
            } else {
                None
            }
        })
    }

    /// `edge A B [min max]` and `camera ID WIDTH HEIGHT` lines, `#` comments.
    pub fn parse(text: &str) -> Result<CameraTopology, TopologyError> {
        let mut topo = CameraTopology::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let fail = |message: String| TopologyError::Format { line, message };
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let f: Vec<&str> = body.split_whitespace().collect();
            let num = |s: &str| -> Result<f64, TopologyError> {
                match s.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(fail(format!("bad number `{s}`"))),
                }
            };
            for cam in f.iter().skip(1).take(if f[0] == "edge" { 2 } else { 1 }) {
                if !is_camera_id(cam) {
                    return Err(fail(format!("bad camera id `{cam}`")));
                }
            }
            match (f[0], f.len()) {
                ("edge", 3) | ("edge", 5) => {
                    let (lo, hi) = if f.len() == 5 {
                        (num(f[3])?, num(f[4])?)
                    } else {
                        DEFAULT_TRAVEL
                    };
                    if f[1] == f[2] {
                        return Err(fail("self-loop".into()));
                    }
                    if !(lo > 0.0 && lo <= hi) {
                        return Err(fail("travel bounds must satisfy 0 < min <= max".into()));
                    }
                    if topo.travel(f[1], f[2]).is_some() {
                        return Err(fail("duplicate edge".into()));
                    }
                    topo.add_edge(f[1], f[2], lo, hi);
                }
                ("camera", 2) => topo.add_camera(f[1]),
                ("camera", 4) => {
                    let (w, h) = (num(f[2])?, num(f[3])?);
                    if w <= 0.0 || h <= 0.0 {
                        return Err(fail("frame size must be positive".into()));
                    }
                    topo.cameras.insert(f[1].to_string(), (w, h));
                }
                _ => return Err(fail(format!("unrecognised line `{body}`"))),
            }
        }
        Ok(topo)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<CameraTopology, TopologyError> {
        CameraTopology::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (cam, (w, h)) in &self.cameras {
            out.push_str(&format!("camera {cam} {w} {h}\n"));
        }
        for ((a, b), (lo, hi)) in &self.edges {
            out.push_str(&format!("edge {a} {b} {lo} {hi}\n"));
        }
        out
    }
}
