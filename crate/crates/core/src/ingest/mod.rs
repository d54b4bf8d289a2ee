//! Detection traces, camera topology, camera-side caches and replay.

mod camera;
mod replay;
mod topology;
mod trace;

pub use camera::{
    eager_upload_all, CacheMiss, CameraNode, CameraStats, Crop, DEFAULT_CACHE_LIMIT,
    DEFAULT_FRAME_RATE, METADATA_BYTES,
};
pub use replay::{ordered, Replay};
pub use topology::{CameraTopology, TopologyError, DEFAULT_FRAME, DEFAULT_TRAVEL};
pub(crate) use trace::is_camera_id;
pub use trace::{format_event, BoundingBox, DetectionEvent, Trace, TraceError};
