//! Spatial operators over tubes and tube chunks.

mod chunk;
mod geometry;
mod ops;

pub use chunk::{chunk_index, chunks, chunks_from, Chunk, Interval};
pub use geometry::{center_distance, edge_distance, proximate};
pub use ops::{
    approach, approach_ok, closing_in, coalesce, disappear, frame_pair_distances, motion_runs,
    move_, near, near_chunk, near_chunks, re_identified, same_camera, still_flags, stop,
    DisappearKind, SpatialConfig, SpatialOp,
};
