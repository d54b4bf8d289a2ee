use std::collections::{HashMap, VecDeque};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use thiserror::Error;

use super::trace::{BoundingBox, DetectionEvent};

pub const DEFAULT_CACHE_LIMIT: u64 = 4 << 30;
pub const DEFAULT_FRAME_RATE: f64 = 20.0;
/// Fixed per-box cost of shipping coordinates, label and ids.
pub const METADATA_BYTES: u64 = 32;

/// A simulated image crop: no pixels, only its size and annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct Crop {
    pub camera_id: Arc<str>,
    pub frame_index: u64,
    pub box_id: u32,
    pub timestamp: f64,
    pub bbox: BoundingBox,
    pub bytes: u64,
    pub gt_identity: Option<u64>,
    pub gt_actions: Arc<[String]>,
}

impl Crop {
    pub fn from_event(ev: &DetectionEvent, camera_id: Arc<str>) -> Crop {
        Crop {
            camera_id,
            frame_index: ev.frame_index,
            box_id: ev.box_id,
            timestamp: ev.timestamp,
            bbox: ev.bbox,
            bytes: ev.bbox.crop_bytes(),
            gt_identity: ev.gt_identity,
            gt_actions: ev.gt_actions.clone().into(),
        }
    }

    pub fn key(&self) -> (u64, u32) {
        (self.frame_index, self.box_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("crop {frame_index}/{box_id} no longer cached on camera `{camera_id}`")]
pub struct CacheMiss {
    pub camera_id: String,
    pub frame_index: u64,
    pub box_id: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CameraStats {
    pub uploaded_bytes: u64,
    pub metadata_bytes: u64,
    pub peak_cache_bytes: u64,
    pub crop_requests: u64,
    pub cache_misses: u64,
    pub evictions: u64,
}

#[derive(Default)]
struct Store {
    queue: VecDeque<(u64, u32)>,
    cached: HashMap<(u64, u32), Crop>,
    occupancy: u64,
    /// Crops already shipped to the edge; asking again costs nothing.
    uploaded: HashMap<(u64, u32), Crop>,
    uploaded_order: VecDeque<(u64, u32)>,
}

/// One camera's frame cache and upload accounting.
pub struct CameraNode {
    pub camera_id: Arc<str>,
    pub cache_limit_bytes: u64,
    pub frame_rate: f64,
    store: Mutex<Store>,
    uploaded_bytes: AtomicU64,
    metadata_bytes: AtomicU64,
    peak_cache_bytes: AtomicU64,
    crop_requests: AtomicU64,
    cache_misses: AtomicU64,
    evictions: AtomicU64,
}

impl CameraNode {
    pub fn new(camera_id: &str, cache_limit_bytes: u64) -> CameraNode {
        CameraNode {
            camera_id: camera_id.into(),
            cache_limit_bytes,
            frame_rate: DEFAULT_FRAME_RATE,
            store: Mutex::new(Store::default()),
            uploaded_bytes: AtomicU64::new(0),
            metadata_bytes: AtomicU64::new(0),
            peak_cache_bytes: AtomicU64::new(0),
            crop_requests: AtomicU64::new(0),
            cache_misses: AtomicU64::new(0),
            evictions: AtomicU64::new(0),
        }
    }

    /// Lazy mode: the camera keeps the crop and ships only metadata.
    pub fn observe(&self, ev: &DetectionEvent) {
        self.metadata_bytes.fetch_add(METADATA_BYTES, Ordering::Relaxed);
        let crop = Crop::from_event(ev, self.camera_id.clone());
        let mut st = self.store.lock().unwrap();
        if crop.bytes > self.cache_limit_bytes {
            self.evictions.fetch_add(1, Ordering::Relaxed);
            return;
        }
        while st.occupancy + crop.bytes > self.cache_limit_bytes {
            let Some(old) = st.queue.pop_front() else { break };
            if let Some(c) = st.cached.remove(&old) {
                st.occupancy -= c.bytes;
                self.evictions.fetch_add(1, Ordering::Relaxed);
            }
        }
        st.occupancy += crop.bytes;
        st.queue.push_back(crop.key());
        st.cached.insert(crop.key(), crop);
        assert!(st.occupancy <= self.cache_limit_bytes);
        self.peak_cache_bytes.fetch_max(st.occupancy, Ordering::Relaxed);
    }

    /// Strawman mode: every crop goes up with its metadata; the cache is not used.
    pub fn eager_upload(&self, ev: &DetectionEvent) {
        self.metadata_bytes.fetch_add(METADATA_BYTES, Ordering::Relaxed);
        let crop = Crop::from_event(ev, self.camera_id.clone());
        let mut st = self.store.lock().unwrap();
        if !st.uploaded.contains_key(&crop.key()) {
            self.uploaded_bytes.fetch_add(crop.bytes, Ordering::Relaxed);
            st.uploaded_order.push_back(crop.key());
            st.uploaded.insert(crop.key(), crop);
        }
    }

    /// Lazily fetches one crop, charging its bytes the first time.
    pub fn request_crop(&self, frame_index: u64, box_id: u32) -> Result<Crop, CacheMiss> {
        self.crop_requests.fetch_add(1, Ordering::Relaxed);
        let key = (frame_index, box_id);
        let mut st = self.store.lock().unwrap();
        if let Some(c) = st.uploaded.get(&key) {
            return Ok(c.clone());
        }
        match st.cached.get(&key) {
            Some(c) => {
                let c = c.clone();
                self.uploaded_bytes.fetch_add(c.bytes, Ordering::Relaxed);
                st.uploaded_order.push_back(key);
                st.uploaded.insert(key, c.clone());
                Ok(c)
            }
            None => {
                self.cache_misses.fetch_add(1, Ordering::Relaxed);
                Err(CacheMiss {
                    camera_id: self.camera_id.to_string(),
                    frame_index,
                    box_id,
                })
            }
        }
    }

    /// Drops cached and edge-side crops captured before `ts`.
    pub fn release_before(&self, ts: f64) {
        let mut st = self.store.lock().unwrap();
        while let Some(&k) = st.queue.front() {
            match st.cached.get(&k) {
                Some(c) if c.timestamp >= ts => break,
                Some(_) => {
                    let c = st.cached.remove(&k).unwrap();
                    st.occupancy -= c.bytes;
                }
                None => {}
            }
            st.queue.pop_front();
        }
        while let Some(&k) = st.uploaded_order.front() {
            if st.uploaded.get(&k).is_some_and(|c| c.timestamp >= ts) {
                break;
            }
            st.uploaded.remove(&k);
            st.uploaded_order.pop_front();
        }
    }

    pub fn occupancy(&self) -> u64 {
        self.store.lock().unwrap().occupancy
    }

    pub fn stats(&self) -> CameraStats {
        CameraStats {
            uploaded_bytes: self.uploaded_bytes.load(Ordering::Relaxed),
            metadata_bytes: self.metadata_bytes.load(Ordering::Relaxed),
            peak_cache_bytes: self.peak_cache_bytes.load(Ordering::Relaxed),
            crop_requests: self.crop_requests.load(Ordering::Relaxed),
            cache_misses: self.cache_misses.load(Ordering::Relaxed),
            evictions: self.evictions.load(Ordering::Relaxed),
        }
    }
}

/// Bytes the strawman would upload for a whole trace.
pub fn eager_upload_all<'a>(events: impl IntoIterator<Item = &'a DetectionEvent>) -> u64 {
    events.into_iter().map(|e| e.bbox.crop_bytes()).sum()
}
