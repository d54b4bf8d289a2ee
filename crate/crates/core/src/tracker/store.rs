use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::tube::{Tube, TubeBox};

/// All tubes of a run with per-camera and per-identity indices.
#[derive(Debug, Default, Clone)]
pub struct TubeStore {
    tubes: Vec<Tube>,
    by_camera: BTreeMap<Arc<str>, Vec<u64>>,
    open_by_camera: BTreeMap<Arc<str>, BTreeSet<u64>>,
    by_identity: BTreeMap<u64, Vec<u64>>,
}

impl TubeStore {
    pub fn len(&self) -> usize {
        self.tubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tubes.is_empty()
    }

    /// Tube ids start at 1 and follow creation order.
    pub fn get(&self, id: u64) -> &Tube {
        &self.tubes[(id - 1) as usize]
    }

    pub fn try_get(&self, id: u64) -> Option<&Tube> {
        id.checked_sub(1).and_then(|i| self.tubes.get(i as usize))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Tube> {
        self.tubes.iter()
    }

    pub fn create(&mut self, camera_id: Arc<str>, label: &str, first: TubeBox) -> u64 {
        let id = self.tubes.len() as u64 + 1;
        self.by_camera.entry(camera_id.clone()).or_default().push(id);
        self.open_by_camera.entry(camera_id.clone()).or_default().insert(id);
        self.tubes.push(Tube {
            tube_id: id,
            camera_id,
            label: label.to_string(),
            boxes: vec![first],
            identity: None,
            closed: false,
            ref_crop: None,
        });
        id
    }

    pub fn append(&mut self, id: u64, b: TubeBox) {
        let t = &mut self.tubes[(id - 1) as usize];
        assert!(!t.closed, "append to closed tube {id}");
        debug_assert!(b.timestamp >= t.end_ts());
        t.boxes.push(b);
    }

    pub fn set_ref_crop(&mut self, id: u64, crop: crate::ingest::Crop) {
        self.tubes[(id - 1) as usize].ref_crop = Some(crop);
    }

    pub fn set_identity(&mut self, id: u64, identity: u64) {
        let t = &mut self.tubes[(id - 1) as usize];
        if let Some(old) = t.identity {
            if let Some(v) = self.by_identity.get_mut(&old) {
                v.retain(|&x| x != id);
            }
        }
        t.identity = Some(identity);
        let v = self.by_identity.entry(identity).or_default();
        v.push(id);
        v.sort_unstable();
    }

    pub fn close(&mut self, id: u64) -> bool {
        let t = &mut self.tubes[(id - 1) as usize];
        if t.closed {
            return false;
        }
        t.closed = true;
        if let Some(set) = self.open_by_camera.get_mut(&t.camera_id) {
            set.remove(&id);
        }
        true
    }

    pub fn open_in(&self, camera: &str) -> impl Iterator<Item = &Tube> {
        self.open_by_camera
            .get(camera)
            .into_iter()
            .flatten()
            .map(|&id| self.get(id))
    }

    pub fn in_camera(&self, camera: &str) -> impl Iterator<Item = &Tube> {
        self.by_camera
            .get(camera)
            .into_iter()
            .flatten()
            .map(|&id| self.get(id))
    }

    pub fn with_identity(&self, identity: u64) -> impl Iterator<Item = &Tube> {
        self.by_identity
            .get(&identity)
            .into_iter()
            .flatten()
            .map(|&id| self.get(id))
    }

    pub fn open_ids(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.open_by_camera.values().flatten().copied().collect();
        v.sort_unstable();
        v
    }

    /// Checks that every index agrees with the tube table.
    pub fn check_consistency(&self) -> Result<(), String> {
        for (i, t) in self.tubes.iter().enumerate() {
            if t.tube_id != i as u64 + 1 {
                return Err(format!("tube at slot {i} has id {}", t.tube_id));
            }
            if t.boxes.is_empty() || t.start_ts() > t.end_ts() {
                return Err(format!("tube {} has a bad span", t.tube_id));
            }
            if !self.by_camera.get(&t.camera_id).is_some_and(|v| v.contains(&t.tube_id)) {
                return Err(format!("tube {} missing from camera index", t.tube_id));
            }
            let open = self
                .open_by_camera
                .get(&t.camera_id)
                .is_some_and(|s| s.contains(&t.tube_id));
            if open == t.closed {
                return Err(format!("tube {} open index disagrees", t.tube_id));
            }
            if let Some(g) = t.identity {
                if !self.by_identity.get(&g).is_some_and(|v| v.contains(&t.tube_id)) {
                    return Err(format!("tube {} missing from identity index", t.tube_id));
                }
            }
        }
        for (g, ids) in &self.by_identity {
            for &id in ids {
                if self.get(id).identity != Some(*g) {
                    return Err(format!("identity index lists tube {id} under {g}"));
                }
            }
        }
        let mut open_pairs = BTreeSet::new();
        for t in self.tubes.iter().filter(|t| !t.closed) {
            if let Some(g) = t.identity {
                if !open_pairs.insert((t.camera_id.clone(), g)) {
                    return Err(format!("two open tubes for identity {g} in {}", t.camera_id));
                }
            }
        }
        Ok(())
    }
}
