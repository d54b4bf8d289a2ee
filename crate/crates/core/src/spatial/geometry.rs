use crate::ingest::BoundingBox;

/// Gap between the outer edges of two boxes; 0 when they overlap or touch.
pub fn edge_distance(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let dx = (b.x - (a.x + a.w)).max(a.x - (b.x + b.w)).max(0.0);
    let dy = (b.y - (a.y + a.h)).max(a.y - (b.y + b.h)).max(0.0);
    (dx * dx + dy * dy).sqrt()
}

/// Edge distance relative to either box's largest dimension is below `delta`.
pub fn proximate(a: &BoundingBox, b: &BoundingBox, delta: f64) -> bool {
    let d = edge_distance(a, b);
    d / a.w.max(a.h) < delta || d / b.w.max(b.h) < delta
}

pub fn center_distance(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt()
}
