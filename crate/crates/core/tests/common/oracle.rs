//! Brute-force oracles. These deliberately avoid the library's slab tests,
//! spatial grid and metric code so that agreement is meaningful.

use uavnh_core::world::{Obstacle, Scene, Shape};
use uavnh_core::V3;

const FACE_TOL: f64 = 1e-9;

fn within(v: f64, lo: f64, hi: f64) -> bool {
    v >= lo - FACE_TOL && v <= hi + FACE_TOL
}

/// Ray against a box by testing each of the six face rectangles.
pub fn box_by_faces(o: V3, d: V3, lo: V3, hi: V3) -> Option<f64> {
    let inside = o.x > lo.x && o.x < hi.x && o.y > lo.y && o.y < hi.y && o.z > lo.z && o.z < hi.z;
    if inside {
        return Some(0.0);
    }
    let o = [o.x, o.y, o.z];
    let d = [d.x, d.y, d.z];
    let lo = [lo.x, lo.y, lo.z];
    let hi = [hi.x, hi.y, hi.z];
    let mut best: Option<f64> = None;
    for axis in 0..3 {
        if d[axis] == 0.0 {
            continue;
        }
        for plane in [lo[axis], hi[axis]] {
            let t = (plane - o[axis]) / d[axis];
            if t < 0.0 {
                continue;
            }
            let on_face = (0..3)
                .filter(|a| *a != axis)
                .all(|a| within(o[a] + d[a] * t, lo[a], hi[a]));
            if on_face && best.is_none_or(|b| t < b) {
                best = Some(t);
            }
        }
    }
    best
}

/// Vertical cylinder: lateral surface from the full quadratic plus both cap discs.
pub fn cylinder_by_surfaces(o: V3, d: V3, cx: f64, cy: f64, r: f64, z0: f64, z1: f64) -> Option<f64> {
    let px = o.x - cx;
    let py = o.y - cy;
    if px * px + py * py < r * r && o.z > z0 && o.z < z1 {
        return Some(0.0);
    }
    let mut best: Option<f64> = None;
    let mut consider = |t: f64| {
        if t >= 0.0 && best.is_none_or(|b| t < b) {
            best = Some(t);
        }
    };
    let a = d.x * d.x + d.y * d.y;
    if a > 0.0 {
        let b = 2.0 * (px * d.x + py * d.y);
        let c = px * px + py * py - r * r;
        let disc = b * b - 4.0 * a * c;
        if disc >= 0.0 {
            for t in [(-b - disc.sqrt()) / (2.0 * a), (-b + disc.sqrt()) / (2.0 * a)] {
                let z = o.z + d.z * t;
                if within(z, z0, z1) {
                    consider(t);
                }
            }
        }
    }
    if d.z != 0.0 {
        for plane in [z0, z1] {
            let t = (plane - o.z) / d.z;
            let (x, y) = (px + d.x * t, py + d.y * t);
            if x * x + y * y <= r * r * (1.0 + 1e-12) {
                consider(t);
            }
        }
    }
    best
}

/// Sphere by projecting the center onto the ray.
pub fn sphere_geometric(o: V3, d: V3, c: V3, r: f64) -> Option<f64> {
    let l = c - o;
    if l.dot(l) <= r * r {
        return Some(0.0);
    }
    let tca = l.dot(d);
    let d2 = l.dot(l) - tca * tca;
    if d2 > r * r || tca < 0.0 {
        return None;
    }
    Some(tca - (r * r - d2).sqrt())
}

fn obstacle(o: V3, d: V3, ob: &Obstacle) -> Option<f64> {
    match &ob.shape {
        Shape::Box { min, max } => box_by_faces(o, d, *min, *max),
        Shape::Cylinder { center_x, center_y, radius, z_min, z_max } => {
            cylinder_by_surfaces(o, d, *center_x, *center_y, *radius, *z_min, *z_max)
        }
        Shape::Heightfield { origin_x, origin_y, cell_size, nx, heights, .. } => {
            let mut best: Option<f64> = None;
            for (k, h) in heights.iter().enumerate() {
                if *h <= 0.0 {
                    continue;
                }
                let (i, j) = ((k % nx) as f64, (k / nx) as f64);
                let lo = V3::new(origin_x + i * cell_size, origin_y + j * cell_size, 0.0);
                let hi = V3::new(origin_x + (i + 1.0) * cell_size, origin_y + (j + 1.0) * cell_size, *h);
                if let Some(t) = box_by_faces(o, d, lo, hi) {
                    if best.is_none_or(|b| t < b) {
                        best = Some(t);
                    }
                }
            }
            best
        }
    }
}

/// First hit over every primitive in the scene, no acceleration structure.
pub fn brute_raycast(scene: &Scene, o: V3, d: V3, max_range: f64) -> Option<f64> {
    let ground = if o.z <= 0.0 {
        Some(0.0)
    } else if d.z < 0.0 {
        Some(o.z / -d.z)
    } else {
        None
    };
    let obstacles = scene.obstacles().iter().filter_map(|ob| obstacle(o, d, ob));
    let objects = scene
        .objects()
        .iter()
        .filter_map(|ob| sphere_geometric(o, d, ob.position, ob.bounding_radius));
    ground
        .into_iter()
        .chain(obstacles)
        .chain(objects)
        .filter(|t| *t <= max_range)
        .reduce(f64::min)
}

/// Exhaustive nearest sample: plain loop over squared coordinate differences.
pub fn brute_nearest(points: &[[f64; 3]], q: [f64; 3]) -> (usize, f64) {
    let mut best = (usize::MAX, f64::INFINITY);
    for (i, p) in points.iter().enumerate() {
        let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Per-episode metric terms computed from raw positions.
#[derive(Debug, Clone, Copy)]
pub struct BruteTerms {
    pub success: f64,
    pub oracle: f64,
    pub ne: f64,
    pub spl: f64,
    pub hard: bool,
}

fn polyline_length(points: &[[f64; 3]]) -> f64 {
    let mut total = 0.0;
    for i in 1..points.len() {
        let (a, b) = (points[i - 1], points[i]);
        total += ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
    }
    total
}

pub fn brute_terms(executed: &[[f64; 3]], gt: &[[f64; 3]], target: [f64; 3], landed_success: bool, final_distance: f64) -> BruteTerms {
    let p = polyline_length(executed);
    let l = polyline_length(gt);
    let min_dist = executed
        .iter()
        .map(|e| ((e[0] - target[0]).powi(2) + (e[1] - target[1]).powi(2) + (e[2] - target[2]).powi(2)).sqrt())
        .fold(f64::INFINITY, f64::min);
    let s = if landed_success { 1.0 } else { 0.0 };
    let denom = if p > l { p } else { l };
    BruteTerms {
        success: s,
        oracle: if min_dist <= 20.0 { 1.0 } else { 0.0 },
        ne: final_distance,
        spl: if denom > 0.0 { s * l / denom } else { s },
        hard: !(l < 250.0),
    }
}

/// `(sr, osr, spl, ne)` with rates in percent.
pub fn brute_aggregate(terms: &[BruteTerms]) -> (f64, f64, f64, f64) {
    let n = terms.len() as f64;
    let mut acc = (0.0, 0.0, 0.0, 0.0);
    for t in terms {
        acc.0 += t.success;
        acc.1 += t.oracle;
        acc.2 += t.spl;
        acc.3 += t.ne;
    }
    (100.0 * acc.0 / n, 100.0 * acc.1 / n, 100.0 * acc.2 / n, acc.3 / n)
}
