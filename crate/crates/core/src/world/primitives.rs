//! Analytic ray and sphere queries against scene primitives.
//!
//! Ray functions return the parametric distance of the first intersection at
//! or after the origin, `Some(0.0)` when the origin is inside the solid, and
//! `None` on a miss. Directions are unit vectors.

use crate::V3;

const PARALLEL_EPS: f64 = 1e-15;

/// Entry/exit interval of a ray against an axis-aligned box.
fn box_interval(o: V3, d: V3, min: V3, max: V3) -> Option<(f64, f64)> {
    let mut t0 = f64::NEG_INFINITY;
    let mut t1 = f64::INFINITY;
    for (oc, dc, lo, hi) in [
        (o.x, d.x, min.x, max.x),
        (o.y, d.y, min.y, max.y),
        (o.z, d.z, min.z, max.z),
    ] {
        if dc.abs() < PARALLEL_EPS {
            if oc < lo || oc > hi {
                return None;
            }
            continue;
        }
        let inv = 1.0 / dc;
        let (mut a, mut b) = ((lo - oc) * inv, (hi - oc) * inv);
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        t0 = t0.max(a);
        t1 = t1.min(b);
        if t0 > t1 {
            return None;
        }
    }
    Some((t0, t1))
}

pub fn ray_box(o: V3, d: V3, min: V3, max: V3) -> Option<f64> {
    let (t0, t1) = box_interval(o, d, min, max)?;
    if t1 < 0.0 {
        None
    } else {
        Some(t0.max(0.0))
    }
}

/// Vertical cylinder with axis through `(cx, cy)` spanning `z_min..=z_max`.
pub fn ray_cylinder(o: V3, d: V3, cx: f64, cy: f64, radius: f64, z_min: f64, z_max: f64) -> Option<f64> {
    // horizontal interval where the ray is within the radius
    let ox = o.x - cx;
    let oy = o.y - cy;
    let a = d.x * d.x + d.y * d.y;
    let c = ox * ox + oy * oy - radius * radius;
    let (mut t0, mut t1) = if a < PARALLEL_EPS {
        if c > 0.0 {
            return None;
        }
        (f64::NEG_INFINITY, f64::INFINITY)
    } else {
        let b = ox * d.x + oy * d.y;
        let disc = b * b - a * c;
        if disc < 0.0 {
            return None;
        }
        let s = disc.sqrt();
        ((-b - s) / a, (-b + s) / a)
    };
    // vertical slab
    if d.z.abs() < PARALLEL_EPS {
        if o.z < z_min || o.z > z_max {
            return None;
        }
    } else {
        let (mut a, mut b) = ((z_min - o.z) / d.z, (z_max - o.z) / d.z);
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        t0 = t0.max(a);
        t1 = t1.min(b);
    }
    if t0 > t1 || t1 < 0.0 {
        None
    } else {
        Some(t0.max(0.0))
    }
}

pub fn ray_sphere(o: V3, d: V3, center: V3, radius: f64) -> Option<f64> {
    let oc = o - center;
    let b = oc.dot(d);
    let c = oc.dot(oc) - radius * radius;
    if c <= 0.0 {
        return Some(0.0);
    }
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let t = -b - disc.sqrt();
    if t < 0.0 {
        None
    } else {
        Some(t)
    }
}

/// Ground plane `z = 0`; anything below it is solid.
pub fn ray_ground(o: V3, d: V3) -> Option<f64> {
    if o.z <= 0.0 {
        return Some(0.0);
    }
    if d.z < 0.0 {
        Some(-o.z / d.z)
    } else {
        None
    }
}

pub fn point_box_distance(p: V3, min: V3, max: V3) -> f64 {
    let dx = (min.x - p.x).max(0.0).max(p.x - max.x);
    let dy = (min.y - p.y).max(0.0).max(p.y - max.y);
    let dz = (min.z - p.z).max(0.0).max(p.z - max.z);
    (dx * dx + dy * dy + dz * dz).sqrt()
}

pub fn point_cylinder_distance(p: V3, cx: f64, cy: f64, radius: f64, z_min: f64, z_max: f64) -> f64 {
    let dxy = ((p.x - cx).hypot(p.y - cy) - radius).max(0.0);
    let dz = (z_min - p.z).max(0.0).max(p.z - z_max);
    dxy.hypot(dz)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> V3 {
        V3::new(x, y, z)
    }

    #[test]
    fn box_head_on_and_inside() {
        let (min, max) = (v(25.0, -5.0, 0.0), v(30.0, 5.0, 10.0));
        assert_eq!(ray_box(v(0.0, 0.0, 5.0), v(1.0, 0.0, 0.0), min, max), Some(25.0));
        assert_eq!(ray_box(v(27.0, 0.0, 5.0), v(1.0, 0.0, 0.0), min, max), Some(0.0));
        assert_eq!(ray_box(v(0.0, 0.0, 5.0), v(-1.0, 0.0, 0.0), min, max), None);
        assert_eq!(ray_box(v(0.0, 6.0, 5.0), v(1.0, 0.0, 0.0), min, max), None);
    }

    #[test]
    fn cylinder_side_and_cap() {
        assert_eq!(ray_cylinder(v(0.0, 0.0, 5.0), v(1.0, 0.0, 0.0), 10.0, 0.0, 2.0, 0.0, 10.0), Some(8.0));
        let t = ray_cylinder(v(10.0, 0.0, 30.0), v(0.0, 0.0, -1.0), 10.0, 0.0, 2.0, 0.0, 10.0);
        assert_eq!(t, Some(20.0));
        assert_eq!(ray_cylinder(v(0.0, 0.0, 15.0), v(1.0, 0.0, 0.0), 10.0, 0.0, 2.0, 0.0, 10.0), None);
    }

    #[test]
    fn sphere_and_ground() {
        assert_eq!(ray_sphere(v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(10.0, 0.0, 0.0), 1.0), Some(9.0));
        assert_eq!(ray_ground(v(0.0, 0.0, 10.0), v(0.0, 0.0, -1.0)), Some(10.0));
        assert_eq!(ray_ground(v(0.0, 0.0, 10.0), v(1.0, 0.0, 0.0)), None);
    }

    #[test]
    fn distances() {
        assert_eq!(point_box_distance(v(-3.0, 0.0, 0.0), v(0.0, -1.0, -1.0), v(1.0, 1.0, 1.0)), 3.0);
        assert_eq!(point_cylinder_distance(v(5.0, 0.0, 12.0), 0.0, 0.0, 2.0, 0.0, 8.0), 5.0);
    }
}
