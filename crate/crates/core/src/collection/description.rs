//! Templated target descriptions: direction, object, surroundings.

use crate::episode::TargetDescription;
use crate::world::{Material, PlacedObject, Scene};
use crate::{Pose, V3};

/// Neighbors farther than this from the target are not mentioned.
pub const NEIGHBOR_RADIUS: f64 = 40.0;
pub const MAX_NEIGHBORS: usize = 3;
/// Height differences below this are described as level.
const LEVEL_BAND: f64 = 10.0;

const COMPASS: [&str; 8] = ["east", "northeast", "north", "northwest", "west", "southwest", "south", "southeast"];

/// Eight-sector compass name of a horizontal offset (+x east, +y north).
pub fn compass_sector(dx: f64, dy: f64) -> &'static str {
    let deg = dy.atan2(dx).to_degrees();
    let idx = ((deg / 45.0).round() as i64).rem_euclid(8) as usize;
    COMPASS[idx]
}

fn range_phrase(d: f64) -> String {
    if d < 25.0 {
        "close by".to_string()
    } else {
        let band = ((d / 50.0).round() * 50.0).max(50.0);
        format!("roughly {band:.0} meters away")
    }
}

fn with_article(noun: &str) -> String {
    let vowel = noun.chars().next().is_some_and(|c| "aeiou".contains(c.to_ascii_lowercase()));
    format!("{} {noun}", if vowel { "an" } else { "a" })
}

fn material_noun(m: Material) -> &'static str {
    match m {
        Material::Building => "building",
        Material::Vegetation => "tree",
        Material::Terrain => "hill",
        Material::Rock => "rock",
    }
}

pub fn direction_text(start: &Pose, target: V3) -> String {
    let off = target - start.position();
    let d = off.horizontal_norm();
    let mut text = format!("The target is to the {}, {}", compass_sector(off.x, off.y), range_phrase(d));
    if off.z > LEVEL_BAND {
        text.push_str(", above your current altitude");
    } else if off.z < -LEVEL_BAND {
        text.push_str(", below your current altitude");
    }
    text.push('.');
    text
}

pub fn object_text(category: &str) -> String {
    format!("It is {}.", with_article(category))
}

pub fn environment_text(scene: &Scene, target: &PlacedObject) -> String {
    let tp = target.position;
    let mut near: Vec<(f64, String)> = Vec::new();
    for o in scene.objects() {
        let off = o.position - tp;
        let d = off.horizontal_norm();
        if o.is_target || d < 1e-9 || d > NEIGHBOR_RADIUS {
            continue;
        }
        near.push((d, format!("{} to the {}", with_article(&o.category), compass_sector(off.x, off.y))));
    }
    for ob in scene.obstacles() {
        let d = ob.distance(tp);
        if d > NEIGHBOR_RADIUS {
            continue;
        }
        let bb = ob.aabb();
        let c = (bb.min + bb.max) * 0.5;
        let noun = material_noun(ob.material);
        near.push((d, format!("{} to the {}", with_article(noun), compass_sector(c.x - tp.x, c.y - tp.y))));
    }
    near.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    let mut phrases: Vec<String> = Vec::new();
    for (_, p) in near {
        if !phrases.contains(&p) {
            phrases.push(p);
        }
        if phrases.len() == MAX_NEIGHBORS {
            break;
        }
    }
    match phrases.len() {
        0 => "It stands in an open area with nothing else nearby.".to_string(),
        1 => format!("Nearby there is {}.", phrases[0]),
        n => format!("Nearby there is {} and {}.", phrases[..n - 1].join(", "), phrases[n - 1]),
    }
}

pub fn generate_description(start: &Pose, target: &PlacedObject, scene: &Scene) -> TargetDescription {
    TargetDescription {
        direction_text: direction_text(start, target.position),
        object_text: object_text(&target.category),
        environment_text: environment_text(scene, target),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{Aabb, Obstacle, Region, SceneStyle};

    fn target(x: f64, y: f64, cat: &str) -> PlacedObject {
        PlacedObject { category: cat.into(), position: V3::new(x, y, 1.0), bounding_radius: 1.0, is_target: true }
    }

    #[test]
    fn north_300_level() {
        let start = Pose::at(0.0, 0.0, 1.0, 0.7);
        assert_eq!(direction_text(&start, V3::new(0.0, 300.0, 1.0)), "The target is to the north, roughly 300 meters away.");
        assert_eq!(direction_text(&start, V3::new(-100.0, -100.0, 1.0)), "The target is to the southwest, roughly 150 meters away.");
        assert!(direction_text(&Pose::at(0.0, 0.0, 60.0, 0.0), V3::new(80.0, 0.0, 1.0)).ends_with("below your current altitude."));
    }

    #[test]
    fn sectors_cover_the_circle() {
        for (k, name) in COMPASS.iter().enumerate() {
            let a = (k as f64 * 45.0 + 20.0).to_radians();
            assert_eq!(compass_sector(a.cos(), a.sin()), *name);
        }
    }

    #[test]
    fn object_and_environment_templates() {
        assert!(object_text("car").contains("car"));
        assert_eq!(object_text("umbrella"), "It is an umbrella.");
        let bounds = Aabb::new(V3::zero(), V3::new(200.0, 200.0, 50.0));
        let start = Region::new("start", 0.0, 0.0, 10.0, 10.0);
        let open = Scene::new("s", 0, SceneStyle::Open, bounds, start.clone(), vec![], vec![], vec![]).unwrap();
        let t = target(100.0, 100.0, "car");
        assert_eq!(environment_text(&open, &t), "It stands in an open area with nothing else nearby.");

        let house = Obstacle::boxed(Material::Building, V3::new(110.0, 95.0, 0.0), V3::new(120.0, 105.0, 10.0));
        let bench = PlacedObject { category: "bench".into(), position: V3::new(100.0, 88.0, 1.2), bounding_radius: 1.2, is_target: false };
        let busy = Scene::new("s", 0, SceneStyle::Urban, bounds, start, vec![], vec![house], vec![bench]).unwrap();
        assert_eq!(
            environment_text(&busy, &t),
            "Nearby there is a building to the east and a bench to the south."
        );
    }
}
