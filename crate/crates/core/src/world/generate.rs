//! Seeded procedural scene generation and object placement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scene::{Aabb, Material, Obstacle, PlacedObject, Region, Scene, SceneStyle, Shape};
use super::WorldError;
use crate::V3;

const OBSTACLE_ATTEMPTS: usize = 20;
pub const PLACEMENT_ATTEMPTS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectClass {
    pub category: String,
    pub bounding_radius: f64,
}

pub fn default_catalogue() -> Vec<ObjectClass> {
    [
        ("car", 2.5),
        ("truck", 4.0),
        ("bus", 5.0),
        ("person", 0.6),
        ("dog", 0.5),
        ("horse", 1.3),
        ("bicycle", 1.0),
        ("traffic sign", 1.0),
        ("bench", 1.2),
        ("suitcase", 0.5),
        ("tent", 2.0),
        ("boat", 3.0),
    ]
    .into_iter()
    .map(|(c, r)| ObjectClass { category: c.to_string(), bounding_radius: r })
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub size_x: f64,
    pub size_y: f64,
    pub height: f64,
    /// Expected obstacles per square meter.
    pub obstacle_density: f64,
    pub style: SceneStyle,
    pub feasible_regions: usize,
    pub region_size: f64,
    pub start_region_size: f64,
    /// Obstacle-free margin kept around the start and feasible regions.
    pub clearance: f64,
    pub distractors: usize,
    pub catalogue: Vec<ObjectClass>,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            size_x: 400.0,
            size_y: 400.0,
            height: 120.0,
            obstacle_density: 0.002,
            style: SceneStyle::Urban,
            feasible_regions: 12,
            region_size: 24.0,
            start_region_size: 20.0,
            clearance: 6.0,
            distractors: 10,
            catalogue: default_catalogue(),
        }
    }
}

impl SceneConfig {
    pub fn class(&self, category: &str) -> Option<&ObjectClass> {
        self.catalogue.iter().find(|c| c.category == category)
    }
}

/// Builds a scene that is a pure function of `(seed, config)`.
pub fn generate_scene(seed: u64, config: &SceneConfig) -> Result<Scene, WorldError> {
    if config.feasible_regions == 0
        || config.region_size <= 0.0
        || config.size_x < config.region_size
        || config.size_y < config.region_size
    {
        return Err(WorldError::NoFeasibleArea);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bounds = Aabb::new(V3::zero(), V3::new(config.size_x, config.size_y, config.height));

    let start = sample_region(&mut rng, "start", config.start_region_size, config, &[])
        .ok_or(WorldError::NoFeasibleArea)?;
    let mut regions: Vec<Region> = Vec::new();
    for k in 0..config.feasible_regions {
        let mut taken = regions.clone();
        taken.push(start.clone());
        if let Some(r) = sample_region(&mut rng, &format!("region-{k}"), config.region_size, config, &taken) {
            regions.push(r);
        }
    }
    if regions.is_empty() {
        return Err(WorldError::NoFeasibleArea);
    }

    let target_count = (config.obstacle_density * config.size_x * config.size_y).round() as usize;
    let mut obstacles = Vec::with_capacity(target_count);
    for _ in 0..target_count {
        for _ in 0..OBSTACLE_ATTEMPTS {
            let ob = sample_obstacle(&mut rng, config);
            let bb = ob.aabb();
            let reserved = std::iter::once(&start)
                .chain(regions.iter())
                .any(|r| r.overlaps_footprint(&bb, config.clearance));
            if !reserved {
                obstacles.push(ob);
                break;
            }
        }
    }

    let id = format!("{}-{seed}", config.style);
    let mut scene = Scene::new(id, seed, config.style, bounds, start, regions, obstacles, Vec::new())?;
    if !config.catalogue.is_empty() {
        for k in 0..config.distractors {
            let class = &config.catalogue[rng.gen_range(0..config.catalogue.len())];
            let region = scene.feasible_regions()[rng.gen_range(0..scene.feasible_regions().len())].name.clone();
            let obj_seed = seed ^ 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(k as u64 + 1);
            if let Ok(o) = place_object(&scene, class, &region, obj_seed) {
                scene = scene.with_objects([o])?;
            }
        }
    }
    Ok(scene)
}

fn sample_region(
    rng: &mut ChaCha8Rng,
    name: &str,
    size: f64,
    config: &SceneConfig,
    taken: &[Region],
) -> Option<Region> {
    // keep regions off the border so obstacles can still surround them
    let margin = 10.0f64.min(0.5 * (config.size_x - size)).min(0.5 * (config.size_y - size));
    for _ in 0..100 {
        let x = rng.gen_range(margin..=config.size_x - size - margin);
        let y = rng.gen_range(margin..=config.size_y - size - margin);
        let r = Region::new(name, x, y, x + size, y + size);
        let spaced = Region::new("", x - config.clearance, y - config.clearance, x + size + config.clearance, y + size + config.clearance);
        if !taken.iter().any(|t| t.overlaps(&spaced)) {
            return Some(r);
        }
    }
    None
}

fn sample_obstacle(rng: &mut ChaCha8Rng, config: &SceneConfig) -> Obstacle {
    let roll: f64 = rng.gen();
    let (sx, sy) = (config.size_x, config.size_y);
    let top = config.height;
    let boxed = |rng: &mut ChaCha8Rng, material, w: (f64, f64), h: (f64, f64)| {
        let wx = rng.gen_range(w.0..w.1);
        let wy = rng.gen_range(w.0..w.1);
        let hz = rng.gen_range(h.0..h.1).min(top);
        let x = rng.gen_range(0.0..sx - wx);
        let y = rng.gen_range(0.0..sy - wy);
        Obstacle::boxed(material, V3::new(x, y, 0.0), V3::new(x + wx, y + wy, hz))
    };
    let tree = |rng: &mut ChaCha8Rng, r: (f64, f64), h: (f64, f64)| {
        let radius = rng.gen_range(r.0..r.1);
        let height = rng.gen_range(h.0..h.1).min(top);
        let x = rng.gen_range(radius..sx - radius);
        let y = rng.gen_range(radius..sy - radius);
        Obstacle::cylinder(Material::Vegetation, x, y, radius, 0.0, height)
    };
    match config.style {
        SceneStyle::Urban if roll < 0.85 => boxed(rng, Material::Building, (6.0, 20.0), (8.0, 60.0)),
        SceneStyle::Urban => tree(rng, (1.0, 2.5), (6.0, 14.0)),
        SceneStyle::Forest if roll < 0.75 => tree(rng, (0.8, 2.5), (8.0, 25.0)),
        SceneStyle::Forest if roll < 0.85 => mound(rng, config),
        SceneStyle::Forest => boxed(rng, Material::Rock, (2.0, 5.0), (1.0, 4.0)),
        SceneStyle::Open if roll < 0.5 => boxed(rng, Material::Building, (4.0, 10.0), (3.0, 8.0)),
        SceneStyle::Open => tree(rng, (1.0, 2.0), (5.0, 12.0)),
    }
}

/// Smooth terrain bump as a heightfield patch.
fn mound(rng: &mut ChaCha8Rng, config: &SceneConfig) -> Obstacle {
    let (nx, ny) = (6usize, 6usize);
    let cell_size = rng.gen_range(3.0..5.0);
    let peak = rng.gen_range(2.0..12.0f64).min(config.height);
    let origin_x = rng.gen_range(0.0..config.size_x - nx as f64 * cell_size);
    let origin_y = rng.gen_range(0.0..config.size_y - ny as f64 * cell_size);
    let heights = (0..nx * ny)
        .map(|k| {
            let u = ((k % nx) as f64 + 0.5) / nx as f64 - 0.5;
            let v = ((k / nx) as f64 + 0.5) / ny as f64 - 0.5;
            peak * (-(u * u + v * v) * 6.0).exp()
        })
        .collect();
    Obstacle {
        material: Material::Terrain,
        shape: Shape::Heightfield { origin_x, origin_y, cell_size, nx, ny, heights },
    }
}

/// Uniformly places an object inside a named region by rejection sampling.
pub fn place_object(scene: &Scene, class: &ObjectClass, region: &str, rng_seed: u64) -> Result<PlacedObject, WorldError> {
    let reg = scene.region(region).ok_or_else(|| WorldError::UnknownRegion(region.to_string()))?;
    let r = class.bounding_radius;
    if reg.max_x - reg.min_x < 2.0 * r || reg.max_y - reg.min_y < 2.0 * r {
        return Err(WorldError::PlacementFailed(region.to_string()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for _ in 0..PLACEMENT_ATTEMPTS {
        let x = rng.gen_range(reg.min_x + r..=reg.max_x - r);
        let y = rng.gen_range(reg.min_y + r..=reg.max_y - r);
        let position = V3::new(x, y, r);
        if !scene.placement_blocked(position, r) {
            return Ok(PlacedObject { category: class.category.clone(), position, bounding_radius: r, is_target: false });
        }
    }
    Err(WorldError::PlacementFailed(region.to_string()))
}
