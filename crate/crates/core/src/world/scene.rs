use serde::{Deserialize, Serialize};

use super::primitives::{
    point_box_distance, point_cylinder_distance, ray_box, ray_cylinder, ray_ground, ray_sphere,
};
use super::WorldError;
use crate::V3;

pub const SCENE_SCHEMA_VERSION: u32 = 1;

/// Edge length of the horizontal acceleration grid, meters.
const GRID_CELL: f64 = 10.0;
const FOOTPRINT_PAD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: V3,
    pub max: V3,
}

impl Aabb {
    pub fn new(min: V3, max: V3) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, p: V3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    pub fn contains_box(&self, other: &Aabb) -> bool {
        self.contains(other.min) && self.contains(other.max)
    }

    pub fn clamp(&self, p: V3) -> V3 {
        V3::new(
            p.x.clamp(self.min.x, self.max.x),
            p.y.clamp(self.min.y, self.max.y),
            p.z.clamp(self.min.z, self.max.z),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Material {
    Building,
    Vegetation,
    Terrain,
    Rock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Box {
        min: V3,
        max: V3,
    },
    /// Vertical cylinder.
    Cylinder {
        center_x: f64,
        center_y: f64,
        radius: f64,
        z_min: f64,
        z_max: f64,
    },
    /// Grid of ground-standing columns; `heights` is row-major over `ny` rows of `nx` cells.
    Heightfield {
        origin_x: f64,
        origin_y: f64,
        cell_size: f64,
        nx: usize,
        ny: usize,
        heights: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub material: Material,
    #[serde(flatten)]
    pub shape: Shape,
}

impl Obstacle {
    pub fn boxed(material: Material, min: V3, max: V3) -> Self {
        Self { material, shape: Shape::Box { min, max } }
    }

    pub fn cylinder(material: Material, center_x: f64, center_y: f64, radius: f64, z_min: f64, z_max: f64) -> Self {
        Self { material, shape: Shape::Cylinder { center_x, center_y, radius, z_min, z_max } }
    }

    pub fn aabb(&self) -> Aabb {
        match &self.shape {
            Shape::Box { min, max } => Aabb::new(*min, *max),
            Shape::Cylinder { center_x, center_y, radius, z_min, z_max } => Aabb::new(
                V3::new(center_x - radius, center_y - radius, *z_min),
                V3::new(center_x + radius, center_y + radius, *z_max),
            ),
            Shape::Heightfield { origin_x, origin_y, cell_size, nx, ny, heights } => {
                let top = heights.iter().copied().fold(0.0, f64::max);
                Aabb::new(
                    V3::new(*origin_x, *origin_y, 0.0),
                    V3::new(origin_x + cell_size * *nx as f64, origin_y + cell_size * *ny as f64, top),
                )
            }
        }
    }

    /// Iterates the solid columns of a heightfield as boxes.
    fn columns(&self) -> impl Iterator<Item = (V3, V3)> + '_ {
        let (ox, oy, cs, nx, heights): (f64, f64, f64, usize, &[f64]) = match &self.shape {
            Shape::Heightfield { origin_x, origin_y, cell_size, nx, heights, .. } => {
                (*origin_x, *origin_y, *cell_size, *nx, heights)
            }
            _ => (0.0, 0.0, 0.0, 1, &[]),
        };
        heights.iter().enumerate().filter(|(_, h)| **h > 0.0).map(move |(k, h)| {
            let (i, j) = ((k % nx) as f64, (k / nx) as f64);
            (
                V3::new(ox + i * cs, oy + j * cs, 0.0),
                V3::new(ox + (i + 1.0) * cs, oy + (j + 1.0) * cs, *h),
            )
        })
    }

    pub fn raycast(&self, o: V3, d: V3) -> Option<f64> {
        match &self.shape {
            Shape::Box { min, max } => ray_box(o, d, *min, *max),
            Shape::Cylinder { center_x, center_y, radius, z_min, z_max } => {
                ray_cylinder(o, d, *center_x, *center_y, *radius, *z_min, *z_max)
            }
            Shape::Heightfield { .. } => {
                let bb = self.aabb();
                ray_box(o, d, bb.min, bb.max)?;
                self.columns().filter_map(|(lo, hi)| ray_box(o, d, lo, hi)).reduce(f64::min)
            }
        }
    }

    /// Distance from a point to the solid; zero inside.
    pub fn distance(&self, p: V3) -> f64 {
        match &self.shape {
            Shape::Box { min, max } => point_box_distance(p, *min, *max),
            Shape::Cylinder { center_x, center_y, radius, z_min, z_max } => {
                point_cylinder_distance(p, *center_x, *center_y, *radius, *z_min, *z_max)
            }
            Shape::Heightfield { .. } => self
                .columns()
                .map(|(lo, hi)| point_box_distance(p, lo, hi))
                .fold(f64::INFINITY, f64::min),
        }
    }
}

/// Named ground rectangle reserved for object placement or the start area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub name: String,
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Region {
    pub fn new(name: impl Into<String>, min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Self { name: name.into(), min_x, min_y, max_x, max_y }
    }

    pub fn area(&self) -> f64 {
        (self.max_x - self.min_x).max(0.0) * (self.max_y - self.min_y).max(0.0)
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.min_x + self.max_x), 0.5 * (self.min_y + self.max_y))
    }

    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }

    /// Open-interior overlap; touching edges do not count.
    pub fn overlaps(&self, other: &Region) -> bool {
        self.min_x < other.max_x && other.min_x < self.max_x && self.min_y < other.max_y && other.min_y < self.max_y
    }

    pub fn overlaps_footprint(&self, bb: &Aabb, margin: f64) -> bool {
        self.min_x - margin < bb.max.x
            && bb.min.x < self.max_x + margin
            && self.min_y - margin < bb.max.y
            && bb.min.y < self.max_y + margin
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedObject {
    pub category: String,
    /// Center of the bounding sphere; resting objects sit at `z = bounding_radius`.
    pub position: V3,
    pub bounding_radius: f64,
    pub is_target: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneStyle {
    Urban,
    Forest,
    Open,
}

impl std::fmt::Display for SceneStyle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SceneStyle::Urban => "urban",
            SceneStyle::Forest => "forest",
            SceneStyle::Open => "open",
        })
    }
}

/// Surface hit by a ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Surface {
    Ground,
    Obstacle(Material),
    /// Index into [`Scene::objects`].
    Object(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub distance: f64,
    pub surface: Surface,
}

/// Serialized form of a scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SceneDoc {
    version: u32,
    id: String,
    seed: u64,
    style: SceneStyle,
    bounds: Aabb,
    start_region: Region,
    feasible_regions: Vec<Region>,
    obstacles: Vec<Obstacle>,
    objects: Vec<PlacedObject>,
}

/// Uniform horizontal grid of primitive ids used to prune ray and sphere queries.
#[derive(Debug, Clone, Default)]
struct GridIndex {
    origin_x: f64,
    origin_y: f64,
    nx: usize,
    ny: usize,
    /// ids below `n_obstacles` are obstacles, the rest objects
    cells: Vec<Vec<u32>>,
    n_obstacles: usize,
}

impl GridIndex {
    fn build(bounds: &Aabb, obstacles: &[Obstacle], objects: &[PlacedObject]) -> Self {
        let nx = (((bounds.max.x - bounds.min.x) / GRID_CELL).ceil() as usize).max(1);
        let ny = (((bounds.max.y - bounds.min.y) / GRID_CELL).ceil() as usize).max(1);
        let mut grid = Self {
            origin_x: bounds.min.x,
            origin_y: bounds.min.y,
            nx,
            ny,
            cells: vec![Vec::new(); nx * ny],
            n_obstacles: obstacles.len(),
        };
        let footprints = obstacles.iter().map(|o| o.aabb()).chain(objects.iter().map(|o| {
            let r = V3::new(o.bounding_radius, o.bounding_radius, o.bounding_radius);
            Aabb::new(o.position - r, o.position + r)
        }));
        for (id, bb) in footprints.enumerate() {
            let (i0, j0) = grid.cell_of(bb.min.x - FOOTPRINT_PAD, bb.min.y - FOOTPRINT_PAD);
            let (i1, j1) = grid.cell_of(bb.max.x + FOOTPRINT_PAD, bb.max.y + FOOTPRINT_PAD);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    grid.cells[j * nx + i].push(id as u32);
                }
            }
        }
        grid
    }

    fn cell_of(&self, x: f64, y: f64) -> (usize, usize) {
        let i = ((x - self.origin_x) / GRID_CELL).floor().clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = ((y - self.origin_y) / GRID_CELL).floor().clamp(0.0, (self.ny - 1) as f64) as usize;
        (i, j)
    }

    fn cell(&self, i: usize, j: usize) -> &[u32] {
        &self.cells[j * self.nx + i]
    }

    fn extent(&self) -> (f64, f64, f64, f64) {
        (
            self.origin_x,
            self.origin_y,
            self.origin_x + self.nx as f64 * GRID_CELL,
            self.origin_y + self.ny as f64 * GRID_CELL,
        )
    }
}

/// Procedural world: ground plane at `z = 0`, analytic obstacles and placed objects.
///
/// Immutable once built; all queries take `&self`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "SceneDoc", into = "SceneDoc")]
pub struct Scene {
    doc: SceneDoc,
    index: GridIndex,
}

impl PartialEq for Scene {
    fn eq(&self, other: &Self) -> bool {
        self.doc == other.doc
    }
}

impl TryFrom<SceneDoc> for Scene {
    type Error = WorldError;
    fn try_from(doc: SceneDoc) -> Result<Self, WorldError> {
        if doc.version != SCENE_SCHEMA_VERSION {
            return Err(WorldError::SchemaVersion(doc.version));
        }
        Self::validate(&doc)?;
        let index = GridIndex::build(&doc.bounds, &doc.obstacles, &doc.objects);
        Ok(Self { doc, index })
    }
}

impl From<Scene> for SceneDoc {
    fn from(s: Scene) -> Self {
        s.doc
    }
}

impl Scene {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: impl Into<String>,
        seed: u64,
        style: SceneStyle,
        bounds: Aabb,
        start_region: Region,
        feasible_regions: Vec<Region>,
        obstacles: Vec<Obstacle>,
        objects: Vec<PlacedObject>,
    ) -> Result<Self, WorldError> {
        SceneDoc {
            version: SCENE_SCHEMA_VERSION,
            id: id.into(),
            seed,
            style,
            bounds,
            start_region,
            feasible_regions,
            obstacles,
            objects,
        }
        .try_into()
    }

    /// Empty scene with only the ground plane.
    pub fn open_ground(id: impl Into<String>, bounds: Aabb) -> Self {
        let start = Region::new("start", bounds.min.x, bounds.min.y, bounds.min.x, bounds.min.y);
        Self::new(id, 0, SceneStyle::Open, bounds, start, Vec::new(), Vec::new(), Vec::new())
            .expect("empty scene is valid")
    }

    fn validate(doc: &SceneDoc) -> Result<(), WorldError> {
        for (i, o) in doc.obstacles.iter().enumerate() {
            if !doc.bounds.contains_box(&o.aabb()) {
                return Err(WorldError::OutOfBounds(format!("obstacle {i}")));
            }
        }
        for o in &doc.objects {
            if !doc.bounds.contains(o.position) {
                return Err(WorldError::OutOfBounds(format!("object {}", o.category)));
            }
        }
        for (i, a) in doc.feasible_regions.iter().enumerate() {
            if doc.feasible_regions[i + 1..].iter().any(|b| a.overlaps(b)) {
                return Err(WorldError::OverlappingRegions(a.name.clone()));
            }
        }
        Ok(())
    }

    pub fn id(&self) -> &str {
        &self.doc.id
    }

    pub fn seed(&self) -> u64 {
        self.doc.seed
    }

    pub fn style(&self) -> SceneStyle {
        self.doc.style
    }

    pub fn bounds(&self) -> &Aabb {
        &self.doc.bounds
    }

    pub fn start_region(&self) -> &Region {
        &self.doc.start_region
    }

    pub fn feasible_regions(&self) -> &[Region] {
        &self.doc.feasible_regions
    }

    pub fn region(&self, name: &str) -> Option<&Region> {
        self.doc.feasible_regions.iter().find(|r| r.name == name)
    }

    pub fn obstacles(&self) -> &[Obstacle] {
        &self.doc.obstacles
    }

    pub fn objects(&self) -> &[PlacedObject] {
        &self.doc.objects
    }

    /// Copy of the scene with additional objects; used to insert an episode target.
    pub fn with_objects(&self, extra: impl IntoIterator<Item = PlacedObject>) -> Result<Self, WorldError> {
        let mut doc = self.doc.clone();
        doc.objects.extend(extra);
        doc.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.doc).expect("scene serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, WorldError> {
        let doc: SceneDoc = serde_json::from_str(s).map_err(|e| WorldError::Parse(e.to_string()))?;
        doc.try_into()
    }

    fn object_raycast(&self, k: usize, o: V3, d: V3) -> Option<f64> {
        let obj = &self.doc.objects[k];
        ray_sphere(o, d, obj.position, obj.bounding_radius)
    }

    /// First intersection with ground, obstacles or object bounding spheres within `max_range`.
    ///
    /// An origin inside a solid yields a hit at distance 0.
    pub fn raycast(&self, origin: V3, dir: V3, max_range: f64) -> Option<Hit> {
        let mut best: Option<Hit> =
            ray_ground(origin, dir).filter(|t| *t <= max_range).map(|t| Hit { distance: t, surface: Surface::Ground });
        let mut limit = best.map_or(max_range, |h| h.distance);
        if limit == 0.0 {
            return best;
        }

        // clip to the grid rectangle in the horizontal plane
        let (x0, y0, x1, y1) = self.index.extent();
        let mut t_enter = 0.0f64;
        let mut t_exit = limit;
        for (o, d, lo, hi) in [(origin.x, dir.x, x0, x1), (origin.y, dir.y, y0, y1)] {
            if d.abs() < 1e-15 {
                if o < lo || o > hi {
                    return best;
                }
            } else {
                let (mut a, mut b) = ((lo - o) / d, (hi - o) / d);
                if a > b {
                    std::mem::swap(&mut a, &mut b);
                }
                t_enter = t_enter.max(a);
                t_exit = t_exit.min(b);
            }
        }
        if t_enter > t_exit {
            return best;
        }

        let start = origin + dir * t_enter;
        let (mut i, mut j) = self.index.cell_of(start.x, start.y);
        let step_i: i64 = if dir.x > 0.0 { 1 } else { -1 };
        let step_j: i64 = if dir.y > 0.0 { 1 } else { -1 };
        let boundary = |cell: usize, step: i64, o: f64, d: f64, base: f64| -> (f64, f64) {
            if d.abs() < 1e-15 {
                return (f64::INFINITY, f64::INFINITY);
            }
            let edge = base + (cell as f64 + if step > 0 { 1.0 } else { 0.0 }) * GRID_CELL;
            ((edge - o) / d, GRID_CELL / d.abs())
        };
        let (mut next_x, delta_x) = boundary(i, step_i, origin.x, dir.x, x0);
        let (mut next_y, delta_y) = boundary(j, step_j, origin.y, dir.y, y0);

        loop {
            for &id in self.index.cell(i, j) {
                let id = id as usize;
                let hit = if id < self.index.n_obstacles {
                    let ob = &self.doc.obstacles[id];
                    ob.raycast(origin, dir).map(|t| (t, Surface::Obstacle(ob.material)))
                } else {
                    let k = id - self.index.n_obstacles;
                    self.object_raycast(k, origin, dir).map(|t| (t, Surface::Object(k)))
                };
                if let Some((t, surface)) = hit {
                    if t <= limit && best.is_none_or(|b| t < b.distance) {
                        best = Some(Hit { distance: t, surface });
                        limit = t;
                    }
                }
            }
            let cell_exit = next_x.min(next_y);
            if limit <= cell_exit || cell_exit > t_exit {
                break;
            }
            if next_x < next_y {
                let ni = i as i64 + step_i;
                if ni < 0 || ni >= self.index.nx as i64 {
                    break;
                }
                i = ni as usize;
                next_x += delta_x;
            } else {
                let nj = j as i64 + step_j;
                if nj < 0 || nj >= self.index.ny as i64 {
                    break;
                }
                j = nj as usize;
                next_y += delta_y;
            }
        }
        best
    }

    /// True iff a sphere intersects an obstacle (closed surfaces).
    pub fn sphere_hits_obstacles(&self, p: V3, radius: f64) -> bool {
        self.ids_near(p, radius)
            .filter(|id| *id < self.index.n_obstacles)
            .any(|id| self.doc.obstacles[id].distance(p) <= radius)
    }

    fn sphere_hits_objects(&self, p: V3, radius: f64) -> bool {
        self.ids_near(p, radius).filter(|id| *id >= self.index.n_obstacles).any(|id| {
            let o = &self.doc.objects[id - self.index.n_obstacles];
            (o.position - p).norm() <= radius + o.bounding_radius
        })
    }

    fn ids_near(&self, p: V3, radius: f64) -> impl Iterator<Item = usize> + '_ {
        let (i0, j0) = self.index.cell_of(p.x - radius, p.y - radius);
        let (i1, j1) = self.index.cell_of(p.x + radius, p.y + radius);
        let mut seen = Vec::new();
        (j0..=j1).flat_map(move |j| (i0..=i1).map(move |i| (i, j))).flat_map(move |(i, j)| {
            let fresh: Vec<usize> = self
                .index
                .cell(i, j)
                .iter()
                .map(|id| *id as usize)
                .filter(|id| {
                    if seen.contains(id) {
                        false
                    } else {
                        seen.push(*id);
                        true
                    }
                })
                .collect();
            fresh
        })
    }

    /// True iff a sphere touches the ground or any obstacle. Objects are not solid for flight.
    pub fn collision_check(&self, p: V3, radius: f64) -> bool {
        p.z - radius <= 0.0 || self.sphere_hits_obstacles(p, radius)
    }

    /// True iff a placed object of this radius would overlap obstacles or other objects.
    pub fn placement_blocked(&self, p: V3, radius: f64) -> bool {
        self.sphere_hits_obstacles(p, radius) || self.sphere_hits_objects(p, radius)
    }

    /// Exact distance to the closest surface (ground, obstacle or object), by exhaustive scan.
    pub fn nearest_surface_distance(&self, p: V3) -> f64 {
        let obstacles = self.doc.obstacles.iter().map(|o| o.distance(p));
        let objects = self.doc.objects.iter().map(|o| ((o.position - p).norm() - o.bounding_radius).max(0.0));
        obstacles.chain(objects).fold(p.z.max(0.0), f64::min)
    }
}
