//! On-disk scene and episode collections.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use uavnh_core::episode::{read_manifest, Episode};
use uavnh_core::world::Scene;

use crate::RunError;

/// Scenes keyed by id.
#[derive(Debug, Clone, Default)]
pub struct SceneStore {
    scenes: BTreeMap<String, Scene>,
}

impl SceneStore {
    pub fn new(scenes: impl IntoIterator<Item = Scene>) -> Self {
        Self { scenes: scenes.into_iter().map(|s| (s.id().to_string(), s)).collect() }
    }

    pub fn get(&self, id: &str) -> Option<&Scene> {
        self.scenes.get(id)
    }

    pub fn len(&self) -> usize {
        self.scenes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenes.is_empty()
    }

    pub fn scenes(&self) -> impl Iterator<Item = &Scene> {
        self.scenes.values()
    }

    /// Reads every `*.json` file in `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self, RunError> {
        let mut paths: Vec<_> = fs::read_dir(dir)
            .map_err(|e| RunError::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut scenes = Vec::new();
        for p in paths {
            let text = fs::read_to_string(&p).map_err(|e| RunError::io(&p, e))?;
            scenes.push(Scene::from_json(&text).map_err(|e| RunError::Parse(format!("{}: {e}", p.display())))?);
        }
        Ok(Self::new(scenes))
    }

    /// Writes one `<id>.json` per scene.
    pub fn save_dir(&self, dir: &Path) -> Result<(), RunError> {
        fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
        for s in self.scenes.values() {
            let p = dir.join(format!("{}.json", s.id()));
            fs::write(&p, s.to_json()).map_err(|e| RunError::io(&p, e))?;
        }
        Ok(())
    }
}

pub fn load_manifest(path: &Path) -> Result<Vec<Episode>, RunError> {
    let text = fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
    read_manifest(&text).map_err(|e| RunError::Parse(format!("{}: {e}", path.display())))
}

/// Episode ids from a split manifest, one JSON string per line.
pub fn load_id_list(path: &Path) -> Result<Vec<String>, RunError> {
    let text = fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str::<String>(l).map_err(|e| RunError::Parse(format!("{}: {e}", path.display()))))
        .collect()
}
