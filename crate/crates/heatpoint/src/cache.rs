//! Sidecar cache of calibrated envelope constants, keyed by geometry.
//!
//! Calibration is deterministic, so the cache only saves time; a missing or
//! unreadable cache is recomputed and rewritten.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use heatpoint_core::bounds::BoundConstants;
use serde::{Deserialize, Serialize};

/// Serializable mirror of [`BoundConstants`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoredConstants {
    /// `C₂`.
    pub c2: f64,
    /// `A`.
    pub a: f64,
    /// `B(ε)`.
    pub b_eps: f64,
    /// `C(ε, κ)`.
    pub c_eps: f64,
    /// `c`.
    pub c_lower: f64,
    /// `ξ`.
    pub xi: f64,
    /// Volume of compact geometries.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume: Option<f64>,
    /// Read off an exact kernel.
    pub exact: bool,
    /// Fitted on a grid.
    pub calibrated: bool,
}

impl From<BoundConstants> for StoredConstants {
    fn from(k: BoundConstants) -> Self {
        StoredConstants {
            c2: k.c2,
            a: k.a,
            b_eps: k.b_eps,
            c_eps: k.c_eps,
            c_lower: k.c_lower,
            xi: k.xi,
            volume: k.volume,
            exact: k.exact,
            calibrated: k.calibrated,
        }
    }
}

impl From<StoredConstants> for BoundConstants {
    fn from(s: StoredConstants) -> Self {
        BoundConstants {
            c2: s.c2,
            a: s.a,
            b_eps: s.b_eps,
            c_eps: s.c_eps,
            c_lower: s.c_lower,
            xi: s.xi,
            volume: s.volume,
            exact: s.exact,
            calibrated: s.calibrated,
        }
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct CacheFile {
    #[serde(default)]
    constants: BTreeMap<String, StoredConstants>,
}

/// In-memory view of one cache file.
#[derive(Debug, Default)]
pub struct CalibrationCache {
    path: Option<PathBuf>,
    file: CacheFile,
}

impl CalibrationCache {
    /// Cache that never touches the disk.
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Loads `path` if it exists and parses; starts empty otherwise.
    pub fn open(path: &Path) -> Self {
        let file = fs::read_to_string(path)
            .ok()
            .and_then(|t| toml::from_str(&t).ok())
            .unwrap_or_default();
        CalibrationCache { path: Some(path.to_path_buf()), file }
    }

    /// Stored constants for `key`, if they pass validation.
    pub fn get(&self, key: &str) -> Option<BoundConstants> {
        self.file.constants.get(key).and_then(|s| BoundConstants::from(*s).validated().ok())
    }

    /// Records `k` and rewrites the file (via a temporary and a rename).
    pub fn put(&mut self, key: &str, k: BoundConstants) -> std::io::Result<()> {
        self.file.constants.insert(key.to_string(), k.into());
        let Some(path) = &self.path else { return Ok(()) };
        let text = toml::to_string(&self.file).expect("cache entries are plain numbers");
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, text)?;
        fs::rename(tmp, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use heatpoint_core::bounds::calibrate;
    use heatpoint_core::ManifoldSpec;

    #[test]
    fn constants_survive_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cal.toml");
        let k = calibrate(&ManifoldSpec::sphere(1.0).unwrap()).unwrap();
        let mut c = CalibrationCache::open(&path);
        assert!(c.get("sphere:r=1").is_none());
        c.put("sphere:r=1", k).unwrap();
        assert_eq!(CalibrationCache::open(&path).get("sphere:r=1"), Some(k));
    }

    #[test]
    fn invalid_entries_are_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cal.toml");
        fs::write(&path, "[constants.x]\nc2 = 1.0\na = 1.0\nb_eps = 0.0\nc_eps = 1.0\nc_lower = 1.0\nxi = 0.0\nexact = false\ncalibrated = true\n").unwrap();
        assert!(CalibrationCache::open(&path).get("x").is_none());
        fs::write(&path, "not toml [").unwrap();
        assert!(CalibrationCache::open(&path).get("x").is_none());
    }
}
