//! Scenario files.

use std::fs;
use std::path::{Path, PathBuf};

use intersim_core::{Scenario, ScenarioError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path} does not match the scenario schema: {source}")]
    Schema {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{path} is not a valid scenario: {source}")]
    Invalid {
        path: PathBuf,
        source: ScenarioError,
    },
    #[error("no scenario files in {0}")]
    EmptyDir(PathBuf),
}

pub fn parse_scenario(text: &str, path: &Path) -> Result<Scenario, IoError> {
    let scenario: Scenario = serde_json::from_str(text).map_err(|source| IoError::Schema {
        path: path.to_owned(),
        source,
    })?;
    scenario.validate().map_err(|source| IoError::Invalid {
        path: path.to_owned(),
        source,
    })?;
    Ok(scenario)
}

/// Reads and validates one scenario JSON file.
pub fn load_scenario(path: &Path) -> Result<Scenario, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.to_owned(),
        source,
    })?;
    parse_scenario(&text, path)
}

pub fn save_scenario(scenario: &Scenario, path: &Path) -> Result<(), IoError> {
    let text = serde_json::to_string_pretty(scenario).expect("scenarios serialize");
    write_text(path, &text)
}

/// Every `*.json` file in `dir`, in file-name order.
pub fn load_scenario_dir(dir: &Path) -> Result<Vec<Scenario>, IoError> {
    let entries = fs::read_dir(dir).map_err(|source| IoError::Read {
        path: dir.to_owned(),
        source,
    })?;
    let mut paths = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| IoError::Read {
            path: dir.to_owned(),
            source,
        })?;
        let path = entry.path();
        if path.extension().is_some_and(|e| e == "json") {
            paths.push(path);
        }
    }
    if paths.is_empty() {
        return Err(IoError::EmptyDir(dir.to_owned()));
    }
    paths.sort();
    paths.iter().map(|p| load_scenario(p)).collect()
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| IoError::Write {
            path: parent.to_owned(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| IoError::Write {
        path: path.to_owned(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use intersim_core::scenario::gen_crossing;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = gen_crossing(1.3, 0.5, (9.0, 11.0), 4);
        let path = dir.path().join("s.json");
        save_scenario(&s, &path).unwrap();
        assert_eq!(load_scenario(&path).unwrap(), s);
    }

    #[test]
    fn schema_and_validation_errors_differ() {
        let p = Path::new("x.json");
        assert!(matches!(parse_scenario("{\"id\": 3}", p), Err(IoError::Schema { .. })));
        let mut s = gen_crossing(1.3, 0.5, (9.0, 11.0), 4);
        s.agents[1].reference_future.pop();
        let text = serde_json::to_string(&s).unwrap();
        assert!(matches!(parse_scenario(&text, p), Err(IoError::Invalid { .. })));
    }

    #[test]
    fn directory_loading() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_scenario_dir(dir.path()), Err(IoError::EmptyDir(_))));
        for (i, seed) in [5u64, 2].iter().enumerate() {
            let s = gen_crossing(1.3, 0.5, (9.0, 11.0), *seed);
            save_scenario(&s, &dir.path().join(format!("{i}.json"))).unwrap();
        }
        fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let loaded = load_scenario_dir(dir.path()).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded[0].id, "crossing-5");
    }
}
