//! JSON instance files. Paths inside ensemble and family files are resolved
//! relative to the file that names them.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::ensemble::{FeatureMap, ModelEnsemble, WeightMatrix};
use crate::error::{Error, Result};
use crate::mdp::TabularMdp;
use crate::selection::PartitionFamily;

/// Ensemble file: the base model files, in order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleFile {
    pub models: Vec<PathBuf>,
}

/// Family file: partition feature files, coarsest first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyFile {
    pub partitions: Vec<PathBuf>,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_owned(),
        message: e.to_string(),
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_owned(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse {
        path: path.to_owned(),
        message: e.to_string(),
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io)
}

/// `relative` joined onto the directory holding `anchor`.
pub fn resolve(anchor: &Path, relative: &Path) -> PathBuf {
    match anchor.parent() {
        Some(dir) if relative.is_relative() => dir.join(relative),
        _ => relative.to_owned(),
    }
}

pub fn read_mdp(path: &Path) -> Result<TabularMdp> {
    read_json(path)
}

pub fn write_mdp(path: &Path, mdp: &TabularMdp) -> Result<()> {
    write_json(path, mdp)
}

pub fn read_feature_map(path: &Path) -> Result<FeatureMap> {
    read_json(path)
}

pub fn write_feature_map(path: &Path, phi: &FeatureMap) -> Result<()> {
    write_json(path, phi)
}

pub fn read_weights(path: &Path) -> Result<WeightMatrix> {
    read_json(path)
}

pub fn write_weights(path: &Path, w: &WeightMatrix) -> Result<()> {
    write_json(path, w)
}

pub fn read_ensemble(path: &Path) -> Result<ModelEnsemble> {
    let file: EnsembleFile = read_json(path)?;
    let models = file
        .models
        .iter()
        .map(|m| read_mdp(&resolve(path, m)))
        .collect::<Result<Vec<_>>>()?;
    ModelEnsemble::new(models).map_err(|e| Error::Parse {
        path: path.to_owned(),
        message: e.to_string(),
    })
}

/// Writes `<stem>_<k>.json` per base model next to `path`, then the ensemble
/// file itself. Returns every path written.
pub fn write_ensemble(path: &Path, ensemble: &ModelEnsemble) -> Result<Vec<PathBuf>> {
    let stem = file_stem(path);
    let mut written = Vec::new();
    let mut names = Vec::new();
    for (k, model) in ensemble.models().iter().enumerate() {
        let name = PathBuf::from(format!("{stem}_{k}.json"));
        let full = resolve(path, &name);
        write_mdp(&full, model)?;
        written.push(full);
        names.push(name);
    }
    write_json(path, &EnsembleFile { models: names })?;
    written.push(path.to_owned());
    Ok(written)
}

pub fn read_family(path: &Path) -> Result<PartitionFamily> {
    let file: FamilyFile = read_json(path)?;
    let partitions = file
        .partitions
        .iter()
        .map(|p| read_feature_map(&resolve(path, p)))
        .collect::<Result<Vec<_>>>()?;
    PartitionFamily::new(partitions).map_err(|e| Error::Parse {
        path: path.to_owned(),
        message: e.to_string(),
    })
}

/// Writes `<stem>_<i>.json` per partition next to `path`, then the family
/// file. Returns every path written.
pub fn write_family(path: &Path, family: &PartitionFamily) -> Result<Vec<PathBuf>> {
    let stem = file_stem(path);
    let mut written = Vec::new();
    let mut names = Vec::new();
    for (i, phi) in family.partitions().iter().enumerate() {
        let name = PathBuf::from(format!("{stem}_{i}.json"));
        let full = resolve(path, &name);
        write_feature_map(&full, phi)?;
        written.push(full);
        names.push(name);
    }
    write_json(path, &FamilyFile { partitions: names })?;
    written.push(path.to_owned());
    Ok(written)
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "file".into(), |s| s.to_string_lossy().into_owned())
}
