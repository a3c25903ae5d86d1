//! Input loading shared by the subcommands: SDF molecules and precomputed
//! .kq.json descriptors are accepted interchangeably.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use kqmolsa::mol_ingest::{build_sphere_set, parse_sdf, SphereSet};
use kqmolsa::pipeline::sphere_set_descriptor;
use kqmolsa::quantizer::{load_descriptor, QuantizeOptions, ShapeDescriptor};
use rayon::prelude::*;

pub enum LoadedInput {
    Spheres(SphereSet),
    Descriptor(ShapeDescriptor),
}

impl LoadedInput {
    pub fn into_descriptor(self, opts: &QuantizeOptions) -> Result<ShapeDescriptor> {
        match self {
            LoadedInput::Spheres(set) => Ok(sphere_set_descriptor(&set, opts)?),
            LoadedInput::Descriptor(d) => Ok(d),
        }
    }
}

fn is_descriptor_file(path: &Path) -> bool {
    path.to_string_lossy().ends_with(".kq.json")
        || path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Loads one molecule. SDF files with several records contribute their
/// first record; descriptor files are used as-is.
pub fn load_one(path: &Path, radii: &BTreeMap<String, f64>) -> Result<LoadedInput> {
    if is_descriptor_file(path) {
        let d = load_descriptor(&path.to_string_lossy())
            .with_context(|| format!("reading {}", path.display()))?;
        return Ok(LoadedInput::Descriptor(d));
    }
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let records = parse_sdf(&text).with_context(|| format!("parsing {}", path.display()))?;
    if records.len() > 1 {
        log::warn!("{}: {} records, using the first", path.display(), records.len());
    }
    let mol = records.into_iter().next().context("empty SDF")?;
    Ok(LoadedInput::Spheres(build_sphere_set(&mol, radii)?))
}

/// All records of an SDF reduced to sphere sets; per-record failures are
/// reported as messages so the caller can keep going.
pub fn sdf_sphere_sets(
    path: &Path,
    radii: &BTreeMap<String, f64>,
) -> Result<Vec<std::result::Result<SphereSet, String>>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let records = parse_sdf(&text).with_context(|| format!("parsing {}", path.display()))?;
    if records.is_empty() {
        bail!("{}: no molecule records", path.display());
    }
    Ok(records
        .iter()
        .map(|mol| build_sphere_set(mol, radii).map_err(|e| format!("{}: {e}", mol.name)))
        .collect())
}

/// Loads a screening library: either an SDF (every record is quantized) or
/// a directory of .kq.json files, taken in file-name order. Returns the
/// descriptors plus one message per member that could not be built.
pub fn load_library(
    path: &Path,
    radii: &BTreeMap<String, f64>,
    opts: &QuantizeOptions,
) -> Result<(Vec<ShapeDescriptor>, Vec<String>)> {
    let mut ok = Vec::new();
    let mut failed = Vec::new();

    if path.is_dir() {
        let mut files: Vec<_> = std::fs::read_dir(path)
            .with_context(|| format!("reading {}", path.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.to_string_lossy().ends_with(".kq.json"))
            .collect();
        files.sort();
        if files.is_empty() {
            bail!("{}: no .kq.json files", path.display());
        }
        for file in files {
            match load_descriptor(&file.to_string_lossy()) {
                Ok(d) => ok.push(d),
                Err(e) => failed.push(format!("{}: {e}", file.display())),
            }
        }
        return Ok((ok, failed));
    }

    let outcomes: Vec<_> = sdf_sphere_sets(path, radii)?
        .into_par_iter()
        .map(|entry| {
            entry.and_then(|set| {
                sphere_set_descriptor(&set, opts).map_err(|e| format!("{}: {e}", set.name))
            })
        })
        .collect();
    for outcome in outcomes {
        match outcome {
            Ok(d) => ok.push(d),
            Err(reason) => failed.push(reason),
        }
    }
    Ok((ok, failed))
}
