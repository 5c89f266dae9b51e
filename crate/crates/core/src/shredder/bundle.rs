use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Cursor;
use std::path::Path;

use image::{ImageFormat, RgbaImage};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{PuzzleBundle, ShredParams};
use crate::error::{Error, Result};
use crate::geometry::{Fragment, OutlineParams, RigidTransform2D};

pub const MANIFEST_FILE: &str = "manifest.json";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: u32,
    source_size: [u32; 2],
    seed: u64,
    params: ShredParams,
    outline: OutlineParams,
    fragments: Vec<FragmentEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FragmentEntry {
    id: usize,
    file: String,
    /// Top-left corner of the local frame in the source image.
    offset: [f64; 2],
    size: [u32; 2],
    /// Groundtruth pose, 3x3 row-major.
    groundtruth: [f64; 9],
    sha256: String,
}

fn fragment_file(id: usize) -> String {
    format!("fragment_{id}.png")
}

fn encode_png(img: &RgbaImage) -> Result<Vec<u8>> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)
        .map_err(|e| Error::InvalidInput(format!("png encoding failed: {e}")))?;
    Ok(buf.into_inner())
}

/// Writes `manifest.json` and one `fragment_<id>.png` per fragment.
pub fn write_bundle(bundle: &PuzzleBundle, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(bundle.len());
    for frag in &bundle.fragments {
        let file = fragment_file(frag.id);
        let bytes = encode_png(&frag.raster)?;
        let path = dir.join(&file);
        fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
        let pose = bundle
            .groundtruth_poses
            .get(&frag.id)
            .copied()
            .unwrap_or_default();
        entries.push(FragmentEntry {
            id: frag.id,
            file,
            offset: [pose.tx, pose.ty],
            size: [frag.width(), frag.height()],
            groundtruth: pose.to_row_major(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
    }
    let manifest = Manifest {
        format: FORMAT_VERSION,
        source_size: [bundle.source_size.0, bundle.source_size.1],
        seed: bundle.seed,
        params: bundle.params,
        outline: bundle.outline,
        fragments: entries,
    };
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json).map_err(|e| Error::io(&path, e))
}

pub fn read_bundle(dir: &Path) -> Result<PuzzleBundle> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::format(&path, "missing manifest"),
        _ => Error::io(&path, e),
    })?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))?;
    if manifest.format != FORMAT_VERSION {
        return Err(Error::format(
            &path,
            format!("unsupported format {}", manifest.format),
        ));
    }
    let ids: BTreeSet<usize> = manifest.fragments.iter().map(|f| f.id).collect();
    if ids.len() != manifest.fragments.len() {
        return Err(Error::format(&path, "fragment id collision"));
    }
    if ids.iter().copied().ne(0..ids.len()) {
        return Err(Error::format(&path, "fragment ids must be 0..n-1"));
    }

    let mut entries: Vec<&FragmentEntry> = manifest.fragments.iter().collect();
    entries.sort_by_key(|e| e.id);
    let mut fragments = Vec::with_capacity(entries.len());
    let mut groundtruth_poses = BTreeMap::new();
    for entry in entries {
        let fpath = dir.join(&entry.file);
        let bytes = fs::read(&fpath).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::format(&fpath, "fragment file missing"),
            _ => Error::io(&fpath, e),
        })?;
        if hex::encode(Sha256::digest(&bytes)) != entry.sha256 {
            return Err(Error::format(&fpath, "checksum mismatch"));
        }
        let raster = image::load_from_memory_with_format(&bytes, ImageFormat::Png)
            .map_err(|e| Error::format(&fpath, e.to_string()))?
            .into_rgba8();
        if [raster.width(), raster.height()] != entry.size {
            return Err(Error::format(&fpath, "fragment size does not match manifest"));
        }
        fragments.push(Fragment::new(entry.id, raster, &manifest.outline)?);
        groundtruth_poses.insert(entry.id, RigidTransform2D::from_row_major(&entry.groundtruth));
    }
    Ok(PuzzleBundle {
        fragments,
        groundtruth_poses,
        source_size: (manifest.source_size[0], manifest.source_size[1]),
        seed: manifest.seed,
        params: manifest.params,
        outline: manifest.outline,
    })
}
