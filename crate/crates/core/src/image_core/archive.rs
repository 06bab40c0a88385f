//! Binary cutout archives with a JSON sidecar manifest.
//!
//! Layout (all little-endian):
//!
//! | bytes   | content                                          |
//! |---------|--------------------------------------------------|
//! | 0..8    | magic `GXCUT001`                                 |
//! | 8..24   | `u32` count, bands, height, width                |
//! | 24..28  | `f32` pixel scale (arcsec/px)                    |
//! | 28..    | `f32` flux, entry-major, band-major, row-major   |
//!
//! The manifest lives next to the archive at `<archive>.json`.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Cutout, Plane, SurveyId, SurveySpec};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"GXCUT001";
const HEADER_LEN: usize = 28;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub object_id: String,
    /// Byte offset of the entry's first pixel.
    pub offset: u64,
    pub pairing_key: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchiveManifest {
    pub domain: SurveyId,
    pub survey: SurveySpec,
    pub entries: Vec<ManifestEntry>,
}

impl ArchiveManifest {
    /// Manifest describing `cutouts` written in order.
    pub fn for_cutouts(domain: SurveyId, survey: SurveySpec, cutouts: &[Cutout]) -> Self {
        let entry_bytes = (survey.num_bands() * survey.image_size * survey.image_size * 4) as u64;
        let entries = cutouts
            .iter()
            .enumerate()
            .map(|(i, c)| ManifestEntry {
                object_id: c.object_id().to_string(),
                offset: HEADER_LEN as u64 + i as u64 * entry_bytes,
                pairing_key: c.pairing_key().map(str::to_string),
            })
            .collect();
        Self {
            domain,
            survey,
            entries,
        }
    }

    fn entry_bytes(&self) -> u64 {
        (self.survey.num_bands() * self.survey.image_size * self.survey.image_size * 4) as u64
    }

    fn validate(&self) -> Result<()> {
        let mut keys = HashSet::new();
        for (i, e) in self.entries.iter().enumerate() {
            let expected = HEADER_LEN as u64 + i as u64 * self.entry_bytes();
            if e.offset != expected {
                return Err(Error::Format(format!(
                    "entry {i} offset {} (expected {expected})",
                    e.offset
                )));
            }
            if let Some(k) = &e.pairing_key {
                if !keys.insert(k) {
                    return Err(Error::Format(format!("duplicate pairing key {k}")));
                }
            }
        }
        Ok(())
    }
}

/// Sidecar manifest path for an archive.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Write `cutouts` and their manifest. Flux is stored as `f32`.
pub fn write_archive(cutouts: &[Cutout], manifest: &ArchiveManifest, path: &Path) -> Result<()> {
    manifest.validate()?;
    let survey = &manifest.survey;
    if manifest.entries.len() != cutouts.len() {
        return Err(Error::Format(format!(
            "manifest lists {} entries for {} cutouts",
            manifest.entries.len(),
            cutouts.len()
        )));
    }
    let scale32 = survey.pixel_scale as f32;
    for (c, e) in cutouts.iter().zip(&manifest.entries) {
        survey.check_cutout(c)?;
        if c.object_id() != e.object_id || c.pairing_key() != e.pairing_key.as_deref() {
            return Err(Error::Format(format!(
                "cutout {} does not match manifest entry {}",
                c.object_id(),
                e.object_id
            )));
        }
        if c.pixel_scale() as f32 != scale32 {
            return Err(Error::Format(format!(
                "cutout {} pixel scale {} differs from survey {}",
                c.object_id(),
                c.pixel_scale(),
                survey.pixel_scale
            )));
        }
    }

    let size = survey.image_size;
    let mut bytes = Vec::with_capacity(HEADER_LEN + cutouts.len() * manifest.entry_bytes() as usize);
    bytes.extend_from_slice(MAGIC);
    for v in [cutouts.len(), survey.num_bands(), size, size] {
        let v = u32::try_from(v).map_err(|_| Error::Format(format!("{v} exceeds u32")))?;
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes.extend_from_slice(&scale32.to_le_bytes());
    for c in cutouts {
        for band in c.bands() {
            for &v in band.data() {
                bytes.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
    }

    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    let json = serde_json::to_vec_pretty(manifest)?;
    fs::write(&side, json).map_err(|e| Error::io(&side, e))?;
    Ok(())
}

fn u32_at(bytes: &[u8], at: usize) -> usize {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize
}

/// Read an archive and its sidecar manifest.
pub fn read_archive(path: &Path) -> Result<(Vec<Cutout>, ArchiveManifest)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    let json = fs::read(&side).map_err(|e| Error::io(&side, e))?;
    let manifest: ArchiveManifest = serde_json::from_slice(&json)?;

    if bytes.len() < MAGIC.len() {
        return Err(Error::CorruptArchive(format!(
            "{} bytes is shorter than the magic",
            bytes.len()
        )));
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::Format(format!("bad magic {:?}", &bytes[..8])));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::CorruptArchive("truncated header".into()));
    }
    let count = u32_at(&bytes, 8);
    let bands = u32_at(&bytes, 12);
    let (h, w) = (u32_at(&bytes, 16), u32_at(&bytes, 20));
    let scale = f32::from_le_bytes(bytes[24..28].try_into().unwrap());

    let survey = &manifest.survey;
    if h != w || h != survey.image_size || bands != survey.num_bands() {
        return Err(Error::Format(format!(
            "header {bands}x{h}x{w} disagrees with survey {} ({} bands, {}px)",
            survey.name,
            survey.num_bands(),
            survey.image_size
        )));
    }
    if count != manifest.entries.len() {
        return Err(Error::Format(format!(
            "header count {count} vs {} manifest entries",
            manifest.entries.len()
        )));
    }
    if scale != survey.pixel_scale as f32 {
        return Err(Error::Format(format!(
            "header pixel scale {scale} vs survey {}",
            survey.pixel_scale
        )));
    }
    manifest.validate()?;
    let expected = HEADER_LEN + count * bands * h * w * 4;
    if bytes.len() < expected {
        return Err(Error::CorruptArchive(format!(
            "payload truncated: {} of {expected} bytes",
            bytes.len()
        )));
    }
    if bytes.len() > expected {
        return Err(Error::Format(format!(
            "{} trailing bytes after payload",
            bytes.len() - expected
        )));
    }

    let mut cutouts = Vec::with_capacity(count);
    for e in &manifest.entries {
        let mut at = e.offset as usize;
        let mut planes = Vec::with_capacity(bands);
        for _ in 0..bands {
            let data = (0..h * w)
                .map(|k| {
                    let o = at + 4 * k;
                    f32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as f64
                })
                .collect();
            at += h * w * 4;
            planes.push(Plane::new(h, w, data)?);
        }
        let cut = Cutout::new(e.object_id.clone(), manifest.domain, survey.pixel_scale, planes)
            .map_err(|err| Error::CorruptArchive(format!("entry {}: {err}", e.object_id)))?;
        cutouts.push(cut.with_pairing_key(e.pairing_key.clone()));
    }
    Ok((cutouts, manifest))
}
