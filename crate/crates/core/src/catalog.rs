//! Image catalog and the degraded renderings shown during login.

use std::collections::HashSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ImageId;

/// Suffix appended to the id of a degraded variant.
pub const DEGRADED_SUFFIX: &str = ".degraded";

/// File name of a catalog manifest written by [`write_catalog`].
pub const MANIFEST_FILE: &str = "manifest.json";

/// Side length of synthetic catalog images, in pixels.
pub const SYNTHETIC_SIZE: u32 = 96;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("missing file {path}")]
    MissingFile { path: PathBuf },
    #[error("manifest lists no images")]
    MissingImages,
    #[error("image {id} is {got:?}, expected {expected:?} like the rest of the catalog")]
    DimensionMismatch {
        id: ImageId,
        expected: (u32, u32),
        got: (u32, u32),
    },
    #[error("duplicate image id {0}")]
    DuplicateId(ImageId),
    #[error("invalid degrade parameters: contrast {contrast}, brightness {brightness}")]
    InvalidParams { contrast: f64, brightness: f64 },
    #[error("malformed manifest {path}: {source}")]
    Manifest {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("cannot decode {path}: {source}")]
    Decode {
        path: PathBuf,
        source: image::ImageError,
    },
    #[error(transparent)]
    Encode(#[from] image::ImageError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogImage {
    pub id: ImageId,
    pub label: String,
    pub pixels: RgbImage,
}

impl CatalogImage {
    pub fn dimensions(&self) -> (u32, u32) {
        self.pixels.dimensions()
    }

    /// PNG encoding of the raster.
    pub fn to_png(&self) -> Result<Vec<u8>, ImageError> {
        let mut buf = io::Cursor::new(Vec::new());
        self.pixels.write_to(&mut buf, image::ImageFormat::Png)?;
        Ok(buf.into_inner())
    }
}

/// Contrast scale around mid-gray followed by a brightness offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegradeParams {
    contrast: f64,
    brightness: f64,
}

impl DegradeParams {
    pub fn new(contrast: f64, brightness: f64) -> Result<Self, ImageError> {
        let contrast_ok = contrast > 0.0 && contrast <= 1.0;
        let brightness_ok = (0.0..=255.0).contains(&brightness);
        if !contrast_ok || !brightness_ok {
            return Err(ImageError::InvalidParams { contrast, brightness });
        }
        Ok(Self { contrast, brightness })
    }

    pub fn contrast(&self) -> f64 {
        self.contrast
    }

    pub fn brightness(&self) -> f64 {
        self.brightness
    }

    /// Maps one channel value.
    pub fn apply(&self, value: u8) -> u8 {
        let v = self.contrast * (f64::from(value) - 128.0) + 128.0 + self.brightness;
        v.round().clamp(0.0, 255.0) as u8
    }
}

impl Default for DegradeParams {
    fn default() -> Self {
        Self {
            contrast: 0.4,
            brightness: 70.0,
        }
    }
}

/// Lower-contrast, brighter copy of `img`: `clamp(α·(p − 128) + 128 + β)` per channel.
pub fn degrade(img: &CatalogImage, params: &DegradeParams) -> CatalogImage {
    let lut: Vec<u8> = (0..=255u8).map(|v| params.apply(v)).collect();
    let mut pixels = img.pixels.clone();
    for px in pixels.pixels_mut() {
        for ch in px.0.iter_mut() {
            *ch = lut[*ch as usize];
        }
    }
    CatalogImage {
        id: ImageId::new(format!("{}{}", img.id, DEGRADED_SUFFIX)),
        label: img.label.clone(),
        pixels,
    }
}

/// One manifest entry; `path` is relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: ImageId,
    pub label: String,
    pub path: PathBuf,
}

/// Loads the images listed in a JSON manifest, in manifest order.
pub fn load_catalog(manifest: &Path) -> Result<Vec<CatalogImage>, ImageError> {
    let text = fs::read_to_string(manifest).map_err(|e| missing_or_io(manifest, e))?;
    let entries: Vec<ManifestEntry> =
        serde_json::from_str(&text).map_err(|source| ImageError::Manifest {
            path: manifest.to_path_buf(),
            source,
        })?;
    if entries.is_empty() {
        return Err(ImageError::MissingImages);
    }
    let base = manifest.parent().unwrap_or_else(|| Path::new("."));

    let mut seen = HashSet::new();
    let mut images: Vec<CatalogImage> = Vec::with_capacity(entries.len());
    for entry in entries {
        if !seen.insert(entry.id.clone()) {
            return Err(ImageError::DuplicateId(entry.id));
        }
        let path = base.join(&entry.path);
        let bytes = fs::read(&path).map_err(|e| missing_or_io(&path, e))?;
        let pixels = image::load_from_memory(&bytes)
            .map_err(|source| ImageError::Decode {
                path: path.clone(),
                source,
            })?
            .to_rgb8();
        if let Some(first) = images.first() {
            if first.dimensions() != pixels.dimensions() {
                return Err(ImageError::DimensionMismatch {
                    id: entry.id,
                    expected: first.dimensions(),
                    got: pixels.dimensions(),
                });
            }
        }
        images.push(CatalogImage {
            id: entry.id,
            label: entry.label,
            pixels,
        });
    }
    Ok(images)
}

fn missing_or_io(path: &Path, err: io::Error) -> ImageError {
    if err.kind() == io::ErrorKind::NotFound {
        ImageError::MissingFile {
            path: path.to_path_buf(),
        }
    } else {
        ImageError::Io(err)
    }
}

/// Writes `images` as PNG files under `dir/images/` plus a manifest.
/// Returns the manifest path.
pub fn write_catalog(images: &[CatalogImage], dir: &Path) -> Result<PathBuf, ImageError> {
    let image_dir = dir.join("images");
    fs::create_dir_all(&image_dir)?;
    let mut entries = Vec::with_capacity(images.len());
    for img in images {
        let rel = PathBuf::from("images").join(format!("{}.png", img.id));
        fs::write(dir.join(&rel), img.to_png()?)?;
        entries.push(ManifestEntry {
            id: img.id.clone(),
            label: img.label.clone(),
            path: rel,
        });
    }
    let manifest = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&entries).expect("manifest entries serialize");
    fs::write(&manifest, json + "\n")?;
    Ok(manifest)
}

const GLYPH_LABELS: [&str; 6] = ["disc", "ring", "bars", "checker", "diamond", "cross"];

/// Deterministic procedurally drawn catalog of `count` distinct images.
///
/// Each image has a seeded background gradient, a glyph in a seeded color,
/// and a 4×4 bit badge in the top-left corner that encodes its index, so
/// images within one catalog always differ.
pub fn generate_synthetic_catalog(count: usize, seed: u64) -> Vec<CatalogImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|index| {
            let glyph = rng.random_range(0..GLYPH_LABELS.len());
            let bg: [u8; 3] = rng.random();
            let fg: [u8; 3] = rng.random();
            let scale: f64 = rng.random_range(0.25..0.45);
            let pixels = draw_glyph(index, glyph, bg, fg, scale);
            CatalogImage {
                id: ImageId::new(format!("img-{index:02}")),
                label: format!("{} {}", GLYPH_LABELS[glyph], index),
                pixels,
            }
        })
        .collect()
}

fn draw_glyph(index: usize, glyph: usize, bg: [u8; 3], fg: [u8; 3], scale: f64) -> RgbImage {
    let size = SYNTHETIC_SIZE;
    let half = f64::from(size) / 2.0;
    let radius = scale * f64::from(size);
    RgbImage::from_fn(size, size, |x, y| {
        let dx = f64::from(x) + 0.5 - half;
        let dy = f64::from(y) + 0.5 - half;
        let dist = dx.hypot(dy);
        let inside = match glyph {
            0 => dist <= radius,
            1 => dist <= radius && dist >= radius * 0.6,
            2 => dx.abs() <= radius && ((y / 8) % 2 == 0),
            3 => dx.abs() <= radius && dy.abs() <= radius && ((x / 12 + y / 12) % 2 == 0),
            4 => dx.abs() + dy.abs() <= radius,
            _ => (dx.abs() <= radius * 0.3 || dy.abs() <= radius * 0.3) && dist <= radius * 1.2,
        };
        // Index badge: 4x4 bits of 4px each in the corner.
        if x < 16 && y < 16 {
            let bit = (y / 4) * 4 + x / 4;
            let on = (index >> bit) & 1 == 1;
            return if on { Rgb([0, 0, 0]) } else { Rgb([255, 255, 255]) };
        }
        if inside {
            Rgb(fg)
        } else {
            let shade = |c: u8| {
                let t = f64::from(y) / f64::from(size);
                (f64::from(c) * (0.75 + 0.25 * t)).round() as u8
            };
            Rgb([shade(bg[0]), shade(bg[1]), shade(bg[2])])
        }
    })
}
