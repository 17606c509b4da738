//! Gray-level co-occurrence texture features.
//!
//! Images are linearly quantized to `G` levels, cut into non-overlapping
//! square tiles, and each tile is described by six statistics of its
//! symmetric, normalized co-occurrence matrices at unit distance, averaged
//! over the 0°, 45°, 90° and 135° directions.

use std::path::Path;

use image::{DynamicImage, ImageReader};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TextureError {
    #[error("image is empty")]
    EmptyImage,
    #[error("image has {got} pixels, expected {width}x{height}")]
    PixelCount {
        width: usize,
        height: usize,
        got: usize,
    },
    #[error("quantization needs at least 2 levels, got {0}")]
    Levels(usize),
    #[error("tile side must be at least 2, got {0}")]
    TileSide(usize),
    #[error("pixel value {value} outside [0, {levels})")]
    PixelRange { value: u16, levels: usize },
    #[error("image {width}x{height} is smaller than tile size {tile}")]
    Undersized {
        width: usize,
        height: usize,
        tile: usize,
    },
    #[error("non-finite pixel value")]
    NonFinite,
    #[error("cannot read image: {0}")]
    Read(#[from] image::ImageError),
    #[error("unsupported image layout; expected grayscale PGM")]
    NotGray,
}

/// Raw grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self, TextureError> {
        if width == 0 || height == 0 {
            return Err(TextureError::EmptyImage);
        }
        if pixels.len() != width * height {
            return Err(TextureError::PixelCount {
                width,
                height,
                got: pixels.len(),
            });
        }
        if pixels.iter().any(|v| !v.is_finite()) {
            return Err(TextureError::NonFinite);
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let pixels = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self {
            width,
            height,
            pixels,
        }
    }

    /// Reads a binary (P5) or ASCII (P2) PGM file.
    pub fn read_pgm(path: impl AsRef<Path>) -> Result<Self, TextureError> {
        let img = ImageReader::open(path.as_ref())
            .map_err(image::ImageError::IoError)?
            .with_guessed_format()
            .map_err(image::ImageError::IoError)?
            .decode()?;
        let (w, h) = (img.width() as usize, img.height() as usize);
        let pixels: Vec<f64> = match img {
            DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().map(f64::from).collect(),
            DynamicImage::ImageLuma16(buf) => buf.into_raw().into_iter().map(f64::from).collect(),
            _ => return Err(TextureError::NotGray),
        };
        Self::new(w, h, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }
}

/// Image with gray levels in `[0, levels)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedImage {
    pub width: usize,
    pub height: usize,
    pub levels: usize,
    pub data: Vec<u16>,
}

impl QuantizedImage {
    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.data[y * self.width + x]
    }

    /// Square sub-image with top-left corner `(x0, y0)`.
    pub fn tile(&self, x0: usize, y0: usize, side: usize) -> Result<GrayTile, TextureError> {
        let mut pixels = Vec::with_capacity(side * side);
        for y in y0..y0 + side {
            pixels.extend_from_slice(&self.data[y * self.width + x0..y * self.width + x0 + side]);
        }
        GrayTile::new(side, self.levels, pixels)
    }
}

/// Linear binning of the image's value range into `levels` bins.
pub fn quantize(image: &GrayImage, levels: usize) -> Result<QuantizedImage, TextureError> {
    if levels < 2 {
        return Err(TextureError::Levels(levels));
    }
    let (lo, hi) = image
        .pixels
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    let top = (levels - 1) as u16;
    let data = image
        .pixels
        .iter()
        .map(|&v| {
            if span <= 0.0 {
                0
            } else {
                let bin = ((v - lo) / span * levels as f64).floor();
                (bin as u16).min(top)
            }
        })
        .collect();
    Ok(QuantizedImage {
        width: image.width,
        height: image.height,
        levels,
        data,
    })
}

/// Square quantized patch.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayTile {
    side: usize,
    levels: usize,
    pixels: Vec<u16>,
}

impl GrayTile {
    pub fn new(side: usize, levels: usize, pixels: Vec<u16>) -> Result<Self, TextureError> {
        if side < 2 {
            return Err(TextureError::TileSide(side));
        }
        if levels < 2 {
            return Err(TextureError::Levels(levels));
        }
        if pixels.len() != side * side {
            return Err(TextureError::PixelCount {
                width: side,
                height: side,
                got: pixels.len(),
            });
        }
        if let Some(&value) = pixels.iter().find(|&&p| p as usize >= levels) {
            return Err(TextureError::PixelRange { value, levels });
        }
        Ok(Self {
            side,
            levels,
            pixels,
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    fn get(&self, x: usize, y: usize) -> u16 {
        self.pixels[y * self.side + x]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Deg0,
    Deg45,
    Deg90,
    Deg135,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Deg0,
        Direction::Deg45,
        Direction::Deg90,
        Direction::Deg135,
    ];

    /// Neighbor offset `(dx, dy)`, image rows growing downwards.
    pub fn offset(self) -> (isize, isize) {
        match self {
            Direction::Deg0 => (1, 0),
            Direction::Deg45 => (1, -1),
            Direction::Deg90 => (0, -1),
            Direction::Deg135 => (-1, -1),
        }
    }
}

/// Symmetric co-occurrence distribution at unit distance.
#[derive(Debug, Clone, PartialEq)]
pub struct Glcm {
    pub levels: usize,
    pub direction: Direction,
    matrix: Vec<f64>,
}

impl Glcm {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.levels + j]
    }

    pub fn sum(&self) -> f64 {
        self.matrix.iter().sum()
    }

    fn cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let g = self.levels;
        self.matrix
            .iter()
            .enumerate()
            .map(move |(k, &p)| (k / g, k % g, p))
    }
}

pub fn glcm(tile: &GrayTile, direction: Direction) -> Glcm {
    let g = tile.levels;
    let side = tile.side as isize;
    let (dx, dy) = direction.offset();
    let mut counts = vec![0u64; g * g];
    let mut pairs = 0u64;
    for y in 0..side {
        for x in 0..side {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx >= side || ny >= side {
                continue;
            }
            let a = tile.get(x as usize, y as usize) as usize;
            let b = tile.get(nx as usize, ny as usize) as usize;
            counts[a * g + b] += 1;
            counts[b * g + a] += 1;
            pairs += 2;
        }
    }
    // side ≥ 2 guarantees at least one pair in every direction.
    let total = pairs as f64;
    Glcm {
        levels: g,
        direction,
        matrix: counts.into_iter().map(|c| c as f64 / total).collect(),
    }
}

/// The six texture statistics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FeatureVector {
    pub homogeneity: f64,
    pub contrast: f64,
    pub entropy: f64,
    pub correlation: f64,
    pub directivity: f64,
    pub uniformity: f64,
}

impl FeatureVector {
    pub const NAMES: [&'static str; 6] = [
        "homogeneity",
        "contrast",
        "entropy",
        "correlation",
        "directivity",
        "uniformity",
    ];

    pub fn to_array(self) -> [f64; 6] {
        [
            self.homogeneity,
            self.contrast,
            self.entropy,
            self.correlation,
            self.directivity,
            self.uniformity,
        ]
    }

    fn from_array(a: [f64; 6]) -> Self {
        Self {
            homogeneity: a[0],
            contrast: a[1],
            entropy: a[2],
            correlation: a[3],
            directivity: a[4],
            uniformity: a[5],
        }
    }
}

/// Statistics of one co-occurrence matrix.
pub fn glcm_features(m: &Glcm) -> FeatureVector {
    let g = m.levels;
    let norm = ((g - 1) * (g - 1)) as f64;
    let mut f = FeatureVector::default();
    let mut mean = 0.0;
    for (i, j, p) in m.cells() {
        let d = i.abs_diff(j) as f64;
        f.homogeneity += p / (1.0 + d);
        f.contrast += d * d * p;
        if p > 0.0 {
            f.entropy -= p * p.ln();
        }
        if i == j {
            f.directivity += p;
        }
        f.uniformity += p * p;
        mean += i as f64 * p;
    }
    f.contrast /= norm;
    let mut var = 0.0;
    let mut cov = 0.0;
    for (i, j, p) in m.cells() {
        let (di, dj) = (i as f64 - mean, j as f64 - mean);
        var += di * di * p;
        cov += di * dj * p;
    }
    f.correlation = if var > 1e-12 { cov / var } else { 0.0 };
    f
}

/// Four-direction mean of the GLCM statistics.
pub fn haralick(tile: &GrayTile) -> FeatureVector {
    let mut acc = [0.0; 6];
    for dir in Direction::ALL {
        let v = glcm_features(&glcm(tile, dir)).to_array();
        for (a, x) in acc.iter_mut().zip(v) {
            *a += x;
        }
    }
    FeatureVector::from_array(acc.map(|v| v / 4.0))
}

/// Features of one tile and the pixel coordinates of its top-left corner.
#[derive(Debug, Clone, PartialEq)]
pub struct TileFeatures {
    pub x: usize,
    pub y: usize,
    pub features: FeatureVector,
}

/// Quantizes the whole image, then describes every full tile in row-major
/// order. Partial tiles at the right and bottom edges are dropped.
pub fn tile_and_extract(
    image: &GrayImage,
    tile_size: usize,
    levels: usize,
) -> Result<Vec<TileFeatures>, TextureError> {
    if tile_size < 2 {
        return Err(TextureError::TileSide(tile_size));
    }
    if image.width < tile_size || image.height < tile_size {
        return Err(TextureError::Undersized {
            width: image.width,
            height: image.height,
            tile: tile_size,
        });
    }
    let q = quantize(image, levels)?;
    let origins: Vec<(usize, usize)> = (0..image.height / tile_size)
        .flat_map(|r| (0..image.width / tile_size).map(move |c| (c * tile_size, r * tile_size)))
        .collect();
    origins
        .par_iter()
        .map(|&(x, y)| {
            let tile = q.tile(x, y, tile_size)?;
            Ok(TileFeatures {
                x,
                y,
                features: haralick(&tile),
            })
        })
        .collect()
}
