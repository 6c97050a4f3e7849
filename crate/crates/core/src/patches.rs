//! Grayscale images as patch distributions, and synthetic Perlin textures.
//!
//! An image becomes the uniform measure on all of its overlapping `p x p`
//! patches (vectorized row-major), and a batch of images becomes a
//! meta-measure with one patch measure per image.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{build_meta, EmpiricalMeasure, MetaMeasure};
use crate::rng::SeedStream;

/// Grayscale image with pixel values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pixels: Array2<f64>,
}

impl GrayImage {
    /// `pixels` is `height x width`.
    pub fn new(pixels: Array2<f64>) -> Result<Self> {
        let (h, w) = pixels.dim();
        if h == 0 || w == 0 {
            return Err(Error::Image(format!("empty image {h}x{w}")));
        }
        if let Some(p) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Image(format!("pixel {p} outside [0, 1]")));
        }
        Ok(Self { pixels })
    }

    pub fn height(&self) -> usize {
        self.pixels.nrows()
    }

    pub fn width(&self) -> usize {
        self.pixels.ncols()
    }

    pub fn pixels(&self) -> &Array2<f64> {
        &self.pixels
    }

    pub fn flip_horizontal(&self) -> Self {
        let w = self.width();
        Self {
            pixels: Array2::from_shape_fn(self.pixels.dim(), |(r, c)| self.pixels[[r, w - 1 - c]]),
        }
    }
}

struct Header {
    binary: bool,
    width: usize,
    height: usize,
    maxval: usize,
    raster_start: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut pos = 0;
    let mut fields: Vec<String> = Vec::new();
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        if pos >= bytes.len() {
            return Err(Error::Image("truncated PGM header".into()));
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    let binary = match fields[0].as_str() {
        "P2" => false,
        "P5" => true,
        other => return Err(Error::Image(format!("unsupported magic {other:?}"))),
    };
    let num = |s: &str, what: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::Image(format!("invalid {what} {s:?}")))
    };
    let width = num(&fields[1], "width")?;
    let height = num(&fields[2], "height")?;
    let maxval = num(&fields[3], "maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Image("zero image dimension".into()));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::Image(format!("maxval {maxval} not in 1..=255")));
    }
    // exactly one whitespace byte separates the header from a binary raster
    if binary {
        if pos >= bytes.len() {
            return Err(Error::Image("truncated raster".into()));
        }
        pos += 1;
    }
    Ok(Header {
        binary,
        width,
        height,
        maxval,
        raster_start: pos,
    })
}

/// Decode P2 or P5 PGM bytes.
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let h = parse_header(bytes)?;
    let count = h.width * h.height;
    let raw: Vec<usize> = if h.binary {
        let data = &bytes[h.raster_start..];
        if data.len() < count {
            return Err(Error::Image(format!(
                "truncated raster: {} of {count} bytes",
                data.len()
            )));
        }
        data[..count].iter().map(|&b| b as usize).collect()
    } else {
        let text = std::str::from_utf8(&bytes[h.raster_start..])
            .map_err(|_| Error::Image("non-ASCII raster".into()))?;
        let vals: Vec<usize> = text
            .split_whitespace()
            .take(count)
            .map(|t| t.parse().map_err(|_| Error::Image(format!("invalid sample {t:?}"))))
            .collect::<Result<_>>()?;
        if vals.len() < count {
            return Err(Error::Image(format!(
                "truncated raster: {} of {count} samples",
                vals.len()
            )));
        }
        vals
    };
    if let Some(v) = raw.iter().find(|&&v| v > h.maxval) {
        return Err(Error::Image(format!("sample {v} exceeds maxval {}", h.maxval)));
    }
    let maxval = h.maxval as f64;
    let pixels = Array2::from_shape_vec(
        (h.height, h.width),
        raw.into_iter().map(|v| v as f64 / maxval).collect(),
    )
    .expect("height * width samples");
    GrayImage::new(pixels)
}

/// Encode with maxval 255, quantizing by `round(p * 255)`.
pub fn encode_pgm(img: &GrayImage, binary: bool) -> Vec<u8> {
    let q: Vec<u8> = img.pixels.iter().map(|p| (p * 255.0).round() as u8).collect();
    let mut out = format!(
        "{}\n{} {}\n255\n",
        if binary { "P5" } else { "P2" },
        img.width(),
        img.height()
    )
    .into_bytes();
    if binary {
        out.extend_from_slice(&q);
    } else {
        for row in q.chunks(img.width()) {
            let line: Vec<String> = row.iter().map(u8::to_string).collect();
            out.extend_from_slice(line.join(" ").as_bytes());
            out.push(b'\n');
        }
    }
    out
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes)
}

pub fn write_pgm(img: &GrayImage, path: impl AsRef<Path>, binary: bool) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(img, binary)).map_err(|e| Error::io(path, e))
}

/// Uniform measure on all overlapping `p x p` patches, each flattened row by row.
pub fn extract_patches(img: &GrayImage, p: usize) -> Result<EmpiricalMeasure> {
    let (h, w) = img.pixels.dim();
    if p == 0 || p > h.min(w) {
        return Err(Error::InvalidArgument(format!(
            "patch size {p} invalid for {h}x{w} image"
        )));
    }
    let (nr, nc) = (h - p + 1, w - p + 1);
    let mut flat = Vec::with_capacity(nr * nc * p * p);
    for r in 0..nr {
        for c in 0..nc {
            for dr in 0..p {
                for dc in 0..p {
                    flat.push(img.pixels[[r + dr, c + dc]]);
                }
            }
        }
    }
    let pts = Array2::from_shape_vec((nr * nc, p * p), flat).expect("patch count");
    EmpiricalMeasure::uniform(pts)
}

/// One patch measure per image, uniform outer weights.
pub fn batch_to_meta(images: &[GrayImage], p: usize) -> Result<MetaMeasure> {
    if images.is_empty() {
        return Err(Error::Empty("image batch".into()));
    }
    let inner = images
        .par_iter()
        .map(|img| extract_patches(img, p))
        .collect::<Result<Vec<_>>>()?;
    build_meta(inner, None)
}

/// Fractal gradient-noise parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerlinParams {
    pub scale: f64,
    pub octaves: usize,
    pub persistence: f64,
    pub lacunarity: f64,
    #[serde(default)]
    pub seed: u64,
}

impl PerlinParams {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
            }
        };
        pos(self.scale, "scale")?;
        pos(self.persistence, "persistence")?;
        pos(self.lacunarity, "lacunarity")?;
        if self.octaves == 0 {
            return Err(Error::InvalidArgument("octaves must be >= 1".into()));
        }
        Ok(())
    }
}

/// Classic gradient noise on a seeded permutation lattice.
struct GradientNoise {
    perm: [u8; 512],
}

impl GradientNoise {
    fn new<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut base: Vec<u8> = (0..=255).collect();
        base.shuffle(rng);
        let mut perm = [0u8; 512];
        for i in 0..512 {
            perm[i] = base[i & 255];
        }
        Self { perm }
    }

    fn fade(t: f64) -> f64 {
        t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
    }

    fn grad(hash: u8, x: f64, y: f64) -> f64 {
        match hash & 7 {
            0 => x + y,
            1 => -x + y,
            2 => x - y,
            3 => -x - y,
            4 => x,
            5 => -x,
            6 => y,
            _ => -y,
        }
    }

    fn lerp(a: f64, b: f64, t: f64) -> f64 {
        a + t * (b - a)
    }

    fn at(&self, x: f64, y: f64) -> f64 {
        let (fx, fy) = (x.floor(), y.floor());
        let xi = (fx as i64 & 255) as usize;
        let yi = (fy as i64 & 255) as usize;
        let (xf, yf) = (x - fx, y - fy);
        let (u, v) = (Self::fade(xf), Self::fade(yf));
        let p = &self.perm;
        let aa = p[p[xi] as usize + yi];
        let ab = p[p[xi] as usize + yi + 1];
        let ba = p[p[xi + 1] as usize + yi];
        let bb = p[p[xi + 1] as usize + yi + 1];
        let x1 = Self::lerp(Self::grad(aa, xf, yf), Self::grad(ba, xf - 1.0, yf), u);
        let x2 = Self::lerp(Self::grad(ab, xf, yf - 1.0), Self::grad(bb, xf - 1.0, yf - 1.0), u);
        Self::lerp(x1, x2, v)
    }
}

/// Fractal Perlin texture rescaled to `[0, 1]`.
///
/// Octave `o` samples the noise at frequency `lacunarity^o / scale` with
/// amplitude `persistence^o`; the lattice permutation and a coordinate
/// offset are drawn from `params.seed`.
pub fn perlin_texture(h: usize, w: usize, params: &PerlinParams) -> Result<GrayImage> {
    params.validate()?;
    if h == 0 || w == 0 {
        return Err(Error::Image(format!("empty image {h}x{w}")));
    }
    let mut rng = SeedStream::new(params.seed).substream("perlin", 0);
    let noise = GradientNoise::new(&mut rng);
    let (ox, oy): (f64, f64) = (rng.random_range(0.0..256.0), rng.random_range(0.0..256.0));
    let mut field = Array2::<f64>::zeros((h, w));
    let mut amp = 1.0;
    let mut freq = 1.0 / params.scale;
    for _ in 0..params.octaves {
        for ((r, c), v) in field.indexed_iter_mut() {
            *v += amp * noise.at(ox + c as f64 * freq, oy + r as f64 * freq);
        }
        amp *= params.persistence;
        freq *= params.lacunarity;
    }
    let lo = field.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = field.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let pixels = if span > 0.0 {
        field.mapv(|v| ((v - lo) / span).clamp(0.0, 1.0))
    } else {
        Array2::zeros((h, w))
    };
    GrayImage::new(pixels)
}

/// `count` textures; image `i` uses a seed derived from `(params.seed, i)`.
pub fn perlin_batch(h: usize, w: usize, params: &PerlinParams, count: usize) -> Result<Vec<GrayImage>> {
    let streams = SeedStream::new(params.seed);
    (0..count)
        .into_par_iter()
        .map(|i| {
            let p = PerlinParams {
                seed: streams.child("perlin-image", i as u64).master(),
                ..*params
            };
            perlin_texture(h, w, &p)
        })
        .collect()
}
