//! Domain types shared by every module: calibrated grayscale images, flow
//! conditions, bubble bounding boxes and the ellipsoids derived from them.
//!
//! Physical quantities are held in SI units. Millimetres only appear at the
//! ingestion boundary (`mm_per_pixel`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major 8-bit grayscale image with an optional length calibration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
    mm_per_pixel: Option<MmPerPixel>,
}

/// Positive length scale in millimetres per pixel.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct MmPerPixel(f64);

impl Eq for MmPerPixel {}

impl MmPerPixel {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Self(value))
        } else {
            Err(Error::InvalidImage(format!(
                "mm_per_pixel must be finite and > 0, got {value}"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// Metres spanned by `px` pixels.
    pub fn to_metres(self, px: f64) -> f64 {
        px * self.0 * 1e-3
    }
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be nonzero, got {width}x{height}"
            )));
        }
        let expected = width
            .checked_mul(height)
            .ok_or_else(|| Error::InvalidImage("dimensions overflow".into()))?;
        if pixels.len() != expected {
            return Err(Error::InvalidImage(format!(
                "pixel buffer has {} bytes, expected {expected}",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
            mm_per_pixel: None,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width.saturating_mul(height)])
    }

    /// Builds an image by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width.saturating_mul(height));
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn with_calibration(mut self, mm_per_pixel: MmPerPixel) -> Self {
        self.mm_per_pixel = Some(mm_per_pixel);
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn mm_per_pixel(&self) -> Option<MmPerPixel> {
        self.mm_per_pixel
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.pixels[y * self.width + x] = value;
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

/// Superficial gas and liquid velocities in m/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCondition", into = "RawCondition")]
pub struct FlowCondition {
    j_g: f64,
    j_f: f64,
}

#[derive(Serialize, Deserialize)]
struct RawCondition {
    j_g: f64,
    j_f: f64,
}

impl TryFrom<RawCondition> for FlowCondition {
    type Error = Error;

    fn try_from(raw: RawCondition) -> Result<Self> {
        FlowCondition::new(raw.j_g, raw.j_f)
    }
}

impl From<FlowCondition> for RawCondition {
    fn from(c: FlowCondition) -> Self {
        RawCondition { j_g: c.j_g, j_f: c.j_f }
    }
}

impl FlowCondition {
    pub fn new(j_g: f64, j_f: f64) -> Result<Self> {
        if !(j_g.is_finite() && j_g > 0.0) {
            return Err(Error::InvalidCondition(format!("j_g must be > 0, got {j_g}")));
        }
        if !(j_f.is_finite() && j_f > 0.0) {
            return Err(Error::InvalidCondition(format!("j_f must be > 0, got {j_f}")));
        }
        Ok(Self { j_g, j_f })
    }

    pub fn j_g(&self) -> f64 {
        self.j_g
    }

    pub fn j_f(&self) -> f64 {
        self.j_f
    }

    /// Homogeneous-flow volumetric gas fraction `j_g / (j_g + j_f)`.
    pub fn homogeneous_void_fraction(&self) -> f64 {
        self.j_g / (self.j_g + self.j_f)
    }
}

/// Axis-aligned pixel bounding box. Coordinates lie on the pixel-edge
/// lattice, so the box spans `x_max - x_min` pixels horizontally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BubbleBox {
    pub x_min: u32,
    pub y_min: u32,
    pub x_max: u32,
    pub y_max: u32,
}

impl BubbleBox {
    pub fn new(x_min: u32, y_min: u32, x_max: u32, y_max: u32) -> Result<Self> {
        let b = Self {
            x_min,
            y_min,
            x_max,
            y_max,
        };
        if x_max <= x_min {
            return Err(b.invalid("zero or negative width"));
        }
        if y_max <= y_min {
            return Err(b.invalid("zero or negative height"));
        }
        Ok(b)
    }

    /// Parses the `[x_min, y_min, x_max, y_max]` wire form, rejecting
    /// negative coordinates.
    pub fn from_array(coords: [i64; 4]) -> Result<Self> {
        let conv = |v: i64| {
            u32::try_from(v).map_err(|_| Error::InvalidBox {
                box_: coords,
                reason: "coordinate outside 0..=u32::MAX".into(),
            })
        };
        Self::new(conv(coords[0])?, conv(coords[1])?, conv(coords[2])?, conv(coords[3])?)
    }

    pub fn to_array(self) -> [i64; 4] {
        [
            self.x_min as i64,
            self.y_min as i64,
            self.x_max as i64,
            self.y_max as i64,
        ]
    }

    pub fn width(&self) -> u32 {
        self.x_max.saturating_sub(self.x_min)
    }

    pub fn height(&self) -> u32 {
        self.y_max.saturating_sub(self.y_min)
    }

    pub fn check_within(&self, width: usize, height: usize) -> Result<()> {
        if self.x_max as usize > width || self.y_max as usize > height {
            return Err(self.invalid(&format!("outside {width}x{height} image bounds")));
        }
        Ok(())
    }

    fn invalid(&self, reason: &str) -> Error {
        Error::InvalidBox {
            box_: self.to_array(),
            reason: reason.to_string(),
        }
    }
}

/// Triaxial ellipsoid model of one bubble, semi-axes in metres.
///
/// Built from a box, `a` is the semi-minor axis, `b` the semi-major axis and
/// the unobserved depth axis is `c = (a + b) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BubbleEllipsoid {
    a: f64,
    b: f64,
    c: f64,
}

impl BubbleEllipsoid {
    /// Orders the two observed semi-axes and derives the depth axis.
    pub fn from_observed(s1: f64, s2: f64) -> Result<Self> {
        let (a, b) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
        if !(a.is_finite() && b.is_finite() && a > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "semi-axes must be finite and > 0, got ({s1}, {s2})"
            )));
        }
        Ok(Self { a, b, c: (a + b) / 2.0 })
    }

    /// Sphere of the given radius.
    pub fn sphere(r: f64) -> Result<Self> {
        Self::from_observed(r, r)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::from_observed(self.a * k, self.b * k)
    }
}

/// Maps a pixel box to a physical ellipsoid: half the shorter side becomes
/// `a`, half the longer side `b`.
pub fn box_to_ellipsoid(bbox: &BubbleBox, mm_per_pixel: MmPerPixel) -> Result<BubbleEllipsoid> {
    let (w, h) = (bbox.width(), bbox.height());
    if w == 0 || h == 0 {
        return Err(Error::InvalidBox {
            box_: bbox.to_array(),
            reason: "degenerate box".into(),
        });
    }
    let short = w.min(h) as f64 / 2.0;
    let long = w.max(h) as f64 / 2.0;
    BubbleEllipsoid::from_observed(mm_per_pixel.to_metres(short), mm_per_pixel.to_metres(long))
}

/// Internal pipe diameter and imaged axial length, both in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipeGeometry {
    diameter: f64,
    length: f64,
}

impl PipeGeometry {
    pub fn new(diameter: f64, length: f64) -> Result<Self> {
        if !(diameter.is_finite() && diameter > 0.0) {
            return Err(Error::InvalidGeometry(format!("D must be > 0, got {diameter}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGeometry(format!("L must be > 0, got {length}")));
        }
        Ok(Self { diameter, length })
    }

    /// Geometry for a single frame: `L` is the image height times the
    /// calibration.
    pub fn for_frame(diameter: f64, image_height_px: usize, mm_per_pixel: MmPerPixel) -> Result<Self> {
        Self::new(diameter, mm_per_pixel.to_metres(image_height_px as f64))
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// `pi D^2 L / 4`.
    pub fn volume(&self) -> f64 {
        std::f64::consts::PI * self.diameter * self.diameter * self.length / 4.0
    }
}

/// Annotated bubbles of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationSet {
    pub image_id: String,
    pub condition: FlowCondition,
    pub boxes: Vec<BubbleBox>,
    pub mm_per_pixel: MmPerPixel,
    /// Image dimensions when known; needed to derive the imaged length.
    pub image_size: Option<(usize, usize)>,
    /// Free-form provenance (generator seed, PRNG, conventions).
    pub metadata: Option<serde_json::Value>,
}

impl AnnotationSet {
    pub fn ellipsoids(&self) -> Result<Vec<BubbleEllipsoid>> {
        self.boxes
            .iter()
            .map(|b| box_to_ellipsoid(b, self.mm_per_pixel))
            .collect()
    }

    /// Geometry of the imaged pipe section, from the stored image height.
    pub fn frame_geometry(&self, diameter: f64) -> Result<PipeGeometry> {
        let (_, h) = self.image_size.ok_or_else(|| {
            Error::Annotation(format!(
                "annotation `{}` carries no image height; supply L explicitly",
                self.image_id
            ))
        })?;
        PipeGeometry::for_frame(diameter, h, self.mm_per_pixel)
    }
}
