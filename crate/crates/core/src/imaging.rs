//! Raster ingestion, the RGB-to-scalar transform, differencing and binning.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageFormat};

use crate::error::{Error, Result};

/// Largest scalar a pixel can map to: 255 + 2·255 + 3·255.
pub const MAX_SCALAR: u16 = 1530;

/// Number of distinct scalar levels, `0..=MAX_SCALAR`.
pub const SCALAR_LEVELS: usize = MAX_SCALAR as usize + 1;

/// An 8-bit grayscale or RGB image, row-major with interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    channels: usize,
    samples: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, channels: usize, samples: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!("empty raster {width}x{height}")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::invalid(format!("{channels} channels, expected 1 or 3")));
        }
        if samples.len() != width * height * channels {
            return Err(Error::invalid(format!(
                "{} samples for a {width}x{height}x{channels} raster",
                samples.len()
            )));
        }
        Ok(RasterImage {
            width,
            height,
            channels,
            samples,
        })
    }

    pub fn from_rgb(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        Self::new(width, height, 3, samples)
    }

    pub fn from_gray(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        Self::new(width, height, 1, samples)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// Channel samples of pixel `index` (row-major).
    pub fn pixel(&self, index: usize) -> &[u8] {
        &self.samples[index * self.channels..(index + 1) * self.channels]
    }

    fn to_dynamic(&self) -> Result<DynamicImage> {
        let (w, h) = (dim_u32(self.width)?, dim_u32(self.height)?);
        let samples = self.samples.clone();
        let img = if self.channels == 1 {
            image::GrayImage::from_raw(w, h, samples).map(DynamicImage::ImageLuma8)
        } else {
            image::RgbImage::from_raw(w, h, samples).map(DynamicImage::ImageRgb8)
        };
        img.ok_or_else(|| Error::InvariantViolation("raster buffer size".into()))
    }
}

fn dim_u32(v: usize) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::invalid(format!("dimension {v} too large")))
}

/// Per-pixel scalar values in `0..=MAX_SCALAR`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScalarField {
    width: usize,
    height: usize,
    values: Vec<u16>,
}

impl ScalarField {
    pub fn new(width: usize, height: usize, values: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!("empty field {width}x{height}")));
        }
        if values.len() != width * height {
            return Err(Error::invalid(format!(
                "{} values for a {width}x{height} field",
                values.len()
            )));
        }
        if let Some(&v) = values.iter().find(|&&v| v > MAX_SCALAR) {
            return Err(Error::invalid(format!("scalar {v} exceeds {MAX_SCALAR}")));
        }
        Ok(ScalarField {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[u16] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Reads a PNG, PGM or PPM file.
pub fn load_image(path: impl AsRef<Path>) -> Result<RasterImage> {
    let bytes = std::fs::read(path.as_ref())?;
    load_image_from_bytes(&bytes)
}

/// Decodes PNG or binary/ASCII PNM bytes. Alpha is dropped; 16-bit and
/// float sources are rejected.
pub fn load_image_from_bytes(bytes: &[u8]) -> Result<RasterImage> {
    let format = image::guess_format(bytes)
        .map_err(|_| Error::Format("unrecognized image signature".into()))?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Pnm) {
        return Err(Error::Format(format!("unsupported format {format:?}")));
    }
    let decoded = image::load(Cursor::new(bytes), format)?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let raster = match decoded {
        DynamicImage::ImageLuma8(buf) => RasterImage::from_gray(w, h, buf.into_raw()),
        DynamicImage::ImageLumaA8(buf) => {
            RasterImage::from_gray(w, h, buf.into_raw().chunks_exact(2).map(|p| p[0]).collect())
        }
        DynamicImage::ImageRgb8(buf) => RasterImage::from_rgb(w, h, buf.into_raw()),
        DynamicImage::ImageRgba8(buf) => RasterImage::from_rgb(
            w,
            h,
            buf.into_raw()
                .chunks_exact(4)
                .flat_map(|p| [p[0], p[1], p[2]])
                .collect(),
        ),
        other => {
            return Err(Error::Format(format!(
                "unsupported sample layout {:?}; only 8-bit gray/RGB(A) is accepted",
                other.color()
            )))
        }
    };
    raster.map_err(|e| Error::Format(e.to_string()))
}

/// Encoding used by [`save_image`], chosen from the file extension.
fn output_format(path: &Path) -> Result<ImageFormat> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("png") => Ok(ImageFormat::Png),
        Some("pgm" | "ppm" | "pnm") => Ok(ImageFormat::Pnm),
        _ => Err(Error::Format(format!(
            "cannot infer output format from {}; use .png, .pgm or .ppm",
            path.display()
        ))),
    }
}

/// Writes PNG or binary PGM/PPM depending on the extension.
pub fn save_image(img: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let format = output_format(path)?;
    let bytes = encode_image(img, format)?;
    std::fs::write(path, bytes)?;
    Ok(())
}

pub(crate) fn encode_image(img: &RasterImage, format: ImageFormat) -> Result<Vec<u8>> {
    let mut out = Cursor::new(Vec::new());
    img.to_dynamic()?.write_to(&mut out, format)?;
    Ok(out.into_inner())
}

/// `R + 2G + 3B` per pixel; grayscale `v` is read as `R = G = B = v`.
pub fn transform_to_scalar(img: &RasterImage) -> ScalarField {
    let values = match img.channels() {
        1 => img.samples().iter().map(|&v| 6 * u16::from(v)).collect(),
        _ => img
            .samples()
            .chunks_exact(3)
            .map(|p| u16::from(p[0]) + 2 * u16::from(p[1]) + 3 * u16::from(p[2]))
            .collect(),
    };
    ScalarField {
        width: img.width(),
        height: img.height(),
        values,
    }
}

pub fn abs_difference(a: &ScalarField, b: &ScalarField) -> Result<ScalarField> {
    if a.dimensions() != b.dimensions() {
        return Err(Error::dims(a.dimensions(), b.dimensions()));
    }
    Ok(ScalarField {
        width: a.width,
        height: a.height,
        values: a
            .values
            .iter()
            .zip(&b.values)
            .map(|(&x, &y)| x.abs_diff(y))
            .collect(),
    })
}

/// Equal-width binning of the full scalar range: `floor(v * bins / 1531)`.
pub fn quantize(f: &ScalarField, bins: u32) -> Result<Vec<u32>> {
    if bins == 0 || bins as usize > SCALAR_LEVELS {
        return Err(Error::invalid(format!(
            "bin count {bins} outside 1..={SCALAR_LEVELS}"
        )));
    }
    Ok(f.values
        .iter()
        .map(|&v| quantize_value(v, bins))
        .collect())
}

#[inline]
pub(crate) fn quantize_value(v: u16, bins: u32) -> u32 {
    u32::from(v) * bins / SCALAR_LEVELS as u32
}
