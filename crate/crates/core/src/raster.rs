//! Floating-point image tensor shared by every preprocessing method.

use std::path::Path;

use crate::geometry::BBox;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("unsupported channel count {0}: expected 1 or 3")]
    BadChannels(usize),
    #[error("raster dimensions must be positive, got {height}x{width}")]
    EmptyDimensions { height: u32, width: u32 },
    #[error("crop window {bbox} exceeds raster bounds {width}x{height}")]
    CropOutOfBounds { bbox: BBox, width: u32, height: u32 },
    #[error("failed to read image {path}: {source}")]
    Decode {
        path: String,
        source: image::ImageError,
    },
    #[error("failed to write image {path}: {source}")]
    Encode {
        path: String,
        source: image::ImageError,
    },
}

/// H×W×C image with values in [0,1], HWC layout, C ∈ {1,3}.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    height: u32,
    width: u32,
    channels: usize,
    data: Vec<f32>,
}

/// ITU-R BT.601 luminance weights.
const LUMA: [f32; 3] = [0.299, 0.587, 0.114];

impl Raster {
    pub fn zeros(height: u32, width: u32, channels: usize) -> Result<Self, RasterError> {
        if channels != 1 && channels != 3 {
            return Err(RasterError::BadChannels(channels));
        }
        if height == 0 || width == 0 {
            return Err(RasterError::EmptyDimensions { height, width });
        }
        Ok(Self {
            height,
            width,
            channels,
            data: vec![0.0; height as usize * width as usize * channels],
        })
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, y: u32, x: u32, c: usize) -> f32 {
        self.data[(y as usize * self.width as usize + x as usize) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, y: u32, x: u32, c: usize, value: f32) {
        self.data[(y as usize * self.width as usize + x as usize) * self.channels + c] = value;
    }

    /// Extract the window covered by `bbox`.
    pub fn crop(&self, bbox: &BBox) -> Result<Raster, RasterError> {
        if bbox.xmax > self.width || bbox.ymax > self.height {
            return Err(RasterError::CropOutOfBounds {
                bbox: *bbox,
                width: self.width,
                height: self.height,
            });
        }
        let mut out = Raster::zeros(bbox.height(), bbox.width(), self.channels)?;
        for y in 0..bbox.height() {
            for x in 0..bbox.width() {
                for c in 0..self.channels {
                    out.set(y, x, c, self.get(bbox.ymin + y, bbox.xmin + x, c));
                }
            }
        }
        Ok(out)
    }

    /// BT.601 luminance. Single-channel rasters are returned unchanged.
    pub fn to_luminance(&self) -> Raster {
        if self.channels == 1 {
            return self.clone();
        }
        let mut out = Raster::zeros(self.height, self.width, 1).expect("non-empty");
        for y in 0..self.height {
            for x in 0..self.width {
                let v = (0..3).map(|c| LUMA[c] * self.get(y, x, c)).sum();
                out.set(y, x, 0, v);
            }
        }
        out
    }

    /// Load a PNG/JPEG file and normalize pixels to [0,1].
    ///
    /// Grayscale sources load as 1 channel; everything else as 3.
    pub fn open(path: &Path) -> Result<Raster, RasterError> {
        let img = image::open(path).map_err(|source| RasterError::Decode {
            path: path.display().to_string(),
            source,
        })?;
        Ok(match img {
            image::DynamicImage::ImageLuma8(g) => {
                let (w, h) = (g.width(), g.height());
                let mut out = Raster::zeros(h, w, 1).expect("non-empty image");
                for (x, y, p) in g.enumerate_pixels() {
                    out.set(y, x, 0, f32::from(p.0[0]) / 255.0);
                }
                out
            }
            other => {
                let rgb = other.to_rgb8();
                let (w, h) = (rgb.width(), rgb.height());
                let mut out = Raster::zeros(h, w, 3).expect("non-empty image");
                for (x, y, p) in rgb.enumerate_pixels() {
                    for c in 0..3 {
                        out.set(y, x, c, f32::from(p.0[c]) / 255.0);
                    }
                }
                out
            }
        })
    }

    /// Write as an 8-bit PNG (1 or 3 channels), quantizing with rounding.
    pub fn save_png(&self, path: &Path) -> Result<(), RasterError> {
        let quantize = |v: f32| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        let encode_err = |source| RasterError::Encode {
            path: path.display().to_string(),
            source,
        };
        if self.channels == 1 {
            let img = image::GrayImage::from_fn(self.width, self.height, |x, y| {
                image::Luma([quantize(self.get(y, x, 0))])
            });
            img.save(path).map_err(encode_err)
        } else {
            let img = image::RgbImage::from_fn(self.width, self.height, |x, y| {
                image::Rgb([
                    quantize(self.get(y, x, 0)),
                    quantize(self.get(y, x, 1)),
                    quantize(self.get(y, x, 2)),
                ])
            });
            img.save(path).map_err(encode_err)
        }
    }

    /// Image dimensions (width, height) without decoding pixel data.
    pub fn peek_dimensions(path: &Path) -> Result<(u32, u32), RasterError> {
        image::image_dimensions(path).map_err(|source| RasterError::Decode {
            path: path.display().to_string(),
            source,
        })
    }
}
