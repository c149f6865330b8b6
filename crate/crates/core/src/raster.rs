//! Binary rasterization: capsule strokes, disk erasure, pixel accounting and
//! PNG I/O.
//!
//! Pixel `(i, j)` covers `[i, i+1) x [j, j+1)` and is tested at its center
//! `(i + 0.5, j + 0.5)`. Ink is black (0) on a white (255) background, and no
//! other value ever appears.

use std::io::Cursor;

use crate::error::RasterError;
use crate::geometry::{polygon_vertices, Disk, Point, PolygonSpec};

pub const WHITE: u8 = 255;
pub const BLACK: u8 = 0;

/// PNG settings used for every encoded canvas. Changing any of these changes
/// the bytes of every generated dataset.
pub const PNG_DEFLATE: png::DeflateCompression = png::DeflateCompression::FdeflateUltraFast;
pub const PNG_FILTER: png::Filter = png::Filter::Up;

/// Row-major 8-bit luminance grid, strictly binary.
#[derive(Clone, PartialEq, Eq)]
pub struct Canvas {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for Canvas {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Canvas")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("black", &self.black_pixel_count())
            .finish()
    }
}

impl Canvas {
    pub fn white(width: u32, height: u32) -> Self {
        Self::filled(width, height, WHITE)
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Self {
        Self {
            width,
            height,
            pixels: vec![value; width as usize * height as usize],
        }
    }

    /// Wraps an existing buffer; every byte must be 0 or 255.
    pub fn from_pixels(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, RasterError> {
        if pixels.len() != width as usize * height as usize {
            return Err(RasterError::BufferSize {
                len: pixels.len(),
                width,
                height,
            });
        }
        if let Some(&bad) = pixels.iter().find(|&&v| v != BLACK && v != WHITE) {
            return Err(RasterError::NotBinary(bad));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, i: u32, j: u32) -> u8 {
        self.pixels[j as usize * self.width as usize + i as usize]
    }

    pub fn is_black(&self, i: u32, j: u32) -> bool {
        self.get(i, j) == BLACK
    }

    fn set(&mut self, i: usize, j: usize, value: u8) {
        self.pixels[j * self.width as usize + i] = value;
    }

    pub fn black_pixel_count(&self) -> usize {
        self.pixels.iter().filter(|&&v| v == BLACK).count()
    }

    /// Inks every pixel whose center is within `width / 2` of segment `ab`.
    pub fn stroke_segment(&mut self, a: Point, b: Point, width: f64) {
        if self.width == 0 || self.height == 0 {
            return;
        }
        let half = width / 2.0;
        let half_sq = half * half;
        let (y_lo, y_hi) = (a.y.min(b.y) - half, a.y.max(b.y) + half);
        let Some((row_first, row_last)) = center_range(y_lo, y_hi, self.height) else {
            return;
        };
        let dy = b.y - a.y;
        for j in row_first..=row_last {
            let yc = j as f64 + 0.5;
            // The nearest segment point of any covered pixel lies in this
            // horizontal band, so the band's x-extent bounds the row span.
            let (x_lo, x_hi) = if dy == 0.0 {
                if (yc - a.y).abs() > half {
                    continue;
                }
                (a.x.min(b.x), a.x.max(b.x))
            } else {
                let t0 = ((yc - half - a.y) / dy).clamp(0.0, 1.0);
                let t1 = ((yc + half - a.y) / dy).clamp(0.0, 1.0);
                let xa = a.x + t0 * (b.x - a.x);
                let xb = a.x + t1 * (b.x - a.x);
                (xa.min(xb), xa.max(xb))
            };
            let Some((col_first, col_last)) = center_range(x_lo - half, x_hi + half, self.width) else {
                continue;
            };
            for i in col_first..=col_last {
                let p = Point::new(i as f64 + 0.5, yc);
                if segment_distance_sq(p, a, b) <= half_sq {
                    self.set(i, j, BLACK);
                }
            }
        }
    }

    /// Whitens every pixel whose center lies strictly inside one of `disks`.
    pub fn stamp_disks(&mut self, disks: &[Disk]) {
        for disk in disks {
            if disk.radius.is_nan() || disk.radius <= 0.0 {
                continue;
            }
            let c = disk.center;
            let r = disk.radius;
            let Some((row_first, row_last)) = center_range(c.y - r, c.y + r, self.height) else {
                continue;
            };
            let Some((col_first, col_last)) = center_range(c.x - r, c.x + r, self.width) else {
                continue;
            };
            for j in row_first..=row_last {
                for i in col_first..=col_last {
                    if disk.contains(Point::new(i as f64 + 0.5, j as f64 + 0.5)) {
                        self.set(i, j, WHITE);
                    }
                }
            }
        }
    }
}

/// Indices whose pixel centers may fall in `[lo, hi]`, padded by one on
/// each side and clamped to `[0, len)`.
fn center_range(lo: f64, hi: f64, len: u32) -> Option<(usize, usize)> {
    if len == 0 || lo.is_nan() || hi.is_nan() || lo > hi {
        return None;
    }
    let first = (lo - 0.5).floor() - 1.0;
    let last = (hi - 0.5).ceil() + 1.0;
    let max = f64::from(len - 1);
    if last < 0.0 || first > max {
        return None;
    }
    Some((first.max(0.0) as usize, last.min(max) as usize))
}

/// Squared distance from `p` to the closed segment `ab`.
pub fn segment_distance_sq(p: Point, a: Point, b: Point) -> f64 {
    let (abx, aby) = (b.x - a.x, b.y - a.y);
    let (apx, apy) = (p.x - a.x, p.y - a.y);
    let len_sq = abx * abx + aby * aby;
    let t = if len_sq == 0.0 {
        0.0
    } else {
        ((apx * abx + apy * aby) / len_sq).clamp(0.0, 1.0)
    };
    let (dx, dy) = (apx - t * abx, apy - t * aby);
    dx * dx + dy * dy
}

/// Closed outline of `spec` with round joins on a white square canvas.
pub fn render_polygon(spec: &PolygonSpec, canvas_size: u32) -> Result<Canvas, RasterError> {
    spec.validate_for_canvas(canvas_size)?;
    let vertices = polygon_vertices(spec)?;
    let mut canvas = Canvas::white(canvas_size, canvas_size);
    let n = vertices.len();
    for k in 0..n {
        canvas.stroke_segment(vertices[k], vertices[(k + 1) % n], spec.stroke_width);
    }
    Ok(canvas)
}

pub fn stamp_disks(canvas: &Canvas, disks: &[Disk]) -> Canvas {
    let mut out = canvas.clone();
    out.stamp_disks(disks);
    out
}

pub fn black_pixel_count(canvas: &Canvas) -> usize {
    canvas.black_pixel_count()
}

/// Fraction of the whole image's ink missing from the degraded image.
pub fn measure_degradation(whole: &Canvas, degraded: &Canvas) -> Result<f64, RasterError> {
    if whole.dimensions() != degraded.dimensions() {
        return Err(RasterError::DimensionMismatch(
            whole.dimensions(),
            degraded.dimensions(),
        ));
    }
    let reference = whole.black_pixel_count();
    if reference == 0 {
        return Err(RasterError::BlankReference);
    }
    Ok(1.0 - degraded.black_pixel_count() as f64 / reference as f64)
}

/// 8-bit grayscale PNG with the fixed [`PNG_DEFLATE`] / [`PNG_FILTER`]
/// settings and no ancillary chunks.
pub fn encode_png(canvas: &Canvas) -> Result<Vec<u8>, RasterError> {
    let mut out = Vec::with_capacity(1024);
    {
        let mut encoder = png::Encoder::new(&mut out, canvas.width, canvas.height);
        encoder.set_color(png::ColorType::Grayscale);
        encoder.set_depth(png::BitDepth::Eight);
        encoder.set_deflate_compression(PNG_DEFLATE);
        encoder.set_filter(PNG_FILTER);
        let mut writer = encoder.write_header()?;
        writer.write_image_data(&canvas.pixels)?;
        writer.finish()?;
    }
    Ok(out)
}

pub fn decode_png(bytes: &[u8]) -> Result<Canvas, RasterError> {
    let decoder = png::Decoder::new(Cursor::new(bytes));
    let mut reader = decoder.read_info()?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(RasterError::Unsupported(format!(
            "{:?} at {:?} bits, expected 8-bit grayscale",
            info.color_type, info.bit_depth
        )));
    }
    let (width, height) = (info.width, info.height);
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| RasterError::Unsupported("image too large".into()))?;
    let mut buf = vec![0; size];
    let frame = reader.next_frame(&mut buf)?;
    buf.truncate(frame.buffer_size());
    Canvas::from_pixels(width, height, buf)
}
