//! Continuous-plane geometry of regular polygons and their erasure disks.
//!
//! Nothing in here knows about pixels. Coordinates are in pixel units but
//! continuous; the raster module decides which pixel centers are covered.

use std::f64::consts::{PI, TAU};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::GeometryError;

/// Default canvas edge length in pixels.
pub const DEFAULT_CANVAS_SIZE: u32 = 224;
/// Default minimum circumradius (canvas / 8).
pub const DEFAULT_R_MIN: f64 = 28.0;
/// Default stroke width in pixels.
pub const DEFAULT_STROKE_WIDTH: f64 = 2.0;

/// Slack for comparisons against the canvas border.
const BORDER_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn midpoint(self, other: Point) -> Point {
        Point::new((self.x + other.x) / 2.0, (self.y + other.y) / 2.0)
    }

    fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// One regular polygon, described by its circumscribed circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolygonSpec {
    pub n_sides: u32,
    pub center: Point,
    pub circumradius: f64,
    /// Angle of vertex 0, radians in `[0, 2π)`.
    pub rotation: f64,
    #[serde(default = "default_stroke_width")]
    pub stroke_width: f64,
}

fn default_stroke_width() -> f64 {
    DEFAULT_STROKE_WIDTH
}

impl PolygonSpec {
    /// Checks the canvas-independent shape invariants.
    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.n_sides < 3 {
            return Err(GeometryError::TooFewSides(self.n_sides));
        }
        if !self.center.is_finite() {
            return Err(GeometryError::NonFinite("center"));
        }
        if !(self.circumradius.is_finite() && self.circumradius > 0.0) {
            return Err(GeometryError::NonPositive {
                field: "circumradius",
                value: self.circumradius,
            });
        }
        if !(self.stroke_width.is_finite() && self.stroke_width > 0.0) {
            return Err(GeometryError::NonPositive {
                field: "stroke_width",
                value: self.stroke_width,
            });
        }
        if !(self.rotation.is_finite() && (0.0..TAU).contains(&self.rotation)) {
            return Err(GeometryError::RotationOutOfRange(self.rotation));
        }
        Ok(())
    }

    /// Checks the shape invariants plus containment of the stroked circle in
    /// a `canvas_size` square canvas.
    pub fn validate_for_canvas(&self, canvas_size: u32) -> Result<(), GeometryError> {
        self.validate()?;
        let reach = self.circumradius + self.stroke_width / 2.0;
        let size = f64::from(canvas_size);
        let fits = |c: f64| c - reach >= -BORDER_EPS && c + reach <= size + BORDER_EPS;
        if !(fits(self.center.x) && fits(self.center.y)) {
            return Err(GeometryError::OutOfCanvas {
                canvas_size,
                reach,
                center: self.center,
            });
        }
        Ok(())
    }

    /// Length of one side.
    pub fn side_length(&self) -> f64 {
        2.0 * self.circumradius * (PI / f64::from(self.n_sides)).sin()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegradationKind {
    Corner,
    Edge,
    None,
}

impl DegradationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DegradationKind::Corner => "corner",
            DegradationKind::Edge => "edge",
            DegradationKind::None => "none",
        }
    }
}

impl fmt::Display for DegradationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DegradationKind {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "corner" => Ok(DegradationKind::Corner),
            "edge" => Ok(DegradationKind::Edge),
            "none" => Ok(DegradationKind::None),
            other => Err(GeometryError::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegradationSpec {
    pub kind: DegradationKind,
    /// Fraction of the perimeter to erase, in `[0, 1)`.
    pub proportion: f64,
}

impl DegradationSpec {
    pub const NONE: DegradationSpec = DegradationSpec {
        kind: DegradationKind::None,
        proportion: 0.0,
    };

    pub fn new(kind: DegradationKind, proportion: f64) -> Result<Self, GeometryError> {
        check_proportion(proportion)?;
        if kind == DegradationKind::None && proportion != 0.0 {
            return Err(GeometryError::NoneWithProportion(proportion));
        }
        Ok(Self { kind, proportion })
    }
}

/// A filled disk; erasure overlays are sets of these.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: Point,
    pub radius: f64,
}

impl Disk {
    /// Strict interior membership.
    pub fn contains(&self, p: Point) -> bool {
        let dx = p.x - self.center.x;
        let dy = p.y - self.center.y;
        dx * dx + dy * dy < self.radius * self.radius
    }
}

fn check_proportion(p_d: f64) -> Result<(), GeometryError> {
    if p_d.is_finite() && (0.0..1.0).contains(&p_d) {
        Ok(())
    } else {
        Err(GeometryError::ProportionOutOfRange(p_d))
    }
}

/// Vertices counter-clockwise, vertex 0 at angle `rotation`.
pub fn polygon_vertices(spec: &PolygonSpec) -> Result<Vec<Point>, GeometryError> {
    spec.validate()?;
    Ok(vertices_unchecked(spec))
}

fn vertices_unchecked(spec: &PolygonSpec) -> Vec<Point> {
    let n = f64::from(spec.n_sides);
    (0..spec.n_sides)
        .map(|k| {
            let angle = spec.rotation + TAU * f64::from(k) / n;
            Point::new(
                spec.center.x + spec.circumradius * angle.cos(),
                spec.center.y + spec.circumradius * angle.sin(),
            )
        })
        .collect()
}

/// Midpoint `k` lies between vertex `k` and vertex `k + 1 (mod n)`.
pub fn edge_midpoints(spec: &PolygonSpec) -> Result<Vec<Point>, GeometryError> {
    let vertices = polygon_vertices(spec)?;
    let n = vertices.len();
    Ok((0..n)
        .map(|k| vertices[k].midpoint(vertices[(k + 1) % n]))
        .collect())
}

pub fn perimeter(spec: &PolygonSpec) -> Result<f64, GeometryError> {
    spec.validate()?;
    Ok(f64::from(spec.n_sides) * spec.side_length())
}

/// Radius of each of the `n_sides` erasure disks so that together they
/// remove `p_d` of the perimeter: `p_d * P / (2 * n_sides)`.
pub fn degradation_radius(p_d: f64, n_sides: u32, perimeter: f64) -> Result<f64, GeometryError> {
    check_proportion(p_d)?;
    if n_sides < 3 {
        return Err(GeometryError::TooFewSides(n_sides));
    }
    if !(perimeter.is_finite() && perimeter > 0.0) {
        return Err(GeometryError::NonPositive {
            field: "perimeter",
            value: perimeter,
        });
    }
    Ok(p_d * perimeter / (2.0 * f64::from(n_sides)))
}

/// Disks that erase `deg.proportion` of the outline, centered on the corners
/// or on the edge midpoints.
pub fn erasure_disks(spec: &PolygonSpec, deg: &DegradationSpec) -> Result<Vec<Disk>, GeometryError> {
    spec.validate()?;
    check_proportion(deg.proportion)?;
    let centers = match deg.kind {
        DegradationKind::None => return Ok(Vec::new()),
        DegradationKind::Corner => polygon_vertices(spec)?,
        DegradationKind::Edge => edge_midpoints(spec)?,
    };
    let radius = degradation_radius(deg.proportion, spec.n_sides, perimeter(spec)?)?;
    Ok(centers
        .into_iter()
        .map(|center| Disk { center, radius })
        .collect())
}

/// Draws a polygon whose stroked outline fits the canvas.
///
/// The center is uniform over the square of centers that admit a radius of
/// at least `r_min` with half a stroke of margin; the radius is then uniform
/// between `r_min` and the largest radius that center allows; the rotation
/// is uniform in `[0, 2π)`.
pub fn sample_polygon<R: Rng + ?Sized>(
    rng: &mut R,
    n_sides: u32,
    canvas_size: u32,
    r_min: f64,
    stroke_width: f64,
) -> Result<PolygonSpec, GeometryError> {
    if n_sides < 3 {
        return Err(GeometryError::TooFewSides(n_sides));
    }
    if !(r_min.is_finite() && r_min > 0.0) {
        return Err(GeometryError::NonPositive {
            field: "r_min",
            value: r_min,
        });
    }
    if !(stroke_width.is_finite() && stroke_width > 0.0) {
        return Err(GeometryError::NonPositive {
            field: "stroke_width",
            value: stroke_width,
        });
    }
    let size = f64::from(canvas_size);
    let half_stroke = stroke_width / 2.0;
    let margin = r_min + half_stroke;
    if margin > size / 2.0 {
        return Err(GeometryError::InfeasibleRadius {
            r_min,
            stroke_width,
            canvas_size,
        });
    }

    let cx = rng.random_range(margin..=size - margin);
    let cy = rng.random_range(margin..=size - margin);
    let border = cx.min(cy).min(size - cx).min(size - cy);
    // Rounding can push this a hair below r_min when the admissible square
    // degenerates to a point.
    let max_radius = (border - half_stroke).max(r_min);
    let circumradius = rng.random_range(r_min..=max_radius);
    let rotation = rng.random_range(0.0..TAU);

    Ok(PolygonSpec {
        n_sides,
        center: Point::new(cx, cy),
        circumradius,
        rotation,
        stroke_width,
    })
}
