//! Perimeter-degraded regular polygon datasets.
//!
//! Regular polygons are sampled on a square canvas, rendered as binary
//! 2 px outlines, and degraded by erasing disks centered either on the
//! corners or on the edge midpoints. Disk radii are chosen so the erased
//! outline length is an exact fraction `p_d` of the perimeter, which the
//! [`raster`] module confirms by counting pixels.
//!
//! * [`geometry`]: vertices, midpoints, perimeter, erasure disks, sampling.
//! * [`raster`]: capsule-stroke rendering, disk stamping, PNG I/O.
//! * [`datagen`]: seeded dataset generation, manifests, verification.
//! * [`evalmetrics`]: accuracy grids and curves from prediction files.
//!
//! Generation runs on a rayon pool when the `parallel` feature (default) is
//! enabled; output bytes never depend on the worker count.

pub mod datagen;
pub mod error;
pub mod evalmetrics;
pub mod exec;
pub mod geometry;
pub mod raster;

pub use exec::Workers;
