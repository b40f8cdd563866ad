//! Tube models for curved text instances.
//!
//! A *tube* is a polygonal-chain medial axis together with one constant
//! radius; its region is every point within that radius of the axis. This
//! crate covers the full desk-scale pipeline around that representation:
//!
//! 1. **geom** – points, polygonal chains, simple polygons, exact and
//!    rasterized polygon IoU.
//! 2. **medial** – fitting tubes to annotation polygons: medial-axis
//!    extraction via the interior Voronoi structure of a dense boundary
//!    sampling, branch pruning, end extension, radius estimation, envelope
//!    reconstruction and curvature statistics.
//! 3. **loss** – a curve-alignment loss between predicted and ground-truth
//!    tubes that scores the underlying curves rather than a particular
//!    vertex placement, with analytic gradients and a small descent fitter.
//! 4. **postprocess** – soft-NMS over boxes and hard NMS over tube envelopes.
//! 5. **eval** – greedy polygon-IoU matching, PR curves, AP, max F-score and
//!    curved/straight subset recall.
//! 6. **io** – line-delimited JSON interchange plus best-effort adapters for
//!    common raw annotation layouts.
//!
//! All operations are pure functions over immutable values and are safe to
//! run data-parallel across instances or images.

pub mod eval;
pub mod geom;
pub mod io;
pub mod loss;
pub mod medial;
pub mod postprocess;
pub mod synthetic;

pub use geom::{polygon_iou, rasterize_iou, Point2, PolyChain, Polygon};
