//! The procedural 3D program: sample a recipe of placed primitives, apply at
//! most one augmentation, and draw uniform points on the composite surface.
//!
//! Constructive solid geometry is resolved at sampling time: candidate points
//! are drawn area-weighted over every part's mesh and kept only if they lie
//! on the boundary of the composite solid.

mod config;
mod program;
mod surface;

pub use config::{
    Complexity, GenConfig, DEFAULT_AUGMENTATION_PROBABILITY, DEFAULT_POINTS_PER_SHAPE, DEFAULT_TUBE_RADIUS,
    TUBE_RADIUS_RANGE,
};
pub use program::{
    program_seed, realize, realize_parts, sample_program, sample_program_attempt, wireframe_tubes, AugmentationOp,
    Role, ShapeProgram, Solid, TUBE_RESOLUTION, WIREFRAME_SOURCE_RESOLUTION,
};
pub use surface::{
    accepts, sample_surface_points, sample_surface_raw, RawSurfaceSample, DEGENERACY_CANDIDATES,
    DEGENERACY_MIN_RATE,
};
