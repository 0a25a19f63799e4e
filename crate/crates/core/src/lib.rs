//! Numerical toolkit for bubbly-flow image studies.

pub mod annotation;
pub mod correlations;
pub mod error;
pub mod gan;
pub mod genai;
pub mod harness;
pub mod image_metrics;
pub mod manifest;
pub mod model;
pub mod numeric;
pub mod pgm;
pub mod synth;
pub mod twophase;

pub use error::{Error, Result};
pub use model::{
    box_to_ellipsoid, AnnotationSet, BubbleBox, BubbleEllipsoid, FlowCondition, GrayImage,
    MmPerPixel, PipeGeometry,
};
