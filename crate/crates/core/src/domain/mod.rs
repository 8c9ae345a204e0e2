//! Domain discretization, boundary charts and boundary-fitted coordinates.

mod chart;
mod check;
mod coords;
mod grid;

pub use chart::{
    boundary_chart, charts_for, frenet_matrix, BoundaryChart, BoundaryPatch, ChartGeometry, Frame,
    SPHERE_CHART_POLAR_MARGIN,
};
pub use check::{geometry_report, observed_orders, ChartReport, GeometryReport, ROUNDOFF_ERROR};
pub use coords::{
    commutator_residual, coordinate_map, default_collar_depth, frame_derivatives, metric, CollarResolution,
    CoordinateMap,
};
pub use grid::{build_grid, DomainSpec, Grid, Layout, MIN_RESOLUTION};
