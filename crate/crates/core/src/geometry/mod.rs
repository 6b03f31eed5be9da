//! Convex polytope kernel and the Minkowski cell optimization.

mod minkowski;
mod polytope;

pub use minkowski::{
    fan_feasible, merge_fan, minkowski_constant, minkowski_constant_with, wulff_shape,
    MinkowskiSolution, MAX_ITER,
};
pub use polytope::{closure_ok, intersect_halfspaces, Facet, Halfspace, Moments, Polytope};
