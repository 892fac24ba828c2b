//! Lévy-measure calculus: the scalar transform `ν ↦ ν^{(μ)}` and its
//! exponential-mixture special case, plus finitely supported measures on
//! path space with the time-lift and scaling checks.

mod path;
mod scalar;

pub use path::{
    idt_scaling_check, lift_path_measure, subordinator_path_measure, uniform_u_edges, DiscretePathMeasure,
    FunctionalResidual, PathAtom, PathFunctional, PathScalingReport,
};
pub use scalar::{
    exp_mixture_closed_form, exp_mixture_density, increment_decomposition, transform_levy_measure, LevyDensity,
    LevyTestFn, ScalarLevyMeasure, TransformQuad,
};
