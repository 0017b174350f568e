//! Coordinate changes: variable transformations of ODEs and point
//! transformations of Hamiltonian systems with their induced momentum maps.

pub mod canonical;
pub mod oscillator;
pub mod point;
pub mod variable;

pub use canonical::{
    canonical_forward, canonical_inverse, induced_momentum_forward, induced_momentum_inverse, transform_hamiltonian,
    TransformedHamiltonian,
};
pub use oscillator::OscillatorTransform;
pub use point::{
    AffineTransform, CartesianToPolar, ComposedTransform, PointTransform, PolarConvention, PolarToCartesian,
    TransformRef, R_MIN,
};
pub use variable::{
    compensating_transform_1d, ndcomp_residual, transform_ode, FnVariableTransform, QuadratureTransform,
    TransformedField, VariableTransform, VariableTransformRef,
};
