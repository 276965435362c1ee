//! Plane-strain total-Lagrangian finite elements for compressible
//! Neo-Hookean solids on bilinear quadrilaterals.

pub mod assembly;
pub mod element;
pub mod material;
pub mod mesh;
pub mod newton;

pub use assembly::{assemble, element_responses, Assembly, DofMap};
pub use element::{
    element_response, kappa_sensitivity, linear_stiffness, neo_hookean_response, ElementResponse,
    Mat8, Vec8,
};
pub use material::{
    cauchy_to_pk2, deformation_gradient, interp_coefficient, interp_coefficient_derivative,
    interp_coefficient_with, kinematics_at_gauss, pk2_out_of_plane, pk2_stress, pk2_to_cauchy,
    stored_energy, tangent_modulus, KinematicState, NeoHookeanLaw, KAPPA_BETA, KAPPA_RHO0,
};
pub use mesh::{GaussPoint, NodalValue, QuadMesh};
pub use newton::{newton_solve, EquilibriumSolution, NewtonConfig, StepRecord};
