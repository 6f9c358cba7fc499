//! Isogeometric analysis of 2D magnetostatic fields in rotating electric machines.
//!
//! The crate is `no_std` (with `alloc`). It covers the whole numerical pipeline:
//!
//! * [`splines`]: knot vectors, Cox-de Boor evaluation of B-spline and NURBS bases, knot insertion.
//! * [`geometry`]: tensor-product NURBS patches, exact circular arcs and annular sectors,
//!   multipatch machine models with materials and boundary tags, rigid rotor rotation.
//! * [`space`], [`dofmap`], [`assembly`]: discrete field spaces, global numbering with
//!   C0 gluing, Dirichlet elimination and anti-periodic pairing, and the Galerkin system
//!   `K u = j_src + j_pm`.
//! * [`linalg`]: CSR storage and Jacobi-preconditioned conjugate gradients.
//! * [`trace`], [`coupling`]: air-gap trace spaces, L2 transfer between non-conforming
//!   interface meshes, and the Dirichlet-to-Neumann rotor/stator fixed-point iteration.
//! * [`postproc`]: field evaluation, flux linkage, EMF spectrum and THD.
//! * [`machine`]: the bundled six-pole surface-magnet example machine.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod assembly;
pub mod coupling;
pub mod dofmap;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod machine;
pub(crate) mod math;
pub mod postproc;
pub mod quadrature;
pub mod space;
pub mod splines;
pub mod trace;

pub use error::{Error, Result};

/// Vacuum reluctivity `1 / (4π·10⁻⁷)` in m/H.
pub const NU0: f64 = 1.0 / (4.0e-7 * core::f64::consts::PI);

pub mod prelude {
    pub use crate::assembly::{AssembledSystem, AssemblyOptions, Subdomain, SubdomainSelector};
    pub use crate::coupling::{dtn_iterate, CouplingConfig, CouplingState, DtnResult};
    pub use crate::dofmap::{DofMap, InterfaceCondition};
    pub use crate::geometry::{
        make_annular_patch, make_arc, EdgeTag, Material, MultiPatchModel, Patch, Point2, Side,
        SubdomainKind,
    };
    pub use crate::linalg::{solve_spd, CsrMatrix};
    pub use crate::machine::Machine;
    pub use crate::postproc::{thd, EmfSpectrum, Winding};
    pub use crate::splines::{eval_bspline, eval_nurbs, find_span, insert_knot, KnotVector};
    pub use crate::{Error, Result, NU0};
}
