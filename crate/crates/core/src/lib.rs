//! Integrated information and collapse dynamics of the two-unit feedback dyad.
//!
//! - [`model`]: dyad states and single-input deterministic update rules.
//! - [`phi`]: integrated cause/effect information per unit and the system sum.
//! - [`qshape`]: Q-shape matrices, row metrics and the Q-shape distance table.
//! - [`optimizer`]: exact minimizers of the collapse-operator eigenvalue problem
//!   plus a brute-force lattice oracle.
//! - [`qdyn`]: master-equation and stochastic trajectory simulation of collapse.
//! - [`qiit`]: quantum relative entropy, quantum intrinsic difference and the
//!   quantum φ of superposed dyad states.

pub mod model;
pub mod optimizer;
pub mod phi;
pub mod qdyn;
pub mod qiit;
pub mod qshape;

pub use model::{DyadState, Tpm2, Unit, UnitRule};
pub use optimizer::{EigenAssignment, OptimizationResult};
pub use phi::{big_phi, PhiReport};
pub use qdyn::{CollapseDynamics, CollapseOperator, DensityMatrix4, PureState4, TrajectoryRecord};
pub use qshape::{DistanceTable, QShape, RowMetric};
