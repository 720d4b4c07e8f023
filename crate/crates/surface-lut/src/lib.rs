//! Table-lookup circuit synthesis, cost estimation, lattice-surgery layout
//! and desk-scale verification for surface-code architectures.

pub mod circuit;
pub mod cost;
pub mod gadget;
pub mod isa;
pub mod layout;
pub mod sched;
pub mod sim;
pub mod verify;
pub mod synth;
pub mod table;
