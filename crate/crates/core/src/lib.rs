//! Construction and verification of block-transitive t-designs from
//! permutation group actions.
//!
//! The pipeline is: load a group ([`ingest`]), enumerate its orbits on
//! k-subsets ([`orbit`]), and turn an orbit, or a union of orbits of a
//! maximal subgroup, into a [`design::Design`] whose t-design structure is
//! then certified by exhaustive coverage counting.

pub mod block;
pub mod design;
pub mod error;
pub mod group;
pub mod ingest;
pub mod orbit;
pub mod perm;
pub mod table;

pub use block::Block;
pub use design::{Construction, Design, TDesignCertificate};
pub use error::{Error, Result};
pub use group::{PermGroup, StabChain, Transitivity};
pub use orbit::{BlockOrbit, Limits, OrbitPartition};
pub use perm::Permutation;
pub use table::{Table, TableRow};
