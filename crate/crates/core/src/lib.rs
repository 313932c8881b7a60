//! Grover-based search for the capacitated vehicle routing problem with
//! time windows, built on a reversible oracle over a tour-and-split
//! encoding.

pub mod circuit;
pub mod classical;
pub mod grover;
pub mod instance;
pub mod oracle;
pub mod qarith;
pub mod resources;

pub use grover::{gas_minimize, GasConfig, SearchTrace};
pub use instance::{Instance, RouteSet, TimeWindow};
pub use oracle::{build_oracle, mark_predicate, Assignment, UNBOUNDED};
