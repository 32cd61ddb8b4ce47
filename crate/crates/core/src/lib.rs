//! Core of the graphene graph-parallel engine.
//!
//! Everything in this crate needs only `alloc`: partitioned key-value
//! [`Collection`]s, the partitioned [`PropertyGraph`] representation (hash
//! indexed vertex partitions, CSR edge partitions, routing tables), the
//! replicated vertex view with incremental maintenance and join elimination,
//! the shuffle wire format, and the Pregel-style algorithms built on top.
//!
//! Parallelism is delegated to an [`Executor`]; the crate ships a sequential
//! one and the `graphene` crate provides a thread pool.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod algo;
pub mod collection;
pub mod error;
pub mod exec;
pub mod graph;
pub mod hash;
pub mod meter;
pub mod partition;
pub mod runtime;
pub mod wire;

pub use collection::{Collection, HashPartitioner, Key};
pub use error::{Error, Result, UdfError};
pub use exec::{AccessSpec, JoinPlan, ScanMode, ScanPolicy, ScanStrategy, SkipStale};
pub use graph::{IndexEpoch, PropertyGraph, Triplet, VertexId};
pub use meter::{CommMeter, ExchangeRecord};
pub use partition::{EdgePartitioner, PartitionerKind};
pub use runtime::{Config, Executor, Runtime, Sequential};
pub use wire::{Data, Wire, WireError};
