//! Controller synthesis for nondeterministic transition systems where the
//! controller must complete a co-safe LTL task without ever letting an
//! observer predict, K or more steps in advance, the exact step at which the
//! task first completes.
//!
//! The crate is `no_std` + `alloc`: every algorithm here is pure data
//! manipulation, so it embeds anywhere. File formats, the CLI, and
//! randomness live in the companion `unpred` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod automata;
pub mod formula;
pub mod gen;
pub mod product;
pub mod synthesis;
pub mod system;
pub mod verify;

#[cfg(test)]
pub(crate) mod testutil;
