//! Joint charging-station planning and electric-truck fleet routing as a
//! leader-follower game.
//!
//! The charging provider (leader) sites and sizes stations; the fleet
//! operator (follower) buys trucks and routes them over a partial
//! time-expanded network. The bilevel problem is solved by
//! column-and-constraint generation around column-generation masters whose
//! pricing problem is a resource-constrained shortest path.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod ccg;
pub mod cli;
pub mod colgen;
pub mod evaluate;
pub mod instance;
pub mod mathprog;
pub mod oracle;
pub mod pten;
pub mod spprc;
