//! The chapters of `book/` as doc comments, so `cargo test` runs every Rust
//! block in them. Blocks marked `text` or `sh` are skipped.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/sorts.md")]
pub mod sorts {}
#[doc = include_str!("../../../book/src/models.md")]
pub mod models {}
#[doc = include_str!("../../../book/src/verification.md")]
pub mod verification {}
#[doc = include_str!("../../../book/src/lattice.md")]
pub mod lattice {}
#[doc = include_str!("../../../book/src/abstraction.md")]
pub mod abstraction {}
#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}
#[doc = include_str!("../../../book/src/estimation.md")]
pub mod estimation {}
#[doc = include_str!("../../../book/src/library.md")]
pub mod library {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
