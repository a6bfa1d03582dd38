//! Compiles every listing of the guide in `book/` as a doc-test.
//!
//! mdbook cannot run listings that depend on an external crate, so each
//! chapter is pulled in here as the docs of an empty module and
//! `cargo test` checks them.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/pairwise-model.md")]
pub mod pairwise_model {}

#[doc = include_str!("../../../book/src/protocols.md")]
pub mod protocols {}

#[doc = include_str!("../../../book/src/estimating-drop.md")]
pub mod estimating_drop {}

#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
