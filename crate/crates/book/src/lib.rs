//! Every chapter of the guide in `book/src` is compiled here as a doc
//! comment, so `cargo test` runs the guide's Rust snippets. One module per
//! chapter keeps failures traceable to their source file.

#[doc = include_str!("../../../README.md")]
pub mod readme {}
#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/tensors.md")]
pub mod tensors {}
#[doc = include_str!("../../../book/src/molecules.md")]
pub mod molecules {}
#[doc = include_str!("../../../book/src/hosts.md")]
pub mod hosts {}
#[doc = include_str!("../../../book/src/module.md")]
pub mod module {}
#[doc = include_str!("../../../book/src/training.md")]
pub mod training {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
