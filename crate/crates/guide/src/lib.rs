// mdbook cannot run Rust listings itself, so each chapter is pulled in as the
// docs of an empty module and `cargo test --doc -p gsr-guide` runs them. A
// module per chapter keeps failures traceable to their source file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/lighting.md")]
pub mod lighting {}
#[doc = include_str!("../../../book/src/assets.md")]
pub mod assets {}
#[doc = include_str!("../../../book/src/rendering.md")]
pub mod rendering {}
#[doc = include_str!("../../../book/src/fitting.md")]
pub mod fitting {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../book/src/service.md")]
pub mod service {}
