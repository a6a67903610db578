//! The chapters of `book/` as modules, so that `cargo test --doc` compiles
//! and runs every snippet in them. One module per chapter keeps a failing
//! snippet traceable to its file.

#[doc = include_str!("../../../book/src/intro.md")]
pub mod intro {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../book/src/hints.md")]
pub mod hints {}
#[doc = include_str!("../../../book/src/sessions.md")]
pub mod sessions {}
#[doc = include_str!("../../../book/src/math.md")]
pub mod math {}
#[doc = include_str!("../../../book/src/models.md")]
pub mod models {}
#[doc = include_str!("../../../book/src/analytics.md")]
pub mod analytics {}
#[doc = include_str!("../../../book/src/simulate.md")]
pub mod simulate {}
#[doc = include_str!("../../../book/src/service.md")]
pub mod service {}
