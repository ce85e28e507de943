//! A call-by-value language with sums, products, functions and recursive
//! types over partial real primitives, with a dual-numbers AD transformation
//! and a harness that checks its derivatives.
//!
//! The pipeline: [`surface::parse`] a file, [`typecheck::check_file`] it,
//! transform with [`ad::ad_term`], run with [`runtime::Machine`], and check
//! with [`verify::verify_program`].

pub mod ad;
pub mod ast;
pub mod corpus;
pub mod ops;
pub mod runtime;
pub mod surface;
pub mod typecheck;
pub mod verify;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/language.md")]
    mod language {}
    #[doc = include_str!("../../../book/src/typing.md")]
    mod typing {}
    #[doc = include_str!("../../../book/src/ad.md")]
    mod ad {}
    #[doc = include_str!("../../../book/src/runtime.md")]
    mod runtime {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
