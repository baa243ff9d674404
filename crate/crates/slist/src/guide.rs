//! The user guide lives in `book/` as an mdBook. Each chapter is also
//! attached here as a hidden doc item so that `cargo test --doc` compiles and
//! runs every Rust snippet in the book, keeping prose and code in sync.

macro_rules! chapter {
    ($name:ident, $path:literal) => {
        #[doc = include_str!($path)]
        #[doc(hidden)]
        pub mod $name {}
    };
}

chapter!(introduction, "../../../book/src/introduction.md");
chapter!(sessions, "../../../book/src/sessions.md");
chapter!(representations, "../../../book/src/representations.md");
chapter!(models, "../../../book/src/models.md");
chapter!(inference, "../../../book/src/inference.md");
chapter!(evaluation, "../../../book/src/evaluation.md");
chapter!(cli, "../../../book/src/cli.md");
