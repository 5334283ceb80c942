//! Unsupervised compositor attribution for hand-press printed books.
//!
//! Clusters the pages of a printed document by the typesetter who set them.
//! Two channels of per-page evidence are modeled jointly: diplomatic spelling
//! variation conditioned on a modernized text (a per-compositor log-linear
//! channel over observed spelling candidates, or a plain multinomial in
//! `basic` mode) and the pixel widths of whitespace after medial commas (a
//! per-compositor multinomial over widths). Page-to-compositor assignments
//! are latent and fit with EM under random restarts; pages are then labeled
//! by the posterior argmax.
//!
//! The crate is organized along the pipeline:
//!
//! * [`corpus`] — tokenization, word-level alignment of modern/diplomatic
//!   transcriptions, spacing extraction from glyph boxes, page assembly.
//! * [`features`] — word-list selection and sparse featurization of
//!   (modern, diplomatic) pairs into WORD and EDIT features.
//! * [`model`] — model parameters and page scoring.
//! * [`em`] — EM training with restarts, and prediction.
//! * [`eval`] — clustering accuracy metrics, random baseline, and the
//!   per-compositor behavior report.
//! * [`synth`] — synthetic corpora sampled from planted parameters.
//! * [`io`] — the file formats shared by the CLI and external tools.
//!
//! With the default `parallel` feature, page scoring, restarts, and
//! synthetic generation run on rayon; disabling the feature falls back to
//! equivalent sequential loops with identical results.

pub mod corpus;
pub mod em;
pub mod error;
pub mod eval;
pub mod features;
pub mod io;
pub mod model;
pub mod synth;

mod exec;

pub use error::{Error, Result};

/// Sizes the global rayon thread pool when the `parallel` feature is on.
///
/// Returns `false` when the pool was already initialized (or when built
/// without `parallel`, in which case the request is ignored with a warning).
#[cfg(feature = "parallel")]
pub fn configure_threads(threads: usize) -> bool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .is_ok()
}

#[cfg(not(feature = "parallel"))]
pub fn configure_threads(_threads: usize) -> bool {
    log::warn!("built without the `parallel` feature; thread count ignored");
    false
}
