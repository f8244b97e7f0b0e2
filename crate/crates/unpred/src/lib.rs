//! File formats, DOT export, and logging for the `unpred` binary. The math
//! lives in `unpred-core`; this crate only moves data in and out of it.

pub mod dot;
pub mod formats;
pub mod logging;
