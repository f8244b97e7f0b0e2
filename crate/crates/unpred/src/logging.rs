//! Minimal stderr logger controlled by the `UNPRED_LOG` environment
//! variable: `off` (default), `error`, `info`, or `debug`.

use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Level {
    Off,
    Error,
    Info,
    Debug,
}

pub fn level() -> Level {
    static LEVEL: OnceLock<Level> = OnceLock::new();
    *LEVEL.get_or_init(|| match std::env::var("UNPRED_LOG").as_deref() {
        Ok("error") => Level::Error,
        Ok("info") => Level::Info,
        Ok("debug") => Level::Debug,
        _ => Level::Off,
    })
}

pub fn log(at: Level, args: std::fmt::Arguments<'_>) {
    if at <= level() && level() != Level::Off {
        let tag = match at {
            Level::Error => "error",
            Level::Info => "info",
            Level::Debug => "debug",
            Level::Off => return,
        };
        eprintln!("[unpred {tag}] {args}");
    }
}

#[macro_export]
macro_rules! log_info {
    ($($t:tt)*) => { $crate::logging::log($crate::logging::Level::Info, format_args!($($t)*)) };
}

#[macro_export]
macro_rules! log_debug {
    ($($t:tt)*) => { $crate::logging::log($crate::logging::Level::Debug, format_args!($($t)*)) };
}
