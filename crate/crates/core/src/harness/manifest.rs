use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::FileRecord;

/// Source of manifest timestamps. A fixed clock makes the manifest, and so the
/// whole output tree, reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clock {
    System,
    /// Seconds since the Unix epoch.
    Fixed(u64),
}

impl Clock {
    /// `SOURCE_DATE_EPOCH` when set and numeric, else the system clock.
    pub fn from_env() -> Self {
        std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .map_or(Clock::System, Clock::Fixed)
    }

    pub fn now(self) -> String {
        let t = match self {
            Clock::System => SystemTime::now(),
            Clock::Fixed(s) => UNIX_EPOCH + Duration::from_secs(s),
        };
        humantime::format_rfc3339_seconds(t).to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub kind: String,
    pub seed: u64,
    /// SHA-256 of the resolved config as written to `config.json`.
    pub config_sha256: String,
    pub started_at: String,
    pub finished_at: String,
    /// Every file in the run directory except the manifest, sorted by path.
    pub files: Vec<FileRecord>,
}

pub const TOOL_NAME: &str = "bbdlab";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_clock_formats() {
        assert_eq!(Clock::Fixed(0).now(), "1970-01-01T00:00:00Z");
        assert_eq!(Clock::Fixed(86_400 + 61).now(), "1970-01-02T00:01:01Z");
    }
}
