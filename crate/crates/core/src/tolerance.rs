//! Numerical tolerances shared by every module.

/// Allowed deviation of a PMF total from 1.
pub const NORMALIZATION: f64 = 1e-12;

/// Absolute slack for equality checks (e.g. excess probability = ε).
pub const EQUALITY: f64 = 1e-10;

/// Absolute slack for inequality checks.
pub const INEQUALITY: f64 = 1e-9;

/// Slack added to a distortion threshold: `d ≤ D` is tested as `d ≤ D + DISTORTION_SLACK`.
pub const DISTORTION_SLACK: f64 = 1e-12;

/// Slack on cumulative covered mass when testing `Σ ≥ 1 − ε` and feasibility.
pub const COVER: f64 = 1e-12;

/// `|α − 1|` below this dispatches Rényi entropy to Shannon entropy.
pub const ALPHA_ONE_GUARD: f64 = 1e-9;

/// `d ≤ level` with the shared distortion slack.
#[inline]
pub fn within(distortion: f64, level: f64) -> bool {
    distortion <= level + DISTORTION_SLACK
}
