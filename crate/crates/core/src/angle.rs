//! Degree helpers shared across modules.

/// Wraps an angle in degrees into `[0, 360)`.
pub fn normalize_deg(deg: f64) -> f64 {
    let v = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if v >= 360.0 {
        0.0
    } else {
        v
    }
}

/// Shortest angular distance between two headings, in `[0, 180]`.
pub fn angular_error_deg(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}
