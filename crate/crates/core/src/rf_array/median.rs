use crate::geometry::wrap_angle;

/// Three-tap circular median over the most recent azimuths (oldest first).
///
/// Entries are unwrapped around the newest one before taking the median,
/// so bearings straddling ±π behave like any other triple. With fewer
/// than three entries the newest raw value passes through.
pub fn median_filter3(history: &[f64]) -> f64 {
    let Some(&latest) = history.last() else {
        return f64::NAN;
    };
    if history.len() < 3 {
        return wrap_angle(latest);
    }
    let tail = &history[history.len() - 3..];
    let mut unwrapped: Vec<f64> = tail.iter().map(|a| latest + wrap_angle(a - latest)).collect();
    unwrapped.sort_by(f64::total_cmp);
    wrap_angle(unwrapped[1])
}
