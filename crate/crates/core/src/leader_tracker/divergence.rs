use crate::geometry::angle_distance;

/// One AoA reading paired with the bearing the belief predicted at that time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoaSample {
    pub t: f64,
    /// Robot-frame AoA azimuth.
    pub aoa: f64,
    /// Robot-frame bearing from robot to believed leader.
    pub belief_bearing: f64,
    pub confident: bool,
}

/// True when the confident samples have disagreed by more than `threshold`
/// without interruption for at least `window` seconds up to `now`.
/// Low-confidence samples neither extend nor break a streak.
pub fn check_divergence(samples: &[AoaSample], now: f64, window: f64, threshold: f64) -> bool {
    let mut streak_start: Option<f64> = None;
    for s in samples.iter().filter(|s| s.confident && s.t <= now) {
        if angle_distance(s.aoa, s.belief_bearing) > threshold {
            streak_start.get_or_insert(s.t);
        } else {
            streak_start = None;
        }
    }
    streak_start.is_some_and(|t0| now - t0 >= window)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64, until: f64) -> Vec<AoaSample> {
        (0..=(until * 5.0) as usize)
            .map(|k| {
                let t = k as f64 * 0.2;
                AoaSample { t, aoa: f(t).to_radians(), belief_bearing: 0.0, confident: true }
            })
            .collect()
    }

    #[test]
    fn agreement_keeps_tracking() {
        let s = series(|t| 5.0 * (t * 3.0).sin(), 4.0);
        assert!(!check_divergence(&s, 4.0, 2.0, 30f64.to_radians()));
    }

    #[test]
    fn sustained_disagreement_diverges() {
        let s = series(|_| 90.0, 2.0);
        assert!(check_divergence(&s, 2.0, 2.0, 30f64.to_radians()));
        assert!(!check_divergence(&s, 1.8, 2.0, 30f64.to_radians()));
    }

    #[test]
    fn short_disagreement_then_agreement() {
        let s = series(|t| if t < 1.0 { 90.0 } else { 2.0 }, 3.0);
        assert!(!check_divergence(&s, 3.0, 2.0, 30f64.to_radians()));
    }

    #[test]
    fn low_confidence_samples_are_ignored() {
        let mut s = series(|_| 90.0, 2.0);
        s[5].aoa = 0.0;
        s[5].confident = false;
        assert!(check_divergence(&s, 2.0, 2.0, 30f64.to_radians()));
    }
}
