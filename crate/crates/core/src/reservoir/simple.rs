//! Constant-time processing of the common case where the new item is light,
//! gets dropped, and the raised threshold passes no large weight.

use crate::rng::RandomSource;
use crate::step::LightScan;

/// The part of the reservoir state the simple case reads.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimpleView {
    /// `|T|`, entries at the threshold.
    pub small_count: usize,
    pub threshold: f64,
    /// Smallest weight in `L`, or infinity when `L` is empty.
    pub min_large: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SimpleOutcome {
    /// The new item was dropped; the threshold moves to `threshold`.
    Handled { threshold: f64 },
    /// The full algorithm must run. If a uniform was already drawn it is
    /// carried here and must be reused, with the new item's segment first.
    Fallback { r: Option<f64> },
}

pub fn try_simple_insert(view: &SimpleView, weight: f64, rng: &mut RandomSource) -> SimpleOutcome {
    try_simple_insert_with(view, weight, || rng.uniform())
}

/// [`try_simple_insert`] with an explicit source for the single uniform.
pub fn try_simple_insert_with<F>(view: &SimpleView, weight: f64, draw: F) -> SimpleOutcome
where
    F: FnOnce() -> f64,
{
    if view.small_count == 0 || weight >= view.min_large {
        return SimpleOutcome::Fallback { r: None };
    }
    // Tentative threshold (w + |T| tau) / |T|, built the way the full
    // algorithm builds it so both take identical decisions on ties.
    let mut scan = LightScan::at_threshold(view.small_count, view.threshold);
    if !scan.offer(weight) {
        return SimpleOutcome::Fallback { r: None };
    }
    let tau = scan.tau();
    // An empty L (min_large = inf) must not count as crossed: inf >= inf.
    if weight >= tau || (view.min_large.is_finite() && scan.accepts(view.min_large)) {
        return SimpleOutcome::Fallback { r: None };
    }
    let r = draw();
    // The new item owns the first segment, of length 1 - w/tau.
    if r * tau <= tau - weight {
        SimpleOutcome::Handled { threshold: tau }
    } else {
        SimpleOutcome::Fallback { r: Some(r) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const VIEW: SimpleView = SimpleView {
        small_count: 100,
        threshold: 10.0,
        min_large: 50.0,
    };

    #[test]
    fn tentative_threshold_and_drop_probability() {
        let tau = (1.0 + 100.0 * 10.0) / 100.0;
        assert!((tau - 10.01f64).abs() < 1e-12);
        let q = (tau - 1.0) / tau;
        assert!((q - 0.9001).abs() < 1e-4);
        // Sweep r: the handled fraction is the drop probability of the new item.
        let grid = 100_000;
        let handled = (0..grid)
            .filter(|g| {
                let r = (*g as f64 + 0.5) / grid as f64;
                matches!(
                    try_simple_insert_with(&VIEW, 1.0, || r),
                    SimpleOutcome::Handled { .. }
                )
            })
            .count();
        assert!((handled as f64 / grid as f64 - q).abs() < 2.0 / grid as f64);
        match try_simple_insert_with(&VIEW, 1.0, || 0.5) {
            SimpleOutcome::Handled { threshold } => assert_eq!(threshold, tau),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            try_simple_insert_with(&VIEW, 1.0, || 0.95),
            SimpleOutcome::Fallback { r: Some(0.95) }
        );
    }

    #[test]
    fn guards_consume_no_randomness() {
        let never = || -> f64 { panic!("no draw expected") };
        assert_eq!(
            try_simple_insert_with(&VIEW, 60.0, never),
            SimpleOutcome::Fallback { r: None }
        );
        let empty = SimpleView { small_count: 0, ..VIEW };
        assert_eq!(
            try_simple_insert_with(&empty, 1.0, never),
            SimpleOutcome::Fallback { r: None }
        );
        // Threshold would pass the smallest large weight.
        let tight = SimpleView { min_large: 10.005, ..VIEW };
        assert_eq!(
            try_simple_insert_with(&tight, 1.0, never),
            SimpleOutcome::Fallback { r: None }
        );
        let mut rng = RandomSource::new(0);
        let no_large = SimpleView { min_large: f64::INFINITY, ..VIEW };
        assert!(matches!(
            try_simple_insert_with(&no_large, 1.0, || 0.5),
            SimpleOutcome::Handled { .. }
        ));
        try_simple_insert(&VIEW, 60.0, &mut rng);
        assert_eq!(rng.draws(), 0);
        try_simple_insert(&VIEW, 1.0, &mut rng);
        assert_eq!(rng.draws(), 1);
    }
}
