//! Piecewise-constant weight schedules with exact integrals and exact
//! window-integral minimization for persistence-excitation certification.

use super::SignalError;

/// How a schedule extends past its last declared segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extent {
    /// The pattern on `[0, period)` repeats forever.
    Periodic(f64),
    /// The last value holds for all later times.
    Unbounded,
    /// Defined on `[0, end]` only; evaluation beyond is an error.
    Bounded(f64),
}

/// A weight signal `alpha(t)` with values in `[0, 1]`, constant on
/// left-closed segments.
///
/// `values[k]` applies on `[starts[k], starts[k+1])`; the last value runs to
/// the period boundary, to infinity, or to the declared end depending on the
/// extent.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSchedule {
    starts: Vec<f64>,
    values: Vec<f64>,
    extent: Extent,
    /// `prefix[k]` is the integral of the signal over `[0, starts[k]]`.
    prefix: Vec<f64>,
}

/// Result of an exact window-integral minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeMargin {
    /// Smallest window integral found.
    pub value: f64,
    /// Left endpoint of a window attaining it.
    pub window_start: f64,
    /// True when the minimum is valid for every window start `t >= 0`
    /// (periodic schedules), not only those inside the checked horizon.
    pub certified_all_t: bool,
}

impl WeightSchedule {
    pub fn piecewise(starts: Vec<f64>, values: Vec<f64>, extent: Extent) -> Result<Self, SignalError> {
        if starts.is_empty() || starts.len() != values.len() {
            return Err(SignalError::InvalidSpec(format!(
                "schedule needs matching nonempty starts/values, got {}/{}",
                starts.len(),
                values.len()
            )));
        }
        if starts[0] != 0.0 {
            return Err(SignalError::InvalidSpec(format!(
                "first segment must start at 0, got {}",
                starts[0]
            )));
        }
        if starts.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(SignalError::InvalidSpec(
                "segment starts must be strictly increasing".into(),
            ));
        }
        if starts.iter().any(|s| !s.is_finite()) {
            return Err(SignalError::InvalidSpec("non-finite segment start".into()));
        }
        for &v in &values {
            if !(0.0..=1.0).contains(&v) {
                return Err(SignalError::InvalidSpec(format!(
                    "weight value {v} outside [0, 1]"
                )));
            }
        }
        let last = *starts.last().unwrap();
        match extent {
            Extent::Periodic(p) => {
                if !(p.is_finite() && p > last) {
                    return Err(SignalError::InvalidSpec(format!(
                        "period {p} must exceed the last segment start {last}"
                    )));
                }
            }
            Extent::Bounded(end) => {
                if !(end.is_finite() && end > last) {
                    return Err(SignalError::InvalidSpec(format!(
                        "schedule end {end} must exceed the last segment start {last}"
                    )));
                }
            }
            Extent::Unbounded => {}
        }
        let mut prefix = vec![0.0; starts.len()];
        for k in 1..starts.len() {
            prefix[k] = prefix[k - 1] + values[k - 1] * (starts[k] - starts[k - 1]);
        }
        Ok(WeightSchedule {
            starts,
            values,
            extent,
            prefix,
        })
    }

    pub fn constant(value: f64) -> Result<Self, SignalError> {
        Self::piecewise(vec![0.0], vec![value], Extent::Unbounded)
    }

    /// On at weight 1 for `[0, on)`, off for `[on, period)`, repeating.
    pub fn blink(on: f64, period: f64) -> Result<Self, SignalError> {
        if !(on > 0.0 && on < period) {
            return Err(SignalError::InvalidSpec(format!(
                "blink on-time {on} must lie in (0, period = {period})"
            )));
        }
        Self::piecewise(vec![0.0, on], vec![1.0, 0.0], Extent::Periodic(period))
    }

    pub fn extent(&self) -> Extent {
        self.extent
    }

    pub fn segment_starts(&self) -> &[f64] {
        &self.starts
    }

    pub fn defined_through(&self, t: f64) -> bool {
        match self.extent {
            Extent::Bounded(end) => t <= end,
            _ => true,
        }
    }

    /// Integral of one full period (periodic schedules only).
    fn period_integral(&self, p: f64) -> f64 {
        let last = *self.starts.last().unwrap();
        self.prefix.last().unwrap() + self.values.last().unwrap() * (p - last)
    }

    /// Index of the segment containing `s`, for `s` within the base pattern.
    fn segment_index(&self, s: f64) -> usize {
        // partition_point: first start strictly greater than s
        self.starts.partition_point(|&b| b <= s).saturating_sub(1)
    }

    /// Antiderivative `F(t)` of the signal with `F(0) = 0`.
    ///
    /// Integrals are computed as `F(t1) - F(t0)`, which makes interval
    /// additivity hold to rounding accuracy.
    fn antiderivative(&self, t: f64) -> Result<f64, SignalError> {
        if t < 0.0 {
            return Err(SignalError::InvalidSpec(format!(
                "schedule evaluation at negative time {t}"
            )));
        }
        match self.extent {
            Extent::Periodic(p) => {
                let k = (t / p).floor();
                let mut s = t - k * p;
                let mut k = k;
                // Guard against rounding pushing s to the period boundary.
                if s >= p {
                    s -= p;
                    k += 1.0;
                }
                if s < 0.0 {
                    s = 0.0;
                }
                let idx = self.segment_index(s);
                Ok(k * self.period_integral(p)
                    + self.prefix[idx]
                    + self.values[idx] * (s - self.starts[idx]))
            }
            Extent::Unbounded | Extent::Bounded(_) => {
                if let Extent::Bounded(end) = self.extent {
                    if t > end {
                        return Err(SignalError::HorizonExceeded { t, end });
                    }
                }
                let idx = self.segment_index(t);
                Ok(self.prefix[idx] + self.values[idx] * (t - self.starts[idx]))
            }
        }
    }

    /// Value at `t >= 0` with left-closed, right-open segment semantics.
    pub fn value_at(&self, t: f64) -> Result<f64, SignalError> {
        if t < 0.0 {
            return Err(SignalError::InvalidSpec(format!(
                "schedule evaluation at negative time {t}"
            )));
        }
        match self.extent {
            Extent::Periodic(p) => {
                let mut s = t - (t / p).floor() * p;
                if s >= p {
                    s -= p;
                }
                if s < 0.0 {
                    s = 0.0;
                }
                Ok(self.values[self.segment_index(s)])
            }
            Extent::Unbounded => Ok(self.values[self.segment_index(t)]),
            Extent::Bounded(end) => {
                if t > end {
                    return Err(SignalError::HorizonExceeded { t, end });
                }
                Ok(self.values[self.segment_index(t)])
            }
        }
    }

    /// Exact integral of the signal over `[t0, t1]`.
    pub fn integrate(&self, t0: f64, t1: f64) -> Result<f64, SignalError> {
        if !(0.0 <= t0 && t0 <= t1) {
            return Err(SignalError::InvalidSpec(format!(
                "bad integration interval [{t0}, {t1}]"
            )));
        }
        Ok(self.antiderivative(t1)? - self.antiderivative(t0)?)
    }

    /// All discontinuity times of the signal in `(0, horizon)`, with
    /// periodic patterns unrolled.
    pub fn breakpoints_within(&self, horizon: f64) -> Vec<f64> {
        let mut out = Vec::new();
        match self.extent {
            Extent::Periodic(p) => {
                let mut k = 0.0;
                loop {
                    let base = k * p;
                    if base >= horizon {
                        break;
                    }
                    for &s in &self.starts {
                        let b = base + s;
                        if b > 0.0 && b < horizon {
                            out.push(b);
                        }
                    }
                    k += 1.0;
                }
            }
            _ => {
                for &s in &self.starts {
                    if s > 0.0 && s < horizon {
                        out.push(s);
                    }
                }
            }
        }
        out
    }

    /// Infimum over window starts `t` of the window integral
    /// `integrate(t, t + window)`.
    ///
    /// The window integral is piecewise linear in `t`, with slope changes
    /// only where `t` or `t + window` crosses a segment boundary, so the
    /// infimum is attained at one of finitely many candidate starts. For
    /// periodic schedules one full period of starts is checked and the
    /// result holds for every `t >= 0`; otherwise starts range over
    /// `[0, horizon - window]`.
    pub fn pe_margin(&self, window: f64, horizon: f64) -> Result<PeMargin, SignalError> {
        if !(window > 0.0) {
            return Err(SignalError::InvalidSpec(format!(
                "window length must be positive, got {window}"
            )));
        }
        let (lo, hi, certified) = match self.extent {
            Extent::Periodic(p) => (0.0, p, true),
            _ => {
                if horizon < window {
                    return Err(SignalError::InvalidSpec(format!(
                        "horizon {horizon} shorter than window {window}"
                    )));
                }
                (0.0, horizon - window, false)
            }
        };
        let mut candidates = vec![lo, hi];
        for b in self.breakpoints_within(hi + window + 1e-12) {
            if b >= lo && b <= hi {
                candidates.push(b);
            }
            let shifted = b - window;
            if shifted >= lo && shifted <= hi {
                candidates.push(shifted);
            }
        }
        candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut best = f64::INFINITY;
        let mut at = lo;
        for t in candidates {
            let g = self.integrate(t, t + window)?;
            if g < best {
                best = g;
                at = t;
            }
        }
        Ok(PeMargin {
            value: best,
            window_start: at,
            certified_all_t: certified,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_schedule_integrates_linearly() {
        let w = WeightSchedule::constant(1.0).unwrap();
        assert_eq!(w.integrate(2.0, 5.0).unwrap(), 3.0);
        assert_eq!(w.integrate(4.0, 4.0).unwrap(), 0.0);
    }

    #[test]
    fn blink_integral_and_margin() {
        let w = WeightSchedule::blink(1.0, 2.0).unwrap();
        assert!((w.integrate(0.0, 3.0).unwrap() - 2.0).abs() < 1e-12);
        // Every window of length one period integrates to the on-time.
        let m = w.pe_margin(2.0, 10.0).unwrap();
        assert!((m.value - 1.0).abs() < 1e-12);
        assert!(m.certified_all_t);
        // A window of half the period can go fully dark.
        let m = w.pe_margin(1.0, 10.0).unwrap();
        assert!(m.value.abs() < 1e-12);
        assert!((m.window_start - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fully_dark_window_in_bounded_schedule() {
        // On everywhere except [5, 5 + T].
        let t_win = 1.5;
        let w = WeightSchedule::piecewise(
            vec![0.0, 5.0, 5.0 + t_win],
            vec![1.0, 0.0, 1.0],
            Extent::Unbounded,
        )
        .unwrap();
        let m = w.pe_margin(t_win, 20.0).unwrap();
        assert!(m.value.abs() < 1e-12);
        assert!((m.window_start - 5.0).abs() < 1e-12);
    }

    #[test]
    fn bounded_schedule_errors_beyond_end() {
        let w =
            WeightSchedule::piecewise(vec![0.0], vec![1.0], Extent::Bounded(4.0)).unwrap();
        assert!(w.integrate(0.0, 4.0).is_ok());
        assert!(matches!(
            w.integrate(0.0, 4.5),
            Err(SignalError::HorizonExceeded { .. })
        ));
        assert!(w.value_at(4.5).is_err());
    }

    #[test]
    fn value_at_uses_left_closed_segments() {
        let w = WeightSchedule::piecewise(
            vec![0.0, 1.0],
            vec![0.25, 0.75],
            Extent::Periodic(2.0),
        )
        .unwrap();
        assert_eq!(w.value_at(0.0).unwrap(), 0.25);
        assert_eq!(w.value_at(1.0).unwrap(), 0.75);
        assert_eq!(w.value_at(2.0).unwrap(), 0.25);
        assert_eq!(w.value_at(3.0).unwrap(), 0.75);
    }

    #[test]
    fn breakpoints_unroll_periodically() {
        let w = WeightSchedule::blink(1.0, 2.0).unwrap();
        let b = w.breakpoints_within(5.0);
        assert_eq!(b, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn rejects_invalid_shapes() {
        assert!(WeightSchedule::piecewise(vec![0.5], vec![1.0], Extent::Unbounded).is_err());
        assert!(WeightSchedule::piecewise(vec![0.0, 0.0], vec![1.0, 0.0], Extent::Unbounded)
            .is_err());
        assert!(WeightSchedule::piecewise(vec![0.0], vec![1.5], Extent::Unbounded).is_err());
        assert!(WeightSchedule::piecewise(vec![0.0, 2.0], vec![1.0, 0.0], Extent::Periodic(1.5))
            .is_err());
    }

    proptest! {
        #[test]
        fn integral_is_additive(
            raw_starts in proptest::collection::vec(0.01f64..5.0, 1..6),
            raw_values in proptest::collection::vec(0.0f64..=1.0, 7),
            period_pad in 0.1f64..2.0,
            cuts in proptest::collection::vec(0.0f64..30.0, 3),
        ) {
            let mut starts = vec![0.0];
            let mut acc = 0.0;
            for s in &raw_starts {
                acc += s;
                starts.push(acc);
            }
            let values: Vec<f64> = raw_values[..starts.len()].to_vec();
            let period = acc + period_pad;
            let w = WeightSchedule::piecewise(starts, values, Extent::Periodic(period)).unwrap();
            let mut ts = cuts.clone();
            ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let (a, b, c) = (ts[0], ts[1], ts[2]);
            let whole = w.integrate(a, c).unwrap();
            let split = w.integrate(a, b).unwrap() + w.integrate(b, c).unwrap();
            prop_assert!((whole - split).abs() <= 1e-12 * (1.0 + whole.abs()));
        }

        #[test]
        fn window_integral_never_beats_margin(
            on in 0.1f64..1.9,
            window in 0.2f64..3.0,
            t in 0.0f64..40.0,
        ) {
            let w = WeightSchedule::blink(on, 2.0).unwrap();
            let m = w.pe_margin(window, 50.0).unwrap();
            let g = w.integrate(t, t + window).unwrap();
            prop_assert!(g >= m.value - 1e-10);
        }
    }
}
