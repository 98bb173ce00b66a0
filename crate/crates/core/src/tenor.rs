//! The discrete tenor grid `T_0 < T_1 < ... < T_N` with uniform accrual `delta`.
//!
//! Every other module resolves "which accrual period am I in" through
//! [`TenorStructure::eta`]: `T_{eta(t)}` is the first tenor date at or after `t`.

use crate::error::{domain, Error, Result};

/// Absolute tolerance (in years) used to classify a time as a tenor date.
pub const TENOR_DATE_TOL: f64 = 1e-12;

/// Uniform tenor structure `T_i = t0 + i * delta`, `i = 0..=n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TenorStructure {
    t0: f64,
    delta: f64,
    n: usize,
}

impl TenorStructure {
    pub fn new(t0: f64, delta: f64, n: usize) -> Result<Self> {
        if !t0.is_finite() {
            return Err(Error::Config("tenor origin must be finite".into()));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::Config(format!(
                "accrual length must be positive, got {delta}"
            )));
        }
        if n < 2 {
            return Err(Error::Config(format!(
                "tenor structure needs at least two periods, got {n}"
            )));
        }
        Ok(Self { t0, delta, n })
    }

    /// Grid starting at zero and ending at `horizon`, which must be a whole
    /// number of accrual periods.
    pub fn with_horizon(delta: f64, horizon: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::Config(format!(
                "accrual length must be positive, got {delta}"
            )));
        }
        let periods = horizon / delta;
        let n = periods.round();
        if (periods - n).abs() > 1e-9 || n < 0.0 {
            return Err(Error::Config(format!(
                "horizon {horizon} is not a multiple of delta {delta}"
            )));
        }
        Self::new(0.0, delta, n as usize)
    }

    /// Builds the grid from explicit dates. Only uniformly spaced grids are accepted.
    pub fn from_dates(dates: &[f64]) -> Result<Self> {
        if dates.len() < 3 {
            return Err(Error::Config("need at least three tenor dates".into()));
        }
        let delta = dates[1] - dates[0];
        for w in dates.windows(2) {
            if ((w[1] - w[0]) - delta).abs() > 1e-10 {
                return Err(Error::Config(format!(
                    "non-uniform tenor spacing between {} and {}",
                    w[0], w[1]
                )));
            }
        }
        Self::new(dates[0], delta, dates.len() - 1)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Number of accrual periods `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Final date `T_N`.
    pub fn end(&self) -> f64 {
        self.date(self.n)
    }

    /// `T_i`; computed as `t0 + i * delta` so repeated calls never drift.
    pub fn date(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.delta
    }

    pub fn dates(&self) -> Vec<f64> {
        (0..=self.n).map(|i| self.date(i)).collect()
    }

    /// Index `i` if `t` is within [`TENOR_DATE_TOL`] of `T_i`.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = (t - self.t0) / self.delta;
        let i = x.round();
        if i < 0.0 || i > self.n as f64 {
            return None;
        }
        let i = i as usize;
        ((t - self.date(i)).abs() <= TENOR_DATE_TOL).then_some(i)
    }

    pub fn is_tenor_date(&self, t: f64) -> bool {
        self.index_of(t).is_some()
    }

    /// `eta(t) = max{ i in 1..=N : T_{i-1} < t }`, with `eta(T_0) = 0`.
    ///
    /// Defined on `[T_0, T_N)`; `T_N` itself is rejected.
    pub fn eta(&self, t: f64) -> Result<usize> {
        if !t.is_finite() || t < self.t0 - TENOR_DATE_TOL || t >= self.end() - TENOR_DATE_TOL {
            return domain(format!("eta({t}) outside [{}, {})", self.t0, self.end()));
        }
        Ok(self.eta_unchecked(t))
    }

    /// `eta` extended to the closed interval `[T_0, T_N]` (`eta(T_N) = N`).
    pub(crate) fn eta_closed(&self, t: f64) -> Result<usize> {
        if !t.is_finite() || t < self.t0 - TENOR_DATE_TOL || t > self.end() + TENOR_DATE_TOL {
            return domain(format!("time {t} outside [{}, {}]", self.t0, self.end()));
        }
        Ok(self.eta_unchecked(t))
    }

    fn eta_unchecked(&self, t: f64) -> usize {
        if let Some(i) = self.index_of(t) {
            return i;
        }
        let i = ((t - self.t0) / self.delta).ceil() as usize;
        i.clamp(1, self.n)
    }

    /// `T_{eta(t)}`, the next tenor date at or after `t`.
    pub fn next_tenor_date(&self, t: f64) -> Result<f64> {
        self.eta(t).map(|i| self.date(i))
    }

    /// Index `p` of the accrual period `[T_{p-1}, T_p)` that an increment
    /// starting at `s` falls in. Tenor dates start a new period here, unlike
    /// `eta`, which assigns them to the period they close.
    pub fn period_starting_at(&self, s: f64) -> usize {
        match self.index_of(s) {
            Some(i) => (i + 1).min(self.n),
            None => self.eta_unchecked(s),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quarterly() -> TenorStructure {
        TenorStructure::with_horizon(0.25, 2.0).unwrap()
    }

    #[test]
    fn eta_examples() {
        let ts = quarterly();
        assert_eq!(ts.eta(0.3).unwrap(), 2);
        assert_eq!(ts.eta(0.25).unwrap(), 1);
        assert_eq!(ts.eta(0.0).unwrap(), 0);
    }

    #[test]
    fn next_tenor_date_examples() {
        let ts = quarterly();
        assert_eq!(ts.next_tenor_date(0.3).unwrap(), 0.5);
        assert_eq!(ts.next_tenor_date(0.5).unwrap(), 0.5);
        assert_eq!(ts.next_tenor_date(0.0).unwrap(), 0.0);
    }

    #[test]
    fn eta_rejects_out_of_range() {
        let ts = quarterly();
        assert!(ts.eta(-0.1).is_err());
        assert!(ts.eta(2.0).is_err());
        assert!(ts.eta(2.5).is_err());
        assert!(ts.eta(f64::NAN).is_err());
        assert_eq!(ts.eta_closed(2.0).unwrap(), 8);
    }

    #[test]
    fn construction_validates() {
        assert!(TenorStructure::new(0.0, 0.0, 4).is_err());
        assert!(TenorStructure::new(0.0, 0.25, 1).is_err());
        assert!(TenorStructure::with_horizon(0.25, 2.1).is_err());
        assert!(TenorStructure::from_dates(&[0.0, 0.25, 0.6, 0.75]).is_err());
        let ts = TenorStructure::from_dates(&[0.0, 0.25, 0.5, 0.75]).unwrap();
        assert_eq!(ts.n(), 3);
    }

    #[test]
    fn tenor_dates_with_float_drift_classify_exactly() {
        let ts = TenorStructure::with_horizon(0.25, 10.0).unwrap();
        let mut t = 0.0;
        for i in 1..40 {
            t += 0.25;
            assert_eq!(ts.eta(t).unwrap(), i, "at {t}");
        }
        // 0.1 * 3 is not exactly 0.3, but is within tolerance of nothing here.
        let ts = TenorStructure::with_horizon(0.1, 1.0).unwrap();
        assert_eq!(ts.eta(0.1 * 3.0).unwrap(), 3);
    }

    #[test]
    fn eta_is_constant_on_left_open_periods() {
        let ts = quarterly();
        let steps = 8 * 400;
        for m in 1..steps {
            let t = m as f64 * ts.end() / steps as f64;
            let e = ts.eta(t).unwrap();
            assert!(
                ts.date(e - 1) < t && t <= ts.date(e) + TENOR_DATE_TOL,
                "t={t}"
            );
            let gap = ts.date(e) - t;
            assert!((0.0..ts.delta()).contains(&gap) || gap.abs() <= TENOR_DATE_TOL);
        }
    }

    #[test]
    fn period_starting_at_assigns_tenor_dates_forward() {
        let ts = quarterly();
        assert_eq!(ts.period_starting_at(0.0), 1);
        assert_eq!(ts.period_starting_at(0.25), 2);
        assert_eq!(ts.period_starting_at(0.3), 2);
        assert_eq!(ts.period_starting_at(1.75), 8);
    }

    proptest::proptest! {
        #[test]
        fn eta_monotone_and_bounded(a in 0.0f64..1.999, b in 0.0f64..1.999) {
            let ts = quarterly();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            proptest::prop_assert!(ts.eta(lo).unwrap() <= ts.eta(hi).unwrap());
            let gap = ts.next_tenor_date(hi).unwrap() - hi;
            proptest::prop_assert!(gap > -TENOR_DATE_TOL && gap < ts.delta());
        }
    }
}
