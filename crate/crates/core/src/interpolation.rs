//! Arbitrage-free extension of the discrete-tenor model to continuous tenor.
//!
//! The extension is pinned down by the price of the "short bond"
//! `B(t, T_{eta(t)})`. Two specifications are supported:
//!
//! * [`Method::DaycountFractions`]: the short bond accrues the last spot
//!   fixing linearly by day-count fraction, so it is deterministic within each
//!   accrual period.
//! * [`Method::ShortBondVolatility`]: the short bond blends the last fixing and
//!   the next live forward LIBOR with weight `alpha(t)`, which gives short-dated
//!   bonds volatility. Longer bonds then pick up a lognormal correction factor.
//!
//! Everything else (arbitrary-maturity bonds, broken-date LIBORs,
//! instantaneous forwards, the numeraire) follows from no-arbitrage and is a
//! function of the discrete state alone, so the Markov structure of the
//! discrete model is kept.
//!
//! The building block is the long-bond ratio `B(t, t2) / B(t, T_k)` for `t2`
//! inside the accrual period `[T_{k-1}, T_k]`:
//!
//! ```text
//! method 1:  1 + (T_k - t2) L(t, T_{k-1})
//! method 2:  1 + (T_k - t2) (a(t2) L(t, T_{k-1}) + (1 - a(t2)) L(t, T_k) CF)
//!            CF = 1 + d L(t,T_k) (exp(int_t^t2 |lambda(s,T_k)|^2 ds) - 1) / (1 + d L(t,T_k))
//! ```
//!
//! where `L(t, T_{k-1})` is the recorded fixing once `T_{k-1} <= t`. With the
//! linear weight, method-2 forwards at the start of a period are roughly
//! `2 L(T_{k-1}) - L(t, T_k)`, so they turn negative when the live rate is
//! more than twice the last fixing. Method 2
//! needs `L(., T_k)`, which does not exist for `k = N`; the final period falls
//! back to method 1 (see [`Interpolator::falls_back`]).

use crate::curve::{FixingHistory, InitialCurve, ModelState};
use crate::error::{domain, Error, Result};
use crate::tenor::{TenorStructure, TENOR_DATE_TOL};
use crate::vol::VolatilitySpec;

/// Finite-difference step (years) for instantaneous forwards.
pub const FORWARD_FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Method 1: interpolation by day-count fractions.
    DaycountFractions,
    /// Method 2: interpolation with short bond volatility.
    ShortBondVolatility,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::DaycountFractions => "method1",
            Method::ShortBondVolatility => "method2",
        }
    }
}

/// Blend weight on the last fixing in the method-2 short bond, as a function
/// of the remaining fraction `u = (T_{eta(t)} - t) / delta` of the period.
///
/// Any weight must satisfy `alpha(1) = 1` (start of period) and `alpha(0) = 0`.
#[derive(Debug, Clone, Copy)]
pub enum AlphaWeight {
    /// `alpha = u`.
    Linear,
    Custom(fn(f64) -> f64),
}

impl AlphaWeight {
    pub fn eval(&self, remaining_fraction: f64) -> f64 {
        let u = remaining_fraction.clamp(0.0, 1.0);
        match self {
            AlphaWeight::Linear => u,
            AlphaWeight::Custom(f) => f(u).clamp(0.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct InterpolationScheme {
    pub method: Method,
    pub alpha: AlphaWeight,
}

impl InterpolationScheme {
    pub fn daycount() -> Self {
        Self {
            method: Method::DaycountFractions,
            alpha: AlphaWeight::Linear,
        }
    }

    pub fn short_bond_vol() -> Self {
        Self {
            method: Method::ShortBondVolatility,
            alpha: AlphaWeight::Linear,
        }
    }

    pub fn from_method(method: Method) -> Self {
        Self {
            method,
            alpha: AlphaWeight::Linear,
        }
    }

    /// `alpha(t)` for `t` in `(T_{eta(t)-1}, T_{eta(t)})`.
    pub fn alpha_at(&self, tenor: &TenorStructure, t: f64) -> Result<f64> {
        let k = tenor.eta_closed(t)?.max(1);
        Ok(self.alpha.eval((tenor.date(k) - t) / tenor.delta()))
    }
}

/// Which one-sided limit to take at a tenor date, where instantaneous
/// forwards jump.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForwardMode {
    /// Closed form where one exists (method 1); method 2 always differences.
    Analytic,
    FiniteDifference,
}

/// Correction factor `E_{T_k}[L(t2, T_k) | F_t1] / L(t1, T_k)` for a lognormal
/// LIBOR that is a martingale under `P_{T_{k+1}}`.
pub fn correction_factor(libor: f64, delta: f64, integrated_var: f64) -> f64 {
    1.0 + delta * libor * integrated_var.exp_m1() / (1.0 + delta * libor)
}

/// `int_a^b r(s) ds` for the method-1 short rate `r(s) = F / (1 + (T_end - s) F)`.
pub fn daycount_short_rate_integral(fixing: f64, period_end: f64, a: f64, b: f64) -> f64 {
    (1.0 + (period_end - a) * fixing).ln() - (1.0 + (period_end - b) * fixing).ln()
}

/// Bond, rate and numeraire evaluation under one interpolation scheme.
#[derive(Debug, Clone, Copy)]
pub struct Interpolator<'a> {
    scheme: InterpolationScheme,
    vol: &'a VolatilitySpec,
}

impl<'a> Interpolator<'a> {
    pub fn new(scheme: InterpolationScheme, vol: &'a VolatilitySpec) -> Self {
        Self { scheme, vol }
    }

    pub fn scheme(&self) -> InterpolationScheme {
        self.scheme
    }

    pub fn vol(&self) -> &'a VolatilitySpec {
        self.vol
    }

    /// True when method 2 is requested at a broken maturity in the final
    /// period, where it is evaluated as method 1.
    pub fn falls_back(&self, tenor: &TenorStructure, maturity: f64) -> bool {
        self.scheme.method == Method::ShortBondVolatility
            && !tenor.is_tenor_date(maturity)
            && tenor
                .eta_closed(maturity)
                .map(|k| k == tenor.n())
                .unwrap_or(false)
    }

    /// Whether the broken-date LIBOR for start `t` uses the fallback on either leg.
    pub fn libor_falls_back(&self, tenor: &TenorStructure, start: f64) -> bool {
        self.falls_back(tenor, start) || self.falls_back(tenor, start + tenor.delta())
    }

    fn uses_short_bond_vol(&self, tenor: &TenorStructure, k: usize) -> bool {
        self.scheme.method == Method::ShortBondVolatility && k < tenor.n()
    }

    /// `B(t, t2) / B(t, T_k)` with `t2` in `[T_{k-1}, T_k]`, `t2 >= t`.
    fn ratio_in_period(&self, state: &ModelState, k: usize, t2: f64) -> f64 {
        let tenor = state.tenor();
        let libors = state.libors();
        let delta = tenor.delta();
        let tau = (tenor.date(k) - t2).max(0.0);
        let last = libors[k - 1];
        if !self.uses_short_bond_vol(tenor, k) {
            return 1.0 + tau * last;
        }
        let next = libors[k];
        let alpha = self.scheme.alpha.eval(tau / delta);
        let var = if t2 > state.time() {
            self.vol
                .integrated_cov_unchecked(tenor.date(k), tenor.date(k), state.time(), t2)
        } else {
            0.0
        };
        let cf = correction_factor(next, delta, var);
        1.0 + tau * (alpha * last + (1.0 - alpha) * next * cf)
    }

    fn check_maturity(&self, state: &ModelState, t2: f64) -> Result<()> {
        let t1 = state.time();
        if !t2.is_finite() || t2 < t1 - TENOR_DATE_TOL {
            return domain(format!("maturity {t2} precedes model time {t1}"));
        }
        if t2 > state.tenor().end() + TENOR_DATE_TOL {
            return domain(format!(
                "maturity {t2} beyond the tenor horizon {}",
                state.tenor().end()
            ));
        }
        Ok(())
    }

    /// Short bond `B(t, T_{eta(t)})`.
    pub fn short_bond(&self, state: &ModelState) -> Result<f64> {
        let tenor = state.tenor();
        let t = state.time();
        if tenor.is_tenor_date(t) {
            return Ok(1.0);
        }
        let k = tenor.eta(t)?;
        state.fixings().require(k - 1)?;
        Ok(1.0 / self.ratio_in_period(state, k, t))
    }

    /// `B(t, t2) / B(t, T_{eta(t2)})`; exactly 1 when `t2` is a tenor date.
    pub fn long_bond_ratio(&self, state: &ModelState, t2: f64) -> Result<f64> {
        self.check_maturity(state, t2)?;
        let tenor = state.tenor();
        if tenor.is_tenor_date(t2) {
            return Ok(1.0);
        }
        let k = tenor.eta_closed(t2)?;
        Ok(self.ratio_in_period(state, k, t2))
    }

    /// Zero coupon bond `B(t, t2)` for any `t <= t2 <= T_N`.
    pub fn zcb(&self, state: &ModelState, t2: f64) -> Result<f64> {
        self.check_maturity(state, t2)?;
        let t1 = state.time();
        if (t2 - t1).abs() <= TENOR_DATE_TOL {
            return Ok(1.0);
        }
        let tenor = state.tenor();
        let k1 = tenor.eta_closed(t1)?;
        let k2 = tenor.eta_closed(t2)?;
        let short = self.short_bond(state)?;
        let delta = tenor.delta();
        let discrete: f64 = state.libors()[k1..k2]
            .iter()
            .map(|l| 1.0 / (1.0 + delta * l))
            .product();
        Ok(short * discrete * self.long_bond_ratio(state, t2)?)
    }

    /// Broken-date forward LIBOR `L(t, T)` for `t <= T <= T_N - delta`,
    /// evaluated in factored form
    /// `[B(t,T)/B(t,T_k)] (1 + delta L(t,T_k)) [B(t,T_{k+1})/B(t,T+delta)]`.
    pub fn interpolated_libor(&self, state: &ModelState, start: f64) -> Result<f64> {
        let tenor = state.tenor();
        let delta = tenor.delta();
        self.check_maturity(state, start)?;
        if start > tenor.end() - delta + TENOR_DATE_TOL {
            return domain(format!(
                "LIBOR start {start} beyond the last start date {}",
                tenor.end() - delta
            ));
        }
        if let Some(j) = tenor.index_of(start) {
            return Ok(state.libors()[j]);
        }
        let k = tenor.eta_closed(start)?;
        let head = self.ratio_in_period(state, k, start);
        let tail = self.ratio_in_period(state, k + 1, start + delta);
        let growth = head * (1.0 + delta * state.libors()[k]) / tail;
        Ok((growth - 1.0) / delta)
    }

    /// `f(t, T)` inside the accrual period ending at `T_k`.
    fn forward_in_period(
        &self,
        state: &ModelState,
        k: usize,
        maturity: f64,
        mode: ForwardMode,
    ) -> f64 {
        let tenor = state.tenor();
        let analytic = mode == ForwardMode::Analytic && !self.uses_short_bond_vol(tenor, k);
        if analytic {
            let last = state.libors()[k - 1];
            return last / (1.0 + (tenor.date(k) - maturity) * last);
        }
        let h = FORWARD_FD_STEP;
        let lo = tenor.date(k - 1).max(state.time());
        let hi = tenor.date(k);
        let g = |x: f64| self.ratio_in_period(state, k, x).ln();
        if hi - maturity < 2.0 * h {
            (-3.0 * g(maturity) + 4.0 * g(maturity - h) - g(maturity - 2.0 * h)) / (2.0 * h)
        } else if maturity - lo < 2.0 * h {
            (3.0 * g(maturity) - 4.0 * g(maturity + h) + g(maturity + 2.0 * h)) / (2.0 * h)
        } else {
            (g(maturity - h) - g(maturity + h)) / (2.0 * h)
        }
    }

    /// Instantaneous forward `f(t, T)` for broken `T` in `(t, T_N)`.
    pub fn instantaneous_forward(
        &self,
        state: &ModelState,
        maturity: f64,
        mode: ForwardMode,
    ) -> Result<f64> {
        let tenor = state.tenor();
        if tenor.is_tenor_date(maturity) {
            return domain(format!(
                "instantaneous forwards jump at tenor date {maturity}; request a one-sided limit"
            ));
        }
        if !(maturity > state.time()) || maturity >= tenor.end() {
            return domain(format!(
                "forward maturity {maturity} outside ({}, {})",
                state.time(),
                tenor.end()
            ));
        }
        let k = tenor.eta(maturity)?;
        Ok(self.forward_in_period(state, k, maturity, mode))
    }

    /// One-sided limit of `f(t, .)` at `maturity`; away from tenor dates this
    /// is the ordinary forward. With `maturity = t = T_i` the left limit is
    /// the short rate just before `T_i`.
    pub fn instantaneous_forward_limit(
        &self,
        state: &ModelState,
        maturity: f64,
        side: Side,
        mode: ForwardMode,
    ) -> Result<f64> {
        let tenor = state.tenor();
        let Some(j) = tenor.index_of(maturity) else {
            return self.instantaneous_forward(state, maturity, mode);
        };
        let k = match side {
            Side::Left => j,
            Side::Right => j + 1,
        };
        if k == 0 || k > tenor.n() {
            return domain(format!(
                "no {side:?} limit of the forward curve at {maturity}"
            ));
        }
        if maturity < state.time() - TENOR_DATE_TOL {
            return domain(format!(
                "{side:?} limit at {maturity} lies in the past of t = {}",
                state.time()
            ));
        }
        Ok(self.forward_in_period(state, k, tenor.date(j), mode))
    }

    /// Continuously compounded short rate `f(t, t+)`.
    pub fn short_rate(&self, state: &ModelState, mode: ForwardMode) -> Result<f64> {
        let tenor = state.tenor();
        let t = state.time();
        if t >= tenor.end() - TENOR_DATE_TOL {
            return domain(format!("no short rate at or after T_N = {}", tenor.end()));
        }
        let k = tenor.period_starting_at(t);
        state.fixings().require(k - 1)?;
        Ok(self.forward_in_period(state, k, t, mode))
    }

    /// Value of the spot-LIBOR roll-over strategy started with one unit at `T_0`:
    /// `prod_{i<eta(t)-1} (1 + delta L(T_i,T_i)) * B(t,T_{eta(t)}) / B(T_{eta(t)-1},T_{eta(t)})`.
    pub fn rolling_numeraire(&self, state: &ModelState) -> Result<f64> {
        let tenor = state.tenor();
        let t = state.time();
        let k = tenor.eta_closed(t)?;
        if k == 0 {
            return Ok(1.0);
        }
        let fixings = state.fixings();
        let delta = tenor.delta();
        let mut value = 1.0;
        for i in 0..k {
            value *= 1.0 + delta * fixings.require(i)?;
        }
        Ok(value * self.short_bond(state)?)
    }

    /// Continuously compounded savings account `exp(int_0^t r(s) ds)`.
    ///
    /// Only available for method 1, where the short rate within a period is a
    /// deterministic function of the period's fixing; under method 2 it
    /// depends on the whole path of the live LIBOR and the roll-over
    /// numeraire is used instead.
    pub fn savings_account(&self, fixings: &FixingHistory, t: f64) -> Result<f64> {
        if self.scheme.method != Method::DaycountFractions {
            return Err(Error::Config(
                "the savings account is path dependent under short bond volatility; use the rolling numeraire".into(),
            ));
        }
        let tenor = fixings.tenor();
        let k = tenor.eta_closed(t)?;
        if k == 0 {
            return Ok(1.0);
        }
        let delta = tenor.delta();
        let mut value = 1.0;
        for i in 0..k - 1 {
            value *= 1.0 + delta * fixings.require(i)?;
        }
        let last = fixings.require(k - 1)?;
        let stub = daycount_short_rate_integral(last, tenor.date(k), tenor.date(k - 1), t);
        Ok(value * stub.exp())
    }
}

/// Loglinear interpolation of initial discount factors; used only as a
/// comparison baseline, it is not consistent with the model dynamics.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogLinearDiscount;

impl LogLinearDiscount {
    fn log_bonds(initial: &InitialCurve, tenor: &TenorStructure) -> Vec<f64> {
        let delta = tenor.delta();
        let mut out = Vec::with_capacity(tenor.n() + 1);
        let mut acc = 0.0;
        out.push(acc);
        for l in initial.libors() {
            acc -= (delta * l).ln_1p();
            out.push(acc);
        }
        out
    }

    fn locate(tenor: &TenorStructure, maturity: f64) -> Result<(usize, f64)> {
        let k = tenor.eta_closed(maturity)?;
        if k == 0 {
            return Ok((0, 0.0));
        }
        let w = ((maturity - tenor.date(k - 1)) / tenor.delta()).clamp(0.0, 1.0);
        Ok((k - 1, w))
    }

    /// `B(0, T)` with `ln B` linear between tenor dates.
    pub fn zcb(
        &self,
        initial: &InitialCurve,
        tenor: &TenorStructure,
        maturity: f64,
    ) -> Result<f64> {
        initial.check_tenor(tenor)?;
        let lb = Self::log_bonds(initial, tenor);
        let (i, w) = Self::locate(tenor, maturity)?;
        if w == 0.0 {
            return Ok(lb[i].exp());
        }
        Ok(((1.0 - w) * lb[i] + w * lb[i + 1]).exp())
    }

    /// Stepwise-constant instantaneous forward `ln(1 + delta L_i) / delta` on
    /// `(T_i, T_{i+1}]`.
    pub fn forward(
        &self,
        initial: &InitialCurve,
        tenor: &TenorStructure,
        maturity: f64,
    ) -> Result<f64> {
        initial.check_tenor(tenor)?;
        let k = tenor.eta_closed(maturity)?.max(1);
        Ok((tenor.delta() * initial.libors()[k - 1]).ln_1p() / tenor.delta())
    }

    /// Broken-date `L(0, T)` implied by the interpolated discount factors.
    pub fn libor(&self, initial: &InitialCurve, tenor: &TenorStructure, start: f64) -> Result<f64> {
        initial.check_tenor(tenor)?;
        let delta = tenor.delta();
        if start > tenor.end() - delta + TENOR_DATE_TOL || start < tenor.t0() - TENOR_DATE_TOL {
            return domain(format!("LIBOR start {start} outside the curve"));
        }
        let libors = initial.libors();
        let (i, w) = Self::locate(tenor, start)?;
        if w == 0.0 || i + 1 >= libors.len() {
            return Ok(libors[i]);
        }
        let a = (delta * libors[i]).ln_1p();
        let b = (delta * libors[i + 1]).ln_1p();
        Ok(((1.0 - w) * a + w * b).exp_m1() / delta)
    }
}
