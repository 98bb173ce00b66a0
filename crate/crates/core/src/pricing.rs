//! Caplets on (possibly broken-date) forward LIBORs: Black formula, implied
//! volatility, Monte Carlo prices and the frozen-coefficient approximation.

use statrs::function::erf::erfc;

use crate::curve::{InitialCurve, ModelState};
use crate::error::{domain, Bound, Error, Result};
use crate::interpolation::{InterpolationScheme, Interpolator, Method};
use crate::measure::MeasureTag;
use crate::simulation::{estimate, simulate_paths, MCConfig, MCEstimate};
use crate::tenor::{TenorStructure, TENOR_DATE_TOL};
use crate::vol::VolatilitySpec;

/// Relative bump for finite-difference sensitivities to the discrete rates.
pub const SENSITIVITY_BUMP: f64 = 1e-6;

/// Caplet paying `notional * accrual * max(L(T, T) - strike, 0)` at `T + accrual`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapletSpec {
    pub start: f64,
    pub accrual: f64,
    pub strike: f64,
    pub notional: f64,
}

impl CapletSpec {
    pub fn new(start: f64, accrual: f64, strike: f64) -> Self {
        Self {
            start,
            accrual,
            strike,
            notional: 1.0,
        }
    }

    pub fn payment_date(&self) -> f64 {
        self.start + self.accrual
    }

    pub fn validate(&self, tenor: &TenorStructure) -> Result<()> {
        if (self.accrual - tenor.delta()).abs() > TENOR_DATE_TOL {
            return Err(Error::Config(format!(
                "caplet accrual {} differs from the tenor accrual {}",
                self.accrual,
                tenor.delta()
            )));
        }
        if !(self.strike > 0.0 && self.strike.is_finite()) {
            return Err(Error::Config(format!(
                "strike must be positive, got {}",
                self.strike
            )));
        }
        if !(self.notional > 0.0 && self.notional.is_finite()) {
            return Err(Error::Config(format!(
                "notional must be positive, got {}",
                self.notional
            )));
        }
        let last = tenor.end() - tenor.delta();
        if !(self.start > tenor.t0()) || self.start > last + TENOR_DATE_TOL {
            return domain(format!(
                "caplet start {} outside ({}, {last}]",
                self.start,
                tenor.t0()
            ));
        }
        Ok(())
    }
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `discount * accrual * (F N(d1) - K N(d2))` with total standard deviation `v = sigma sqrt(T)`.
pub fn black_caplet(
    forward: f64,
    strike: f64,
    total_stdev: f64,
    discount: f64,
    accrual: f64,
) -> Result<f64> {
    if !(forward > 0.0) || !(strike > 0.0) {
        return domain(format!(
            "forward {forward} and strike {strike} must be positive"
        ));
    }
    if !(total_stdev >= 0.0) || !total_stdev.is_finite() {
        return domain(format!(
            "total standard deviation {total_stdev} must be non-negative"
        ));
    }
    if !(discount > 0.0 && discount <= 1.0 + 1e-12) || !(accrual > 0.0) {
        return domain(format!(
            "discount {discount} or accrual {accrual} out of range"
        ));
    }
    let scale = discount * accrual;
    if total_stdev == 0.0 {
        return Ok(scale * (forward - strike).max(0.0));
    }
    let d1 = ((forward / strike).ln() + 0.5 * total_stdev * total_stdev) / total_stdev;
    let d2 = d1 - total_stdev;
    Ok((scale * (forward * norm_cdf(d1) - strike * norm_cdf(d2))).max(0.0))
}

/// Black volatility reproducing `price`, by bisection to `1e-10` in sigma.
pub fn implied_vol(
    price: f64,
    forward: f64,
    strike: f64,
    maturity: f64,
    discount: f64,
    accrual: f64,
) -> Result<f64> {
    if !(maturity > 0.0) {
        return domain(format!("maturity {maturity} must be positive"));
    }
    let lower = black_caplet(forward, strike, 0.0, discount, accrual)?;
    let upper = discount * accrual * forward;
    let slack = 1e-15 * upper;
    if !price.is_finite() || price < lower - slack {
        return Err(Error::OutOfBounds {
            price,
            bound: Bound::Lower,
            limit: lower,
        });
    }
    if price >= upper {
        return Err(Error::OutOfBounds {
            price,
            bound: Bound::Upper,
            limit: upper,
        });
    }
    if price <= lower {
        return Ok(0.0);
    }
    let sqrt_t = maturity.sqrt();
    let price_at = |s: f64| black_caplet(forward, strike, s * sqrt_t, discount, accrual);
    let mut hi = 1.0;
    while price_at(hi)? < price {
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::Numerical(format!(
                "no volatility reproduces price {price}"
            )));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-11 {
        let mid = 0.5 * (lo + hi);
        if price_at(mid)? < price {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Elasticities `w_i = dL(t,T)/dL(t,T_i) * L(t,T_i) / L(t,T)` of the
/// interpolated LIBOR with respect to the live discrete rates it depends on.
///
/// Method 1 uses the closed form; method 2 differences the bond formulas,
/// which brings in `L(t, T_{eta(T)+1})` through the correction factor.
pub fn libor_elasticities(
    state: &ModelState,
    scheme: InterpolationScheme,
    vol: &VolatilitySpec,
    start: f64,
) -> Result<Vec<(usize, f64)>> {
    let tenor = state.tenor();
    let ip = Interpolator::new(scheme, vol);
    let value = ip.interpolated_libor(state, start)?;
    if let Some(j) = tenor.index_of(start) {
        return Ok(if state.is_live(j) {
            vec![(j, 1.0)]
        } else {
            Vec::new()
        });
    }
    match scheme.method {
        Method::DaycountFractions => {
            let k = tenor.eta(start)?;
            let libors = state.libors();
            let (a, c) = (libors[k - 1], libors[k]);
            let (tau, delta) = (tenor.date(k) - start, tenor.delta());
            let q = 1.0 + tau * c;
            let d_prev = tau * (1.0 + delta * c) / (delta * q);
            let d_next = (1.0 + tau * a) * (delta * q - tau * (1.0 + delta * c)) / (delta * q * q);
            let mut out = Vec::with_capacity(2);
            if state.is_live(k - 1) {
                out.push((k - 1, d_prev * a / value));
            }
            out.push((k, d_next * c / value));
            Ok(out)
        }
        Method::ShortBondVolatility => finite_difference_elasticities(state, &ip, start, value),
    }
}

fn finite_difference_elasticities(
    state: &ModelState,
    ip: &Interpolator<'_>,
    start: f64,
    value: f64,
) -> Result<Vec<(usize, f64)>> {
    let tenor = state.tenor();
    let k = tenor.eta(start)?;
    let mut out = Vec::with_capacity(3);
    for i in k - 1..=(k + 1).min(tenor.n() - 1) {
        if !state.is_live(i) {
            continue;
        }
        let l = state.libors()[i];
        let h = SENSITIVITY_BUMP * l;
        let up = ip.interpolated_libor(&state.with_libor(i, l + h)?, start)?;
        let down = ip.interpolated_libor(&state.with_libor(i, l - h)?, start)?;
        out.push((i, (up - down) / (2.0 * h) * l / value));
    }
    Ok(out)
}

/// Relative volatility `d`-vector of the interpolated `L(t, T)` at the
/// state's time: `sum_i w_i lambda(t, T_i)` over the live rates it depends on.
pub fn interp_libor_vol(
    state: &ModelState,
    scheme: InterpolationScheme,
    vol: &VolatilitySpec,
    start: f64,
) -> Result<Vec<f64>> {
    let tenor = state.tenor();
    let mut out = vec![0.0; vol.dim()];
    for (i, w) in libor_elasticities(state, scheme, vol, start)? {
        let lam = vol.vol(state.time(), tenor.date(i))?;
        for (o, l) in out.iter_mut().zip(lam) {
            *o += w * l;
        }
    }
    Ok(out)
}

/// Upper integration limit used for each discrete rate in the approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ApproxHorizon {
    /// `min(T_i, T)`: every rate contributes until it fixes or the caplet's
    /// rate is set, whichever comes first.
    #[default]
    CapletStart,
    /// `T_i` for every rate, so the rate fixing after `T` keeps contributing
    /// past `T`.
    RateFixing,
}

/// Frozen-coefficient Black volatility of a broken-date caplet:
/// `sigma^2 T = sum_{i,j} w_i w_j int_0^{u_ij} lambda(s,T_i) . lambda(s,T_j) ds`
/// with elasticities `w` at time 0.
pub fn approx_implied_vol(
    spec: &CapletSpec,
    initial: &InitialCurve,
    tenor: &TenorStructure,
    vol: &VolatilitySpec,
    scheme: InterpolationScheme,
) -> Result<f64> {
    approx_implied_vol_with(
        spec,
        initial,
        tenor,
        vol,
        scheme,
        ApproxHorizon::CapletStart,
    )
}

pub fn approx_implied_vol_with(
    spec: &CapletSpec,
    initial: &InitialCurve,
    tenor: &TenorStructure,
    vol: &VolatilitySpec,
    scheme: InterpolationScheme,
    horizon: ApproxHorizon,
) -> Result<f64> {
    spec.validate(tenor)?;
    let state = ModelState::initial(tenor, initial)?;
    let t = spec.start;
    let weights = libor_elasticities(&state, scheme, vol, t)?;
    let limit = |i: usize| match horizon {
        ApproxHorizon::CapletStart => tenor.date(i).min(t),
        ApproxHorizon::RateFixing => tenor.date(i),
    };
    let mut total = 0.0;
    for &(i, wi) in &weights {
        for &(j, wj) in &weights {
            let upper = limit(i).min(limit(j));
            total += wi * wj * vol.integrated_cov(tenor.date(i), tenor.date(j), 0.0, upper)?;
        }
    }
    if !(total >= 0.0) {
        return Err(Error::Numerical(format!(
            "negative approximate variance {total}"
        )));
    }
    Ok((total / t).sqrt())
}

/// Time-0 inputs shared by the Black formula for a caplet: the interpolated
/// forward `L(0,T)` and the discount factor `B(0, T + delta)`.
pub fn caplet_forward_and_discount(
    spec: &CapletSpec,
    initial: &InitialCurve,
    tenor: &TenorStructure,
    vol: &VolatilitySpec,
    scheme: InterpolationScheme,
) -> Result<(f64, f64)> {
    spec.validate(tenor)?;
    let state = ModelState::initial(tenor, initial)?;
    let ip = Interpolator::new(scheme, vol);
    Ok((
        ip.interpolated_libor(&state, spec.start)?,
        ip.zcb(&state, spec.payment_date())?,
    ))
}

/// Black price at the approximate implied volatility, per unit notional.
pub fn approx_caplet_price(
    spec: &CapletSpec,
    initial: &InitialCurve,
    tenor: &TenorStructure,
    vol: &VolatilitySpec,
    scheme: InterpolationScheme,
) -> Result<f64> {
    let (f, p) = caplet_forward_and_discount(spec, initial, tenor, vol, scheme)?;
    let sigma = approx_implied_vol(spec, initial, tenor, vol, scheme)?;
    black_caplet(f, spec.strike, sigma * spec.start.sqrt(), p, spec.accrual)
}

/// Deflated caplet payoff per unit notional from snapshots at `T` and `T + delta`.
fn deflated_payoff(
    ip: &Interpolator<'_>,
    spec: &CapletSpec,
    measure: MeasureTag,
    at_start: &ModelState,
    at_payment: &ModelState,
) -> Result<f64> {
    let l = ip.interpolated_libor(at_start, spec.start)?;
    let payoff = spec.accrual * (l - spec.strike).max(0.0);
    match measure {
        MeasureTag::SpotRolling => Ok(payoff / ip.rolling_numeraire(at_payment)?),
        MeasureTag::Forward(j) => {
            let tenor = at_payment.tenor();
            Ok(payoff / ip.zcb(at_payment, tenor.date(j))?)
        }
    }
}

fn numeraire_at_zero(
    ip: &Interpolator<'_>,
    initial: &ModelState,
    measure: MeasureTag,
) -> Result<f64> {
    match measure {
        MeasureTag::SpotRolling => Ok(1.0),
        MeasureTag::Forward(j) => ip.zcb(initial, initial.tenor().date(j)),
    }
}

fn check_measure_for(spec: &CapletSpec, tenor: &TenorStructure, measure: MeasureTag) -> Result<()> {
    if let MeasureTag::Forward(j) = measure {
        if tenor.date(j) < spec.payment_date() - TENOR_DATE_TOL {
            return Err(Error::Config(format!(
                "forward measure T_{j} = {} ends before the payment date {}",
                tenor.date(j),
                spec.payment_date()
            )));
        }
    }
    Ok(())
}

/// Monte Carlo price per unit notional of a caplet, simulating to `T` and
/// `T + delta` and deflating by the measure's numeraire.
pub fn price_caplet_mc(
    spec: &CapletSpec,
    initial: &InitialCurve,
    tenor: &TenorStructure,
    vol: &VolatilitySpec,
    scheme: InterpolationScheme,
    mc: &MCConfig,
) -> Result<MCEstimate> {
    let mut out =
        price_caplet_strip_mc(std::slice::from_ref(spec), initial, tenor, vol, scheme, mc)?;
    Ok(out.remove(0))
}

/// Prices several caplets off one set of simulated paths.
pub fn price_caplet_strip_mc(
    specs: &[CapletSpec],
    initial: &InitialCurve,
    tenor: &TenorStructure,
    vol: &VolatilitySpec,
    scheme: InterpolationScheme,
    mc: &MCConfig,
) -> Result<Vec<MCEstimate>> {
    if specs.is_empty() {
        return Err(Error::Config("no caplets to price".into()));
    }
    let mut times = Vec::with_capacity(2 * specs.len());
    for s in specs {
        s.validate(tenor)?;
        check_measure_for(s, tenor, mc.measure)?;
        times.push(s.start);
        times.push(s.payment_date());
    }
    let horizon = times.iter().copied().fold(f64::MIN, f64::max);
    let ip = Interpolator::new(scheme, vol);
    let state0 = ModelState::initial(tenor, initial)?;
    let n0 = numeraire_at_zero(&ip, &state0, mc.measure)?;

    let mut sorted = times.clone();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup_by(|a, b| (*a - *b).abs() <= TENOR_DATE_TOL);
    let slot = |t: f64| {
        sorted
            .iter()
            .position(|&s| (s - t).abs() <= TENOR_DATE_TOL)
            .expect("observation time registered")
    };
    let slots: Vec<(usize, usize)> = specs
        .iter()
        .map(|s| (slot(s.start), slot(s.payment_date())))
        .collect();

    let samples = simulate_paths(initial, tenor, vol, mc, horizon, &sorted, |_, snaps| {
        slots
            .iter()
            .zip(specs)
            .map(|(&(a, b), spec)| {
                Ok(spec.notional
                    * n0
                    * deflated_payoff(&ip, spec, mc.measure, &snaps[a], &snaps[b])?)
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    (0..specs.len())
        .map(|c| {
            let column: Vec<f64> = samples.iter().map(|row| row[c]).collect();
            estimate(&column, mc.antithetic)
        })
        .collect()
}

/// Implied volatilities of a Monte Carlo price and of its `k` standard error band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpliedBand {
    pub mid: f64,
    pub lo: f64,
    pub hi: f64,
}

pub fn implied_band(
    est: &MCEstimate,
    k: f64,
    forward: f64,
    strike: f64,
    maturity: f64,
    discount: f64,
    accrual: f64,
) -> Result<ImpliedBand> {
    let upper = discount * accrual * forward;
    let inv = |p: f64| {
        let p = p.min(upper * (1.0 - 1e-15));
        match implied_vol(p, forward, strike, maturity, discount, accrual) {
            Err(Error::OutOfBounds {
                bound: Bound::Lower,
                ..
            }) => Ok(0.0),
            other => other,
        }
    };
    let (lo, hi) = est.band(k);
    Ok(ImpliedBand {
        mid: implied_vol(est.mean, forward, strike, maturity, discount, accrual)?,
        lo: inv(lo)?,
        hi: inv(hi)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{build_initial_curve, CurveScenario};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn quarterly(h: f64) -> TenorStructure {
        TenorStructure::with_horizon(0.25, h).unwrap()
    }

    /// E[(F e^{vZ - v^2/2} - K)^+] by composite Simpson on the normal density.
    fn lognormal_call_by_quadrature(f: f64, k: f64, v: f64) -> f64 {
        let n = 40_000;
        let z0 = ((k / f).ln() + 0.5 * v * v) / v;
        let (a, b) = (z0, 12.0);
        let h = (b - a) / n as f64;
        let g = |z: f64| {
            let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
            (f * (v * z - 0.5 * v * v).exp() - k).max(0.0) * pdf
        };
        let mut acc = g(a) + g(b);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(a + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn black_examples() {
        let p = black_caplet(0.06, 0.05, 0.0, 0.97, 0.25).unwrap();
        assert_relative_eq!(p, 0.002425, max_relative = 1e-12);
        let v: f64 = 0.2;
        let atm = black_caplet(0.05, 0.05, v, 0.9, 0.25).unwrap();
        assert_relative_eq!(
            atm,
            0.9 * 0.25 * 0.05 * (2.0 * norm_cdf(v / 2.0) - 1.0),
            max_relative = 1e-12
        );
        let p = black_caplet(0.05, 0.0625, 0.3, 1.0, 0.25).unwrap();
        let q = 0.25 * lognormal_call_by_quadrature(0.05, 0.0625, 0.3);
        assert!((p - q).abs() < 1e-10, "{p} {q}");
        assert!(black_caplet(-0.01, 0.05, 0.2, 1.0, 0.25).is_err());
        assert!(black_caplet(0.05, 0.05, -0.2, 1.0, 0.25).is_err());
        assert!(black_caplet(0.05, 0.05, 0.2, 1.5, 0.25).is_err());
    }

    #[test]
    fn implied_vol_round_trip_and_bounds() {
        let p = black_caplet(0.05, 0.0625, 0.3, 0.95, 0.25).unwrap();
        let s = implied_vol(p, 0.05, 0.0625, 1.0, 0.95, 0.25).unwrap();
        assert!((s - 0.3).abs() < 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..200 {
            let f = rng.gen_range(0.01..0.1);
            let k = f * rng.gen_range(0.5..2.0);
            let t = rng.gen_range(0.1..5.0);
            let sig = rng.gen_range(0.05..0.8);
            let p = black_caplet(f, k, sig * f64::sqrt(t), 0.9, 0.25).unwrap();
            let intrinsic = black_caplet(f, k, 0.0, 0.9, 0.25).unwrap();
            if p - intrinsic > 1e-9 {
                let got = implied_vol(p, f, k, t, 0.9, 0.25).unwrap();
                assert!((got - sig).abs() < 1e-8, "{f} {k} {t} {sig} {p} {got}");
            }
        }
        let intrinsic = black_caplet(0.06, 0.05, 0.0, 1.0, 0.25).unwrap();
        assert_eq!(
            implied_vol(intrinsic, 0.06, 0.05, 1.0, 1.0, 0.25).unwrap(),
            0.0
        );
        let s = implied_vol(intrinsic + 1e-14, 0.06, 0.05, 1.0, 1.0, 0.25).unwrap();
        assert!(s < 0.05);
        match implied_vol(intrinsic * 0.5, 0.06, 0.05, 1.0, 1.0, 0.25) {
            Err(Error::OutOfBounds {
                bound: Bound::Lower,
                ..
            }) => {}
            other => panic!("{other:?}"),
        }
        match implied_vol(0.25 * 0.06, 0.06, 0.05, 1.0, 1.0, 0.25) {
            Err(Error::OutOfBounds {
                bound: Bound::Upper,
                ..
            }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn black_decreasing_in_strike() {
        let mut last = f64::INFINITY;
        for i in 1..50 {
            let p = black_caplet(0.05, 0.002 * i as f64, 0.3, 0.97, 0.25).unwrap();
            assert!(p < last);
            last = p;
        }
    }

    #[test]
    fn elasticities_at_tenor_dates_collapse() {
        let ts = quarterly(3.0);
        let c = build_initial_curve(CurveScenario::Steep, &ts).unwrap();
        let s = ModelState::initial(&ts, &c).unwrap();
        for vol in [VolatilitySpec::lambda1(), VolatilitySpec::lambda2()] {
            for scheme in [
                InterpolationScheme::daycount(),
                InterpolationScheme::short_bond_vol(),
            ] {
                for j in 1..ts.n() {
                    assert_eq!(
                        libor_elasticities(&s, scheme, &vol, ts.date(j)).unwrap(),
                        vec![(j, 1.0)]
                    );
                    assert_eq!(
                        interp_libor_vol(&s, scheme, &vol, ts.date(j)).unwrap(),
                        vol.vol(0.0, ts.date(j)).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn analytic_elasticities_match_differences() {
        let ts = quarterly(3.0);
        let vol = VolatilitySpec::lambda2();
        let ip = Interpolator::new(InterpolationScheme::daycount(), &vol);
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        for _ in 0..20 {
            let libors = (0..ts.n()).map(|_| rng.gen_range(0.02..0.09)).collect();
            let s = ModelState::new(&ts, 0.0, libors).unwrap();
            let t = rng.gen_range(0.3..2.7);
            if ts.is_tenor_date(t) {
                continue;
            }
            let analytic =
                libor_elasticities(&s, InterpolationScheme::daycount(), &vol, t).unwrap();
            let value = ip.interpolated_libor(&s, t).unwrap();
            let fd = finite_difference_elasticities(&s, &ip, t, value).unwrap();
            for (i, w) in analytic {
                let (_, v) = fd.iter().find(|(j, _)| *j == i).unwrap();
                assert!(((w - v) / w).abs() < 1e-6, "{i}: {w} vs {v}");
            }
            // method 1 depends on no third rate
            assert!(fd
                .iter()
                .filter(|(i, _)| i.abs_diff(ts.eta(t).unwrap()) > 1)
                .all(|(_, w)| w.abs() < 1e-9));
        }
    }

    #[test]
    fn flat_inputs_give_flat_relative_vol() {
        let ts = quarterly(3.0);
        let vol = VolatilitySpec::lambda1();
        let s = ModelState::new(&ts, 0.0, vec![0.05; 12]).unwrap();
        for t in [0.3, 1.1, 2.6] {
            let v = interp_libor_vol(&s, InterpolationScheme::daycount(), &vol, t).unwrap();
            assert!((v[0] - 0.3).abs() < 1e-10);
        }
    }

    #[test]
    fn approximation_dips_inside_the_period() {
        let ts = quarterly(3.0);
        let vol = VolatilitySpec::lambda1();
        let c = InitialCurve::flat(0.05, &ts).unwrap();
        for scheme in [
            InterpolationScheme::daycount(),
            InterpolationScheme::short_bond_vol(),
        ] {
            let at = |t: f64| {
                approx_implied_vol(&CapletSpec::new(t, 0.25, 0.0625), &c, &ts, &vol, scheme)
                    .unwrap()
            };
            assert!((at(1.0) - 0.3).abs() < 1e-14);
            assert!((at(1.25) - 0.3).abs() < 1e-14);
            assert!(at(1.125) < 0.3 - 1e-4);
        }
        let m1 = approx_implied_vol(
            &CapletSpec::new(1.125, 0.25, 0.0625),
            &c,
            &ts,
            &vol,
            InterpolationScheme::daycount(),
        )
        .unwrap();
        let m2 = approx_implied_vol(
            &CapletSpec::new(1.125, 0.25, 0.0625),
            &c,
            &ts,
            &vol,
            InterpolationScheme::short_bond_vol(),
        )
        .unwrap();
        assert!(m2 > m1);
    }

    #[test]
    fn approximation_endpoints_are_exact() {
        let ts = quarterly(4.25);
        let c = build_initial_curve(CurveScenario::Steep, &ts).unwrap();
        for vol in [VolatilitySpec::lambda1(), VolatilitySpec::lambda2()] {
            for scheme in [
                InterpolationScheme::daycount(),
                InterpolationScheme::short_bond_vol(),
            ] {
                for j in 1..ts.n() {
                    let t = ts.date(j);
                    let got =
                        approx_implied_vol(&CapletSpec::new(t, 0.25, 0.05), &c, &ts, &vol, scheme)
                            .unwrap();
                    let expect = vol.lambda_bar(t, 0.0, t).unwrap() / t.sqrt();
                    assert!((got - expect).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn caplet_spec_validation() {
        let ts = quarterly(2.0);
        assert!(CapletSpec::new(1.0, 0.25, 0.05).validate(&ts).is_ok());
        assert!(CapletSpec::new(1.8, 0.25, 0.05).validate(&ts).is_err());
        assert!(CapletSpec::new(0.0, 0.25, 0.05).validate(&ts).is_err());
        assert!(CapletSpec::new(1.0, 0.5, 0.05).validate(&ts).is_err());
        assert!(CapletSpec::new(1.0, 0.25, 0.0).validate(&ts).is_err());
    }

    #[test]
    fn zero_vol_mc_price_is_discounted_intrinsic() {
        let ts = quarterly(2.0);
        let c = build_initial_curve(
            CurveScenario::Hump,
            &TenorStructure::with_horizon(0.25, 10.0).unwrap(),
        )
        .unwrap();
        let c = InitialCurve::new(c.libors()[..8].to_vec()).unwrap();
        let vol = VolatilitySpec::zero();
        for scheme in [
            InterpolationScheme::daycount(),
            InterpolationScheme::short_bond_vol(),
        ] {
            for t in [1.0, 0.6] {
                let spec = CapletSpec::new(t, 0.25, 0.04);
                let est =
                    price_caplet_mc(&spec, &c, &ts, &vol, scheme, &MCConfig::new(4, 1)).unwrap();
                let (f, p) = caplet_forward_and_discount(&spec, &c, &ts, &vol, scheme).unwrap();
                let intrinsic = p * 0.25 * (f - 0.04).max(0.0);
                assert!(
                    (est.mean - intrinsic).abs() < 1e-15,
                    "{} {intrinsic}",
                    est.mean
                );
                assert!(est.std_error < 1e-15);
            }
        }
    }

    #[test]
    fn broken_date_mc_prices_respect_bounds() {
        let ts = quarterly(2.0);
        let c = InitialCurve::flat(0.05, &ts).unwrap();
        let vol = VolatilitySpec::lambda2();
        for scheme in [
            InterpolationScheme::daycount(),
            InterpolationScheme::short_bond_vol(),
        ] {
            let spec = CapletSpec::new(0.875, 0.25, 0.055);
            let mut mc = MCConfig::new(4_000, 2);
            mc.antithetic = true;
            let est = price_caplet_mc(&spec, &c, &ts, &vol, scheme, &mc).unwrap();
            let (f, p) = caplet_forward_and_discount(&spec, &c, &ts, &vol, scheme).unwrap();
            assert!(est.mean > p * 0.25 * (f - 0.055).max(0.0));
            assert!(est.mean < p * 0.25 * f);
            let mut fwd = mc;
            fwd.measure = MeasureTag::Forward(8);
            let other = price_caplet_mc(&spec, &c, &ts, &vol, scheme, &fwd).unwrap();
            assert!((other.mean - est.mean).abs() < 3.0 * (other.std_error + est.std_error));
            fwd.measure = MeasureTag::Forward(4);
            assert!(price_caplet_mc(&spec, &c, &ts, &vol, scheme, &fwd).is_err());
        }
    }
}
