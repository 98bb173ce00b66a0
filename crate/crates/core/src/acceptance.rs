//! Acceptance checks with their tolerances. Each check returns a
//! [`CriterionResult`] rather than panicking so the suite can report every
//! line; the `acceptance` test target and the `check` CLI subcommand both
//! drive [`run_all`].
//!
//! The reference values here come from independent computations (Black
//! formula, Simpson quadrature, explicit drift matrices, exact lognormal
//! moments) and are not shared with the production code paths.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::curve::{build_initial_curve, CurveScenario, InitialCurve, ModelState};
use crate::error::{Error, Result};
use crate::interpolation::{
    ForwardMode, InterpolationScheme, Interpolator, LogLinearDiscount, Method, Side,
};
use crate::measure::{
    drift_under, gamma, radon_nikodym_increment, relative_drift, BrownianPath, DriftStencil,
    MeasureTag,
};
use crate::pricing::{
    approx_implied_vol, black_caplet, caplet_forward_and_discount, implied_band, price_caplet_mc,
    CapletSpec,
};
use crate::scenario::{
    dynamics_trace, impvol_strip, ttm_jump_times, ImpvolRow, RateKind, ScenarioConfig, TraceRow,
};
use crate::simulation::{estimate, simulate_paths, GaussianStream, MCConfig, MCEstimate};
use crate::tenor::{TenorStructure, TENOR_DATE_TOL};
use crate::vol::VolatilitySpec;

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    fn new(id: u8, name: &'static str, outcome: Result<(bool, String)>) -> Self {
        let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        Self {
            id,
            name,
            passed,
            detail,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} [{:>2}] {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AcceptanceOptions {
    pub seed: u64,
    /// Path count of every Monte Carlo criterion.
    pub paths: usize,
}

impl Default for AcceptanceOptions {
    fn default() -> Self {
        Self {
            seed: 42,
            paths: 100_000,
        }
    }
}

fn within(x: f64, target: f64, est: &MCEstimate, k: f64) -> bool {
    (x - target).abs() <= k * est.std_error
}

/// Flat 5% curve, flat 0.3 volatility, caplet fixing at one year struck at
/// 6.25%: the rate is exactly lognormal, so the Monte Carlo implied
/// volatility must recover 0.3. Runs on one thread.
pub fn tenor_date_caplet(opts: &AcceptanceOptions) -> CriterionResult {
    let run = || -> Result<(bool, String)> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(|e| Error::Numerical(e.to_string()))?;
        let tenor = TenorStructure::with_horizon(0.25, 2.0)?;
        let curve = InitialCurve::flat(0.05, &tenor)?;
        let vol = VolatilitySpec::Flat { level: 0.3 };
        let spec = CapletSpec::new(1.0, 0.25, 0.0625);
        let scheme = InterpolationScheme::daycount();
        let mc = MCConfig::new(opts.paths, opts.seed);
        let started = Instant::now();
        let est = pool.install(|| price_caplet_mc(&spec, &curve, &tenor, &vol, scheme, &mc))?;
        let elapsed = started.elapsed();
        let (f, p) = caplet_forward_and_discount(&spec, &curve, &tenor, &vol, scheme)?;
        let black = black_caplet(f, spec.strike, 0.3, p, spec.accrual)?;
        let band = implied_band(&est, 1.0, f, spec.strike, spec.start, p, spec.accrual)?;
        let se_vol = 0.5 * (band.hi - band.lo);
        let ok = (band.mid - 0.3).abs() <= 2.0 * se_vol
            && se_vol < 0.004
            && elapsed < Duration::from_secs(30);
        Ok((
            ok,
            format!(
                "implied {:.5} (SE {:.5}, need |diff| <= 2 SE and SE < 0.004); price {:.4e} vs Black {:.4e} ({:.2} SE); {:.2}s single-threaded (< 30s)",
                band.mid,
                se_vol,
                est.mean,
                black,
                (est.mean - black) / est.std_error,
                elapsed.as_secs_f64()
            ),
        ))
    };
    CriterionResult::new(1, "tenor-date caplet exactness", run())
}

/// At tenor dates the approximation must reduce to the root mean square
/// volatility of the single LIBOR involved.
pub fn endpoint_collapse() -> CriterionResult {
    let run = || -> Result<(bool, String)> {
        let tenor = TenorStructure::with_horizon(0.25, 4.25)?;
        let curve = build_initial_curve(CurveScenario::Steep, &tenor)?;
        let mut worst: f64 = 0.0;
        for vol in [VolatilitySpec::lambda1(), VolatilitySpec::lambda2()] {
            for method in [Method::DaycountFractions, Method::ShortBondVolatility] {
                let scheme = InterpolationScheme::from_method(method);
                for i in 1..tenor.n() {
                    let t = tenor.date(i);
                    let spec = CapletSpec::new(t, 0.25, 0.05);
                    let got = approx_implied_vol(&spec, &curve, &tenor, &vol, scheme)?;
                    let var: f64 = simpson(
                        |s| {
                            vol.vol(s, t)
                                .map(|v| v.iter().map(|x| x * x).sum())
                                .unwrap_or(f64::NAN)
                        },
                        0.0,
                        t,
                        2000,
                    );
                    let expect = (var / t).sqrt();
                    worst = worst.max((got - expect).abs());
                }
            }
        }
        Ok((
            worst <= 1e-12,
            format!("max |approx - lambda_bar/sqrt(T)| = {worst:.2e} (<= 1e-12)"),
        ))
    };
    CriterionResult::new(2, "endpoint collapse of the approximation", run())
}

/// Composite Simpson rule with `n` (even) subintervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Shared Monte Carlo strips for the broken-date criteria.
pub struct BrokenDateStrips {
    pub method1: Vec<ImpvolRow>,
    pub method2: Vec<ImpvolRow>,
    pub method1_runtime: Duration,
}

pub fn broken_date_strips(opts: &AcceptanceOptions) -> Result<BrokenDateStrips> {
    let mut cfg = ScenarioConfig::figure(6)?;
    cfg.n_paths = opts.paths;
    cfg.seed = opts.seed;
    cfg.impvol_points = 9;
    let started = Instant::now();
    let method1 = impvol_strip(&cfg, Method::DaycountFractions, 3.0)?;
    let method1_runtime = started.elapsed();
    let method2 = impvol_strip(&cfg, Method::ShortBondVolatility, 3.0)?;
    Ok(BrokenDateStrips {
        method1,
        method2,
        method1_runtime,
    })
}

pub fn broken_date_accuracy(strips: &Result<BrokenDateStrips>) -> CriterionResult {
    let run = || -> Result<(bool, String)> {
        let s = strips
            .as_ref()
            .map_err(|e| Error::Numerical(e.to_string()))?;
        let interior = &s.method1[1..s.method1.len() - 1];
        let inside = interior
            .iter()
            .filter(|r| r.approx_implied >= r.mc_lo && r.approx_implied <= r.mc_hi)
            .count();
        let worst = interior
            .iter()
            .map(|r| {
                let se = (r.mc_hi - r.mc_lo) / 6.0;
                (r.approx_implied - r.mc_implied).abs() / se
            })
            .fold(0.0, f64::max);
        let ok = inside >= 8 && s.method1_runtime < Duration::from_secs(600);
        Ok((
            ok,
            format!(
                "{inside}/{} interior points inside the 3 SE band (need >= 8), worst {worst:.2} SE; {:.1}s (< 600s)",
                interior.len(),
                s.method1_runtime.as_secs_f64()
            ),
        ))
    };
    CriterionResult::new(3, "broken-date approximation accuracy", run())
}

pub fn implied_vol_dip(strips: &Result<BrokenDateStrips>) -> CriterionResult {
    let run = || -> Result<(bool, String)> {
        let s = strips
            .as_ref()
            .map_err(|e| Error::Numerical(e.to_string()))?;
        let dip = |rows: &[ImpvolRow]| {
            let (a, b) = (rows[0].mc_implied, rows[rows.len() - 1].mc_implied);
            let mid = rows[rows.len() / 2].mc_implied;
            (mid < a && mid < b, 0.5 * (a + b) - mid, mid)
        };
        let (below1, depth1, mid1) = dip(&s.method1);
        let (below2, depth2, mid2) = dip(&s.method2);
        let ok = below1 && below2 && depth2 < depth1;
        Ok((
            ok,
            format!(
                "mid-period vol {mid1:.4} (method 1, depth {depth1:.4}) and {mid2:.4} (method 2, depth {depth2:.4}); need both below endpoints and method-2 depth smaller"
            ),
        ))
    };
    CriterionResult::new(4, "implied volatility dip", run())
}

/// Forward bond prices `B(t, T_j) / B(t, T_N)` under the terminal measure and
/// spot-deflated broken-date bonds under the rolling measure.
pub fn martingale_suite(opts: &AcceptanceOptions) -> CriterionResult {
    let run = || -> Result<(bool, String)> {
        let tenor = TenorStructure::with_horizon(0.25, 2.0)?;
        let curve = build_initial_curve(CurveScenario::Hump, &tenor)?;
        let vol = VolatilitySpec::lambda2();
        let n = tenor.n();
        let s0 = ModelState::initial(&tenor, &curve)?;
        let t = 1.0;
        let live: Vec<usize> = (tenor.eta(t + TENOR_DATE_TOL)? - 1..n).collect();
        let fwd_bond = |s: &ModelState, j: usize| -> Result<f64> {
            Ok(s.discrete_bond(j)? / s.discrete_bond(n)?)
        };
        let mut mc = MCConfig::new(opts.paths, opts.seed);
        mc.measure = MeasureTag::Forward(n);
        let rows = simulate_paths(&curve, &tenor, &vol, &mc, t, &[t], |_, snaps| {
            live.iter()
                .map(|&j| fwd_bond(&snaps[0], j))
                .collect::<Result<Vec<_>>>()
        })?;
        let mut worst: f64 = 0.0;
        let mut ok = true;
        for (c, &j) in live.iter().enumerate() {
            let col: Vec<f64> = rows.iter().map(|r| r[c]).collect();
            let est = estimate(&col, false)?;
            let target = s0.discrete_bond(j)? / s0.discrete_bond(n)?;
            ok &= within(est.mean, target, &est, 3.0);
            worst = worst.max((est.mean - target).abs() / est.std_error);
        }

        let t = 0.9;
        let bonds = [1.1, 1.3875, 1.8];
        let methods = [
            InterpolationScheme::daycount(),
            InterpolationScheme::short_bond_vol(),
        ];
        let mut mc = MCConfig::new(opts.paths, opts.seed.wrapping_add(1));
        mc.measure = MeasureTag::SpotRolling;
        let rows = simulate_paths(&curve, &tenor, &vol, &mc, t, &[t], |_, snaps| {
            let s = &snaps[0];
            let mut out = Vec::new();
            for scheme in methods {
                let ip = Interpolator::new(scheme, &vol);
                let num = ip.rolling_numeraire(s)?;
                for &t2 in &bonds {
                    out.push(ip.zcb(s, t2)? / num);
                }
            }
            Ok(out)
        })?;
        let mut c = 0;
        let mut worst_spot: f64 = 0.0;
        for scheme in methods {
            let ip = Interpolator::new(scheme, &vol);
            for &t2 in &bonds {
                let col: Vec<f64> = rows.iter().map(|r| r[c]).collect();
                let est = estimate(&col, false)?;
                let target = ip.zcb(&s0, t2)?;
                ok &= within(est.mean, target, &est, 3.0);
                worst_spot = worst_spot.max((est.mean - target).abs() / est.std_error);
                c += 1;
            }
        }
        Ok((
            ok,
            format!(
                "forward bonds under P_T{n}: worst {worst:.2} SE over {} maturities; deflated broken-date bonds: worst {worst_spot:.2} SE over 6 (need <= 3)",
                live.len()
            ),
        ))
    };
    CriterionResult::new(5, "martingale suite", run())
}

pub fn numeraire_identity(opts: &AcceptanceOptions) -> CriterionResult {
    let run = || -> Result<(bool, String)> {
        let tenor = TenorStructure::with_horizon(0.25, 3.0)?;
        let curve = build_initial_curve(CurveScenario::Kinked, &tenor)?;
        let vol = VolatilitySpec::lambda2();
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let horizon = tenor.date(tenor.n() - 1);
        let mut times: Vec<f64> = (0..10).map(|_| rng.gen_range(0.0..horizon)).collect();
        times.sort_by(f64::total_cmp);
        let mc = MCConfig::new(100, opts.seed);
        let ip = Interpolator::new(InterpolationScheme::daycount(), &vol);
        let diffs = simulate_paths(&curve, &tenor, &vol, &mc, horizon, &times, |_, snaps| {
            snaps
                .iter()
                .map(|s| {
                    Ok(
                        (ip.savings_account(s.fixings(), s.time())? - ip.rolling_numeraire(s)?)
                            .abs(),
                    )
                })
                .collect::<Result<Vec<f64>>>()
        })?;
        let count: usize = diffs.iter().map(Vec::len).sum();
        let worst = diffs.iter().flatten().copied().fold(0.0, f64::max);
        Ok((
            worst <= 1e-12 && count == 1000,
            format!(
                "max |savings - rolling| = {worst:.2e} over {count} path/time pairs (<= 1e-12)"
            ),
        ))
    };
    CriterionResult::new(6, "numeraire identity", run())
}

pub fn stub_identity(opts: &AcceptanceOptions) -> CriterionResult {
    let run = || -> Result<(bool, String)> {
        let tenor = TenorStructure::with_horizon(0.25, 5.0)?;
        let vol = VolatilitySpec::lambda1();
        let ip = Interpolator::new(InterpolationScheme::daycount(), &vol);
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let (mut worst_closed, mut worst_quad): (f64, f64) = (0.0, 0.0);
        for _ in 0..100 {
            let fix = rng.gen_range(0.001..0.25);
            let i = rng.gen_range(1..tenor.n());
            let (a, b) = (tenor.date(i - 1), tenor.date(i));
            let closed = crate::interpolation::daycount_short_rate_integral(fix, b, a, b);
            let exact = (1.0 + tenor.delta() * fix).ln();
            worst_closed = worst_closed.max((closed - exact).abs());
            // short rate over the period as seen from its start, where it is
            // already fully determined by the fixing
            let libors = vec![fix; tenor.n()];
            let s = ModelState::new(&tenor, a, libors)?;
            let r = |u: f64| {
                if u <= a {
                    ip.instantaneous_forward_limit(&s, a, Side::Right, ForwardMode::Analytic)
                } else if u >= b {
                    ip.instantaneous_forward_limit(&s, b, Side::Left, ForwardMode::Analytic)
                } else {
                    ip.instantaneous_forward(&s, u, ForwardMode::Analytic)
                }
                .unwrap_or(f64::NAN)
            };
            worst_quad = worst_quad.max((simpson(r, a, b, 400) - closed).abs());
        }
        Ok((
            worst_closed <= 1e-12 && worst_quad <= 1e-12,
            format!("closed form vs ln(1 + delta L): {worst_closed:.2e}; vs Simpson of the short rate: {worst_quad:.2e} (<= 1e-12)"),
        ))
    };
    CriterionResult::new(7, "short-rate stub identity", run())
}

pub fn baseline_libors() -> CriterionResult {
    let run = || -> Result<(bool, String)> {
        let tenor = TenorStructure::with_horizon(0.25, 10.0)?;
        let curve = build_initial_curve(CurveScenario::Kinked, &tenor)?;
        let vol = VolatilitySpec::lambda1();
        let s0 = ModelState::initial(&tenor, &curve)?;
        let ip = Interpolator::new(InterpolationScheme::daycount(), &vol);
        let mut worst: f64 = 0.0;
        for i in 0..200 {
            let t = 4.0 + 2.0 * i as f64 / 199.0;
            let a = ip.interpolated_libor(&s0, t)?;
            let b = LogLinearDiscount.libor(&curve, &tenor, t)?;
            worst = worst.max((a - b).abs());
        }
        Ok((
            worst < 2e-4,
            format!("max |method 1 - baseline| = {:.3} bp (< 2 bp)", worst * 1e4),
        ))
    };
    CriterionResult::new(8, "method 1 vs loglinear baseline LIBORs", run())
}

/// Drift from explicit matrices: `-Psi l` for rates before the numeraire
/// bond and `+Psi' l` from it on, `Psi_hk = L_h lambda_h . lambda_k`,
/// `l_k = delta L_k / (1 + delta L_k)`.
fn literal_matrix_drift(
    j: usize,
    lo: usize,
    libors: &[f64],
    lams: &[Vec<f64>],
    delta: f64,
) -> Vec<f64> {
    let n = libors.len();
    let m = n - lo;
    let ell: Vec<f64> = (lo..n)
        .map(|k| delta * libors[k] / (1.0 + delta * libors[k]))
        .collect();
    let mut psi = vec![vec![0.0; m]; m];
    let mut psi_near = vec![vec![0.0; m]; m];
    for h in lo..n {
        for k in lo..n {
            let entry = libors[h]
                * lams[h - lo]
                    .iter()
                    .zip(&lams[k - lo])
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
            if k > h && k < j {
                psi[h - lo][k - lo] = entry;
            }
            if k >= j && k <= h {
                psi_near[h - lo][k - lo] = entry;
            }
        }
    }
    let mut out = vec![0.0; n];
    for r in 0..m {
        let far: f64 = (0..m).map(|c| psi[r][c] * ell[c]).sum();
        let near: f64 = (0..m).map(|c| psi_near[r][c] * ell[c]).sum();
        out[r + lo] = near - far;
    }
    out
}

/// Simulates `L_k` exactly under `P_{T_{k+1}}` (it is driftless there) and
/// returns per-path `L_k(T_k)` with its discretised density to `P_{T_k}`.
fn reweighted_samples(
    k: usize,
    l0: f64,
    tenor: &TenorStructure,
    vol: &VolatilitySpec,
    steps: usize,
    paths: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let tk = tenor.date(k);
    let d = vol.dim();
    let times: Vec<f64> = (0..=steps).map(|i| tk * i as f64 / steps as f64).collect();
    (0..paths)
        .into_par_iter()
        .map(|p| {
            let mut g = GaussianStream::for_path(seed, p, false);
            let mut path = BrownianPath {
                times: times.clone(),
                libors: vec![l0],
                dw: Vec::with_capacity(steps),
            };
            let mut l = l0;
            let mut load = vec![0.0; d];
            for w in times.windows(2) {
                let dt = w[1] - w[0];
                vol.step_loading(w[0], w[1], tk, &mut load);
                let dw: Vec<f64> = (0..d).map(|_| g.next() * dt.sqrt()).collect();
                let var: f64 = load.iter().map(|x| x * x).sum::<f64>() * dt;
                let shock: f64 = load.iter().zip(&dw).map(|(a, b)| a * b).sum();
                l *= (shock - 0.5 * var).exp();
                path.libors.push(l);
                path.dw.push(dw);
            }
            let rn = radon_nikodym_increment(0.0, tk, k, tenor, &path, vol)?;
            Ok(l * rn)
        })
        .collect()
}

pub fn drift_machinery(opts: &AcceptanceOptions) -> CriterionResult {
    let run = || -> Result<(bool, String)> {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let delta = 0.25;
        let mut worst_matrix: f64 = 0.0;
        for _ in 0..500 {
            let n: usize = rng.gen_range(2..=8);
            let lo = rng.gen_range(n.saturating_sub(5)..n);
            let d = rng.gen_range(1..=3);
            let libors: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..0.12)).collect();
            let lams: Vec<Vec<f64>> = (lo..n)
                .map(|_| (0..d).map(|_| rng.gen_range(-0.5..0.5)).collect())
                .collect();
            let flat: Vec<f64> = lams.iter().flatten().copied().collect();
            for j in lo.max(1)..=n {
                let mut rel = vec![0.0; n - lo];
                let mut acc = vec![0.0; d];
                relative_drift(j, lo, &libors, delta, &flat, d, &mut rel, &mut acc);
                let lit = literal_matrix_drift(j, lo, &libors, &lams, delta);
                for h in lo..n {
                    worst_matrix = worst_matrix.max((libors[h] * rel[h - lo] - lit[h]).abs());
                }
            }
        }

        let tenor = TenorStructure::with_horizon(0.25, 3.0)?;
        let vol = VolatilitySpec::lambda2();
        let mut worst_tele: f64 = 0.0;
        for _ in 0..100 {
            let t = rng.gen_range(0.0..2.7);
            let libors = (0..tenor.n()).map(|_| rng.gen_range(0.01..0.1)).collect();
            let s = ModelState::new(&tenor, t, libors)?;
            let lo = tenor.period_starting_at(t);
            for j in lo..tenor.n() {
                let a = drift_under(
                    MeasureTag::Forward(j + 1),
                    &s,
                    &vol,
                    &DriftStencil::at(MeasureTag::Forward(j + 1), &tenor, t)?,
                )?;
                let b = drift_under(
                    MeasureTag::Forward(j),
                    &s,
                    &vol,
                    &DriftStencil::at(MeasureTag::Forward(j), &tenor, t)?,
                )?;
                let gj = gamma(&s, j, &vol)?;
                for h in lo..tenor.n() {
                    let lam = vol.vol(t, tenor.date(h))?;
                    let expect =
                        -s.libors()[h] * lam.iter().zip(&gj).map(|(x, y)| x * y).sum::<f64>();
                    worst_tele = worst_tele.max((a[h] - b[h] - expect).abs());
                }
            }
        }

        // E_{T_k}[L_k(T_k)] three ways: reweighted from P_{T_{k+1}}, simulated
        // directly under P_{T_k}, and the exact lognormal moment L0 * CF.
        let tenor = TenorStructure::with_horizon(0.25, 2.0)?;
        let curve = build_initial_curve(CurveScenario::Hump, &tenor)?;
        let k = 6;
        let tk = tenor.date(k);
        let l0 = curve.libors()[k];
        let var = vol.integrated_var(tk, 0.0, tk)?;
        let exact = l0 * crate::interpolation::correction_factor(l0, delta, var);
        let rw = estimate(
            &reweighted_samples(k, l0, &tenor, &vol, 24, opts.paths, opts.seed)?,
            false,
        )?;
        let mut mc = MCConfig::new(opts.paths, opts.seed.wrapping_add(7));
        mc.measure = MeasureTag::Forward(k);
        let direct = simulate_paths(&curve, &tenor, &vol, &mc, tk, &[tk], |_, snaps| {
            snaps[0].libor(k)
        })?;
        let direct = estimate(&direct, false)?;
        let joint_se = rw.std_error.hypot(direct.std_error);
        let rn_ok = (rw.mean - direct.mean).abs() <= 3.0 * joint_se
            && within(rw.mean, exact, &rw, 3.0)
            && within(direct.mean, exact, &direct, 3.0);

        let ok = worst_matrix <= 1e-14 && worst_tele <= 1e-14 && rn_ok;
        Ok((
            ok,
            format!(
                "matrix vs prefix sums {worst_matrix:.1e}, telescoping {worst_tele:.1e} (<= 1e-14); reweighted {:.6e}, direct {:.6e}, L0*CF {exact:.6e} ({:.2} joint SE, need <= 3)",
                rw.mean,
                direct.mean,
                (rw.mean - direct.mean).abs() / joint_se
            ),
        ))
    };
    CriterionResult::new(9, "drift machinery", run())
}

fn rows_of(trace: &[TraceRow], kind: RateKind) -> Vec<TraceRow> {
    trace.iter().copied().filter(|r| r.kind == kind).collect()
}

pub fn dynamics_checks(opts: &AcceptanceOptions) -> CriterionResult {
    let run = || -> Result<(bool, String)> {
        let mut cfg = ScenarioConfig::figure(4)?;
        cfg.seed = opts.seed;
        let tenor = cfg.tenor()?;
        let trace = dynamics_trace(&cfg, Method::DaycountFractions)?;
        let delta = tenor.delta();

        // short rate: within each period it must follow F / (1 + (T_k - t) F)
        // with F the period's fixing, recovered from the value at its start
        let short = rows_of(&trace, RateKind::ShortRate);
        let mut fixing = None;
        let mut worst_det: f64 = 0.0;
        let mut jumps = 0;
        let mut prev_left = None;
        for r in &short {
            match r.side {
                Some(Side::Left) => prev_left = Some(r.value),
                _ => {
                    if r.side.is_none()
                        && r.time > tenor.t0() + TENOR_DATE_TOL
                        && tenor.is_tenor_date(r.time)
                    {
                        return Err(Error::Numerical(
                            "tenor date without one-sided short rates".into(),
                        ));
                    }
                    if tenor.is_tenor_date(r.time) {
                        fixing = Some(r.value / (1.0 - delta * r.value));
                        if let Some(left) = prev_left.take() {
                            if (left - r.value).abs() > 1e-9 {
                                jumps += 1;
                            }
                        }
                    }
                    let f = fixing.ok_or_else(|| {
                        Error::Numerical("trace does not start at a tenor date".into())
                    })?;
                    let end = tenor.date(tenor.period_starting_at(r.time));
                    worst_det = worst_det.max((r.value - f / (1.0 + (end - r.time) * f)).abs());
                }
            }
        }
        let short_ok = worst_det <= 1e-12 && jumps > 0;

        // fixed maturity: steps across tenor dates look like ordinary steps
        let fm = rows_of(&trace, RateKind::FixedMaturity);
        let mut inside = Vec::new();
        let mut across = Vec::new();
        for w in fm.windows(2) {
            let dv = (w[1].value - w[0].value).abs();
            let crosses = tenor.is_tenor_date(w[1].time)
                || tenor.eta(w[0].time + TENOR_DATE_TOL)?
                    != tenor.eta(w[1].time + TENOR_DATE_TOL)?;
            if crosses {
                across.push(dv)
            } else {
                inside.push(dv)
            }
        }
        let rms = (inside.iter().map(|x| x * x).sum::<f64>() / inside.len() as f64).sqrt();
        let max_across = across.iter().copied().fold(0.0, f64::max);
        let fm_ok = !across.is_empty() && max_across <= 5.0 * rms;

        // fixed time to maturity: one-sided rows exactly at the crossings
        let ttm = cfg
            .fixed_ttm
            .ok_or_else(|| Error::Config("figure 4 has a fixed TTM".into()))?;
        let end = tenor.date(tenor.n() - 1);
        let expected = ttm_jump_times(&tenor, ttm, end);
        let tt = rows_of(&trace, RateKind::FixedTtm);
        let lefts: Vec<&TraceRow> = tt.iter().filter(|r| r.side == Some(Side::Left)).collect();
        let rights: Vec<&TraceRow> = tt.iter().filter(|r| r.side == Some(Side::Right)).collect();
        let times_ok = lefts.len() == expected.len()
            && rights.len() == expected.len()
            && lefts
                .iter()
                .zip(&expected)
                .all(|(r, t)| (r.time - t).abs() <= TENOR_DATE_TOL);
        let min_jump = lefts
            .iter()
            .zip(&rights)
            .map(|(l, r)| (r.value - l.value).abs())
            .fold(f64::INFINITY, f64::min);
        let ttm_ok = times_ok && min_jump > 1e-9;

        Ok((
            short_ok && fm_ok && ttm_ok,
            format!(
                "short rate off deterministic path by {worst_det:.1e}, {jumps} tenor-date jumps; fixed maturity max step across tenor dates {:.2} x RMS step (<= 5); fixed TTM jumps at {} computed crossings: {} (smallest {min_jump:.2e})",
                max_across / rms,
                expected.len(),
                if times_ok { "matched" } else { "mismatched" }
            ),
        ))
    };
    CriterionResult::new(10, "dynamics qualitative checks", run())
}

pub fn run_all(opts: &AcceptanceOptions) -> Vec<CriterionResult> {
    let strips = broken_date_strips(opts);
    vec![
        tenor_date_caplet(opts),
        endpoint_collapse(),
        broken_date_accuracy(&strips),
        implied_vol_dip(&strips),
        martingale_suite(opts),
        numeraire_identity(opts),
        stub_identity(opts),
        baseline_libors(),
        drift_machinery(opts),
        dynamics_checks(opts),
    ]
}
