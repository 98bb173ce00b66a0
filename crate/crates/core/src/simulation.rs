//! Monte Carlo evolution of the discrete-tenor LIBOR vector.
//!
//! Rates are evolved in log space on a grid that contains every tenor date
//! and every requested observation time, so no step straddles a fixing.
//! Each path draws its normals from its own ChaCha stream keyed by
//! `(seed, path)`, which makes results independent of thread scheduling.

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::erf::erfc_inv;

use crate::curve::{InitialCurve, ModelState};
use crate::error::{Error, Result};
use crate::measure::{relative_drift, DriftStencil, MeasureTag};
use crate::tenor::{TenorStructure, TENOR_DATE_TOL};
use crate::vol::VolatilitySpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Discretization {
    LogEuler,
    /// Log-Euler with the drift averaged over the start state and an
    /// Euler-predicted end state.
    PredictorCorrector,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCConfig {
    pub n_paths: usize,
    /// Substeps per accrual period.
    pub steps_per_period: usize,
    pub scheme: Discretization,
    pub measure: MeasureTag,
    pub seed: u64,
    /// Pair path `2i + 1` with the negated normals of path `2i`.
    pub antithetic: bool,
}

impl MCConfig {
    pub fn new(n_paths: usize, seed: u64) -> Self {
        Self {
            n_paths,
            steps_per_period: 4,
            scheme: Discretization::LogEuler,
            measure: MeasureTag::SpotRolling,
            seed,
            antithetic: false,
        }
    }

    pub fn validate(&self, tenor: &TenorStructure) -> Result<()> {
        if self.n_paths < 2 {
            return Err(Error::Config(format!(
                "need at least 2 paths, got {}",
                self.n_paths
            )));
        }
        if self.antithetic && !self.n_paths.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "antithetic sampling needs an even path count, got {}",
                self.n_paths
            )));
        }
        if self.steps_per_period == 0 {
            return Err(Error::Config("steps_per_period must be at least 1".into()));
        }
        self.measure.validate(tenor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

impl MCEstimate {
    /// `mean -/+ k * std_error`.
    pub fn band(&self, k: f64) -> (f64, f64) {
        (
            self.mean - k * self.std_error,
            self.mean + k * self.std_error,
        )
    }

    pub fn contains(&self, x: f64, k: f64) -> bool {
        let (lo, hi) = self.band(k);
        lo <= x && x <= hi
    }
}

/// Pairwise (cascade) summation; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Sample mean and standard error. With `antithetic`, consecutive pairs are
/// averaged first and the error is computed from the pair means.
pub fn estimate(samples: &[f64], antithetic: bool) -> Result<MCEstimate> {
    let pooled: Vec<f64>;
    let units: &[f64] = if antithetic {
        if !samples.len().is_multiple_of(2) {
            return Err(Error::Config(
                "antithetic samples must come in pairs".into(),
            ));
        }
        pooled = samples.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect();
        &pooled
    } else {
        samples
    };
    if units.len() < 2 {
        return Err(Error::Config(format!(
            "need at least 2 independent samples, got {}",
            units.len()
        )));
    }
    let n = units.len() as f64;
    let mean = pairwise_sum(units) / n;
    let dev: Vec<f64> = units.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    if !(mean.is_finite() && var.is_finite()) {
        return Err(Error::Numerical("non-finite Monte Carlo samples".into()));
    }
    Ok(MCEstimate {
        mean,
        std_error: (var / n).sqrt(),
        n_paths: samples.len(),
    })
}

/// Standard normals by inverse CDF from a ChaCha stream.
#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: ChaCha8Rng,
    sign: f64,
}

impl GaussianStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, sign: 1.0 }
    }

    /// Stream for `path` under the config's antithetic pairing.
    pub fn for_path(seed: u64, path: usize, antithetic: bool) -> Self {
        if antithetic {
            let mut g = Self::new(seed, (path / 2) as u64);
            if path % 2 == 1 {
                g.sign = -1.0;
            }
            g
        } else {
            Self::new(seed, path as u64)
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> f64 {
        let u: f64 = self.rng.sample(Open01);
        -self.sign * std::f64::consts::SQRT_2 * erfc_inv(2.0 * u)
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        for z in out {
            *z = self.next();
        }
    }
}

#[derive(Debug, Clone)]
struct Step {
    s0: f64,
    s1: f64,
    dt: f64,
    sqrt_dt: f64,
    lo: usize,
    j: usize,
    /// `(h - lo) * d + f`
    loads: Vec<f64>,
    half_var: Vec<f64>,
    fixes: Option<usize>,
    observe: bool,
}

/// Scratch buffers for [`PathEvolver::step`].
#[derive(Debug, Clone)]
pub struct StepWorkspace {
    rel: Vec<f64>,
    rel_pred: Vec<f64>,
    acc: Vec<f64>,
    shock: Vec<f64>,
    predicted: Vec<f64>,
}

/// Precomputed time grid and step coefficients shared by all paths.
#[derive(Debug, Clone)]
pub struct PathEvolver {
    initial: ModelState,
    steps: Vec<Step>,
    scheme: Discretization,
    dim: usize,
    observe_initial: bool,
    observation_times: Vec<f64>,
}

fn snap(tenor: &TenorStructure, t: f64) -> f64 {
    tenor.index_of(t).map(|i| tenor.date(i)).unwrap_or(t)
}

impl PathEvolver {
    pub fn new(
        initial: &InitialCurve,
        tenor: &TenorStructure,
        vol: &VolatilitySpec,
        config: &MCConfig,
        horizon: f64,
        observation_times: &[f64],
    ) -> Result<Self> {
        config.validate(tenor)?;
        vol.validate()?;
        initial.check_tenor(tenor)?;
        let t0 = tenor.t0();
        if !(horizon >= t0) || horizon > tenor.end() + TENOR_DATE_TOL {
            return Err(Error::Domain(format!(
                "horizon {horizon} outside [{t0}, {}]",
                tenor.end()
            )));
        }
        let horizon = snap(tenor, horizon).min(tenor.end());
        let mut obs: Vec<f64> = Vec::with_capacity(observation_times.len());
        for &t in observation_times {
            if !(t >= t0 - TENOR_DATE_TOL) || t > horizon + TENOR_DATE_TOL {
                return Err(Error::Domain(format!(
                    "observation time {t} outside [{t0}, {horizon}]"
                )));
            }
            obs.push(snap(tenor, t).clamp(t0, horizon));
        }
        obs.sort_by(f64::total_cmp);
        obs.dedup_by(|a, b| (*a - *b).abs() <= TENOR_DATE_TOL);

        let mut grid = vec![t0];
        for i in 1..=tenor.n() {
            let a = tenor.date(i - 1);
            if a >= horizon - TENOR_DATE_TOL {
                break;
            }
            let b = tenor.date(i).min(horizon);
            let m = ((config.steps_per_period as f64) * (b - a) / tenor.delta())
                .ceil()
                .max(1.0) as usize;
            for s in 1..m {
                grid.push(a + (b - a) * s as f64 / m as f64);
            }
            grid.push(b);
        }
        grid.extend(obs.iter().copied());
        grid.sort_by(f64::total_cmp);
        grid.dedup_by(|a, b| (*a - *b).abs() <= TENOR_DATE_TOL);

        let d = vol.dim();
        let n = tenor.n();
        let mut steps = Vec::with_capacity(grid.len().saturating_sub(1));
        for w in grid.windows(2) {
            let (s0, s1) = (w[0], w[1]);
            let lo = tenor.period_starting_at(s0);
            let j = config.measure.forward_index_at(tenor, s0);
            if lo < n {
                DriftStencil { lo, hi: n - 1, measure: config.measure }.forward_index(tenor, s0).map_err(|_| {
                    Error::Config(format!(
                        "measure {:?} is not defined past its numeraire maturity; horizon {horizon} too long",
                        config.measure
                    ))
                })?;
            }
            let mut loads = vec![0.0; n.saturating_sub(lo) * d];
            let mut half_var = vec![0.0; n.saturating_sub(lo)];
            for h in lo..n {
                let out = &mut loads[(h - lo) * d..(h - lo + 1) * d];
                vol.step_loading(s0, s1, tenor.date(h), out);
                half_var[h - lo] = 0.5 * out.iter().map(|x| x * x).sum::<f64>();
            }
            let fixes = tenor.index_of(s1).filter(|&i| i < n);
            let observe = obs.iter().any(|&o| (o - s1).abs() <= TENOR_DATE_TOL);
            steps.push(Step {
                s0,
                s1,
                dt: s1 - s0,
                sqrt_dt: (s1 - s0).sqrt(),
                lo,
                j,
                loads,
                half_var,
                fixes,
                observe,
            });
        }
        Ok(Self {
            initial: ModelState::initial(tenor, initial)?,
            steps,
            scheme: config.scheme,
            dim: d,
            observe_initial: obs
                .first()
                .is_some_and(|&o| (o - t0).abs() <= TENOR_DATE_TOL),
            observation_times: obs,
        })
    }

    pub fn initial_state(&self) -> &ModelState {
        &self.initial
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    /// Grid times `t_0 < t_1 < ... < t_m`.
    pub fn times(&self) -> Vec<f64> {
        let mut out = vec![self.initial.time()];
        out.extend(self.steps.iter().map(|s| s.s1));
        out
    }

    /// Sorted, de-duplicated observation times.
    pub fn observation_times(&self) -> &[f64] {
        &self.observation_times
    }

    pub fn workspace(&self) -> StepWorkspace {
        let n = self.initial.tenor().n();
        StepWorkspace {
            rel: vec![0.0; n],
            rel_pred: vec![0.0; n],
            acc: vec![0.0; self.dim],
            shock: vec![0.0; n],
            predicted: vec![0.0; n],
        }
    }

    /// Advances `state` over step `i` with standard normals `z` (length
    /// [`Self::dim`]), recording a fixing if the step ends on a tenor date.
    pub fn step(
        &self,
        state: &mut ModelState,
        i: usize,
        z: &[f64],
        ws: &mut StepWorkspace,
    ) -> Result<()> {
        let step = self
            .steps
            .get(i)
            .ok_or_else(|| Error::Domain(format!("no step {i}")))?;
        if (state.time() - step.s0).abs() > TENOR_DATE_TOL {
            return Err(Error::State(format!(
                "state at {} cannot take the step starting at {}",
                state.time(),
                step.s0
            )));
        }
        if z.len() != self.dim {
            return Err(Error::Domain(format!(
                "expected {} normals, got {}",
                self.dim,
                z.len()
            )));
        }
        let tenor = *state.tenor();
        let (n, d, lo) = (tenor.n(), self.dim, step.lo);
        if lo < n {
            let live = n - lo;
            for h in 0..live {
                let lam = &step.loads[h * d..(h + 1) * d];
                ws.shock[h] = step.sqrt_dt * lam.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
            }
            let delta = tenor.delta();
            relative_drift(
                step.j,
                lo,
                state.libors(),
                delta,
                &step.loads,
                d,
                &mut ws.rel[..live],
                &mut ws.acc,
            );
            if self.scheme == Discretization::PredictorCorrector {
                ws.predicted.copy_from_slice(state.libors());
                for h in 0..live {
                    let x = &mut ws.predicted[lo + h];
                    *x *= ((ws.rel[h] - step.half_var[h]) * step.dt + ws.shock[h]).exp();
                }
                relative_drift(
                    step.j,
                    lo,
                    &ws.predicted,
                    delta,
                    &step.loads,
                    d,
                    &mut ws.rel_pred[..live],
                    &mut ws.acc,
                );
                for h in 0..live {
                    ws.rel[h] = 0.5 * (ws.rel[h] + ws.rel_pred[h]);
                }
            }
            let libors = state.libors_mut();
            for h in 0..live {
                libors[lo + h] *= ((ws.rel[h] - step.half_var[h]) * step.dt + ws.shock[h]).exp();
            }
        }
        state.set_time(step.s1);
        if let Some(k) = step.fixes {
            state.advance_fixing(k)?;
        }
        Ok(())
    }

    /// One full path; returns the snapshots at the observation times.
    pub fn run_path(
        &self,
        normals: &mut GaussianStream,
        ws: &mut StepWorkspace,
    ) -> Result<Vec<ModelState>> {
        let mut state = self.initial.clone();
        let mut snaps = Vec::with_capacity(self.observation_times.len());
        if self.observe_initial {
            snaps.push(state.clone());
        }
        let mut z = vec![0.0; self.dim];
        for (i, step) in self.steps.iter().enumerate() {
            normals.fill(&mut z);
            self.step(&mut state, i, &z, ws)?;
            if step.observe {
                snaps.push(state.clone());
            }
        }
        Ok(snaps)
    }
}

/// Simulates `config.n_paths` paths up to `horizon` and applies `observer`
/// to each path's snapshots at `observation_times` (sorted, de-duplicated,
/// snapped to tenor dates). Results come back in path order.
pub fn simulate_paths<T, F>(
    initial: &InitialCurve,
    tenor: &TenorStructure,
    vol: &VolatilitySpec,
    config: &MCConfig,
    horizon: f64,
    observation_times: &[f64],
    observer: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &[ModelState]) -> Result<T> + Sync,
{
    let evolver = PathEvolver::new(initial, tenor, vol, config, horizon, observation_times)?;
    (0..config.n_paths)
        .into_par_iter()
        .map_init(
            || evolver.workspace(),
            |ws, p| {
                let mut g = GaussianStream::for_path(config.seed, p, config.antithetic);
                let snaps = evolver.run_path(&mut g, ws)?;
                observer(p, &snaps)
            },
        )
        .collect()
}
