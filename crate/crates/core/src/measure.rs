//! Drifts of the discrete-tenor LIBORs under forward and rolling-spot measures.
//!
//! Under `P_{T_j}` the rate `L_h = L(t, T_h)` evolves as
//!
//! ```text
//! dL_h / L_h = m_h dt + lambda_h . dW^j
//! m_h = -lambda_h . sum_{k=h+1}^{j-1} gamma_k   (h < j - 1)
//! m_h = 0                                       (h = j - 1)
//! m_h = +lambda_h . sum_{k=j}^{h}   gamma_k     (h >= j)
//! gamma_k = delta L_k / (1 + delta L_k) lambda_k
//! ```
//!
//! The sums are accumulated outward from `j` so a whole block costs O(n d).

use crate::curve::ModelState;
use crate::error::{Error, Result};
use crate::tenor::{TenorStructure, TENOR_DATE_TOL};
use crate::vol::VolatilitySpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasureTag {
    /// Forward measure with the `T_j`-bond as numeraire.
    Forward(usize),
    /// Roll-over measure: on each period `(T_{i-1}, T_i]` it coincides with
    /// `Forward(i)` conditionally.
    SpotRolling,
}

impl MeasureTag {
    /// Index of the forward measure in force for an increment starting at `s`.
    pub fn forward_index_at(&self, tenor: &TenorStructure, s: f64) -> usize {
        match *self {
            MeasureTag::Forward(j) => j,
            MeasureTag::SpotRolling => tenor.period_starting_at(s),
        }
    }

    pub fn validate(&self, tenor: &TenorStructure) -> Result<()> {
        match *self {
            MeasureTag::Forward(j) if j == 0 || j > tenor.n() => Err(Error::Config(format!(
                "forward measure index {j} outside 1..={}",
                tenor.n()
            ))),
            _ => Ok(()),
        }
    }
}

/// Live block `lo..=hi` of rates at a time, together with the measure that
/// drives them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DriftStencil {
    pub lo: usize,
    pub hi: usize,
    pub measure: MeasureTag,
}

impl DriftStencil {
    /// Stencil for an increment starting at `t`: rates with `T_h > t` are live.
    pub fn at(measure: MeasureTag, tenor: &TenorStructure, t: f64) -> Result<Self> {
        measure.validate(tenor)?;
        if t < tenor.t0() - TENOR_DATE_TOL || t >= tenor.date(tenor.n() - 1) - TENOR_DATE_TOL {
            return Err(Error::State(format!("no live LIBORs at t = {t}")));
        }
        Ok(Self {
            lo: tenor.period_starting_at(t),
            hi: tenor.n() - 1,
            measure,
        })
    }

    /// Forward index `j` with this block, or an error when the measure's
    /// numeraire bond has already matured.
    pub fn forward_index(&self, tenor: &TenorStructure, t: f64) -> Result<usize> {
        let j = self.measure.forward_index_at(tenor, t);
        if j < self.lo || j > self.hi + 1 {
            return Err(Error::State(format!(
                "measure {:?} inconsistent with live block {}..={}",
                self.measure, self.lo, self.hi
            )));
        }
        Ok(j)
    }

    /// Indices whose values enter the drift of `h` under `Forward(j)`.
    pub fn coupled(h: usize, j: usize) -> std::ops::RangeInclusive<usize> {
        let other = j.saturating_sub(1);
        h.min(other)..=h.max(other)
    }
}

/// `gamma(t, T_k) = delta L_k / (1 + delta L_k) lambda(t, T_k)`.
pub fn gamma(state: &ModelState, k: usize, vol: &VolatilitySpec) -> Result<Vec<f64>> {
    let tenor = state.tenor();
    if k >= tenor.n() || !state.is_live(k) {
        return Err(Error::State(format!(
            "LIBOR {k} is not live at t = {}",
            state.time()
        )));
    }
    let l = state.libors()[k];
    let delta = tenor.delta();
    let w = delta * l / (1.0 + delta * l);
    Ok(vol
        .vol(state.time(), tenor.date(k))?
        .into_iter()
        .map(|x| w * x)
        .collect())
}

/// Relative drifts `m_h` for `h = lo..n` into `out[h - lo]`, with
/// `loads[(h - lo) * d..][..d]` the factor loadings of rate `h`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn relative_drift(
    j: usize,
    lo: usize,
    libors: &[f64],
    delta: f64,
    loads: &[f64],
    d: usize,
    out: &mut [f64],
    acc: &mut [f64],
) {
    let n = libors.len();
    let load = |h: usize| &loads[(h - lo) * d..(h - lo + 1) * d];
    let weight = |k: usize| delta * libors[k] / (1.0 + delta * libors[k]);

    acc.fill(0.0);
    for h in j.max(lo)..n {
        let w = weight(h);
        let lam = load(h);
        let mut dot = 0.0;
        for f in 0..d {
            acc[f] += w * lam[f];
            dot += lam[f] * acc[f];
        }
        out[h - lo] = dot;
    }

    if j > lo && j - 1 < n {
        out[j - 1 - lo] = 0.0;
    }

    acc.fill(0.0);
    let mut h = j.saturating_sub(1).min(n);
    while h > lo {
        // add gamma_h, then rate h - 1 sees sum_{k=h}^{j-1}
        let w = weight(h);
        let lam_h = load(h);
        for f in 0..d {
            acc[f] += w * lam_h[f];
        }
        h -= 1;
        let lam = load(h);
        out[h - lo] = -lam.iter().zip(acc.iter()).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// Drift of `dL_h` (absolute, per year) for every rate under `measure` at the
/// state's time, evaluated with `lambda(t, T_h)` at that instant. Entries
/// outside the stencil are zero.
pub fn drift_under(
    measure: MeasureTag,
    state: &ModelState,
    vol: &VolatilitySpec,
    stencil: &DriftStencil,
) -> Result<Vec<f64>> {
    let tenor = state.tenor();
    let t = state.time();
    if stencil.measure != measure {
        return Err(Error::State(format!(
            "stencil built for {:?}, asked for {measure:?}",
            stencil.measure
        )));
    }
    let expected = DriftStencil::at(measure, tenor, t)?;
    if expected.lo != stencil.lo || expected.hi != stencil.hi {
        return Err(Error::State(format!(
            "stencil {}..={} does not match live block {}..={} at t = {t}",
            stencil.lo, stencil.hi, expected.lo, expected.hi
        )));
    }
    let j = stencil.forward_index(tenor, t)?;
    let d = vol.dim();
    let (lo, n) = (stencil.lo, tenor.n());
    let mut loads = vec![0.0; (n - lo) * d];
    for h in lo..n {
        vol.vol_into(t, tenor.date(h), &mut loads[(h - lo) * d..(h - lo + 1) * d]);
    }
    let mut rel = vec![0.0; n - lo];
    let mut acc = vec![0.0; d];
    relative_drift(
        j,
        lo,
        state.libors(),
        tenor.delta(),
        &loads,
        d,
        &mut rel,
        &mut acc,
    );
    let mut out = vec![0.0; n];
    for h in lo..n {
        out[h] = state.libors()[h] * rel[h - lo];
    }
    Ok(out)
}

/// Sampled path of one LIBOR and the driving Brownian increments under
/// `P_{T_{k+1}}`: `times[i]`, `libors[i] = L(times[i], T_k)` and `dw[i]` the
/// increment over `[times[i], times[i+1]]`.
#[derive(Debug, Clone, Default)]
pub struct BrownianPath {
    pub times: Vec<f64>,
    pub libors: Vec<f64>,
    pub dw: Vec<Vec<f64>>,
}

impl BrownianPath {
    fn position(&self, t: f64) -> Option<usize> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= TENOR_DATE_TOL)
    }
}

/// Discretised density `dP_{T_k} / dP_{T_{k+1}}` restricted to `[t0, t1]`:
/// `exp(sum gamma . dW - 1/2 sum |gamma|^2 dt)` with `gamma` frozen at each
/// step start and per-step RMS volatility loadings.
pub fn radon_nikodym_increment(
    t0: f64,
    t1: f64,
    k: usize,
    tenor: &TenorStructure,
    path: &BrownianPath,
    vol: &VolatilitySpec,
) -> Result<f64> {
    if path.libors.len() != path.times.len() || path.dw.len() + 1 != path.times.len() {
        return Err(Error::State("inconsistent path record lengths".into()));
    }
    let (Some(i0), Some(i1)) = (path.position(t0), path.position(t1)) else {
        return Err(Error::State(format!(
            "path has no samples at {t0} and {t1}"
        )));
    };
    if i1 < i0 {
        return Err(Error::Domain(format!("interval [{t0}, {t1}] is reversed")));
    }
    if k >= tenor.n() || t1 > tenor.date(k) + TENOR_DATE_TOL {
        return Err(Error::State(format!(
            "LIBOR {k} is not live on [{t0}, {t1}]"
        )));
    }
    let delta = tenor.delta();
    let d = vol.dim();
    let mut load = vec![0.0; d];
    let mut log = 0.0;
    for i in i0..i1 {
        let (s0, s1) = (path.times[i], path.times[i + 1]);
        let dw = &path.dw[i];
        if dw.len() != d {
            return Err(Error::State(format!(
                "step {i} has {} factors, expected {d}",
                dw.len()
            )));
        }
        vol.step_loading(s0, s1, tenor.date(k), &mut load);
        let l = path.libors[i];
        let w = delta * l / (1.0 + delta * l);
        let mut sq = 0.0;
        for f in 0..d {
            let g = w * load[f];
            log += g * dw[f];
            sq += g * g;
        }
        log -= 0.5 * sq * (s1 - s0);
    }
    Ok(log.exp())
}
