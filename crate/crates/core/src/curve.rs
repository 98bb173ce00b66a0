//! Discrete-tenor model state and initial forward curves.

use std::io::{Read, Write};

use crate::error::{domain, Error, Result};
use crate::tenor::TenorStructure;

/// Initial forward LIBORs `L(0, T_i)`, `i = 0..N-1`, simple rates per year.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialCurve {
    libors: Vec<f64>,
}

impl InitialCurve {
    pub fn new(libors: Vec<f64>) -> Result<Self> {
        if libors.is_empty() {
            return Err(Error::Config("initial curve is empty".into()));
        }
        if let Some(bad) = libors.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(Error::Config(format!(
                "initial LIBORs must be positive and finite, got {bad}"
            )));
        }
        Ok(Self { libors })
    }

    /// Same rate on every tenor date.
    pub fn flat(rate: f64, tenor: &TenorStructure) -> Result<Self> {
        Self::new(vec![rate; tenor.n()])
    }

    pub fn libors(&self) -> &[f64] {
        &self.libors
    }

    pub fn len(&self) -> usize {
        self.libors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.libors.is_empty()
    }

    pub(crate) fn check_tenor(&self, tenor: &TenorStructure) -> Result<()> {
        if self.libors.len() != tenor.n() {
            return Err(Error::Config(format!(
                "initial curve has {} rates but the tenor structure has {} periods",
                self.libors.len(),
                tenor.n()
            )));
        }
        Ok(())
    }

    /// Writes `tenor_index,start_date_years,libor` rows.
    pub fn write_csv<W: Write>(&self, tenor: &TenorStructure, out: W) -> Result<()> {
        self.check_tenor(tenor)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["tenor_index", "start_date_years", "libor"])?;
        for (i, l) in self.libors.iter().enumerate() {
            w.write_record([
                i.to_string(),
                crate::format::sig12(tenor.date(i)),
                crate::format::sig12(*l),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the format written by [`InitialCurve::write_csv`]; rows may come in
    /// any order but must cover `0..n` exactly once.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(input);
        let mut rows: Vec<(usize, f64)> = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let field = |k: usize| {
                rec.get(k).ok_or_else(|| {
                    Error::Config(format!("curve row {}: missing column {k}", line + 2))
                })
            };
            let idx: usize = field(0)?
                .parse()
                .map_err(|_| Error::Config(format!("curve row {}: bad tenor_index", line + 2)))?;
            let rate: f64 = field(2)?
                .parse()
                .map_err(|_| Error::Config(format!("curve row {}: bad libor", line + 2)))?;
            rows.push((idx, rate));
        }
        rows.sort_by_key(|r| r.0);
        for (expect, (idx, _)) in rows.iter().enumerate() {
            if *idx != expect {
                return Err(Error::Config(format!(
                    "curve rows must cover indices 0..{} exactly once",
                    rows.len()
                )));
            }
        }
        Self::new(rows.into_iter().map(|r| r.1).collect())
    }
}

/// The three initial term structures used in the figure scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveScenario {
    /// 4% rising to 6% at 5y, back to 4% at 10y.
    Hump,
    /// 5% to 6.7% at 4.25y, 6.5% at 4.75y, 6.8% at 5.5y, 5% at 10y.
    Kinked,
    /// 5% rising linearly to 10% at `T* - delta`.
    Steep,
}

impl CurveScenario {
    pub fn from_id(id: u32) -> Result<Self> {
        match id {
            1 => Ok(CurveScenario::Hump),
            2 => Ok(CurveScenario::Kinked),
            3 => Ok(CurveScenario::Steep),
            _ => Err(Error::Config(format!("unknown curve scenario {id}"))),
        }
    }

    pub fn id(&self) -> u32 {
        match self {
            CurveScenario::Hump => 1,
            CurveScenario::Kinked => 2,
            CurveScenario::Steep => 3,
        }
    }

    fn knots(&self, tenor: &TenorStructure) -> Vec<(f64, f64)> {
        match self {
            CurveScenario::Hump => vec![(0.0, 0.04), (5.0, 0.06), (10.0, 0.04)],
            CurveScenario::Kinked => vec![
                (0.0, 0.05),
                (4.25, 0.067),
                (4.75, 0.065),
                (5.5, 0.068),
                (10.0, 0.05),
            ],
            CurveScenario::Steep => vec![(0.0, 0.05), (tenor.end() - tenor.delta(), 0.10)],
        }
    }
}

fn piecewise_linear(knots: &[(f64, f64)], x: f64) -> Option<f64> {
    let tol = 1e-12;
    if x < knots[0].0 - tol || x > knots[knots.len() - 1].0 + tol {
        return None;
    }
    let j = knots.partition_point(|k| k.0 < x).clamp(1, knots.len() - 1);
    let (x0, y0) = knots[j - 1];
    let (x1, y1) = knots[j];
    Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
}

/// Samples the scenario's rate-vs-start-date curve at `T_0, ..., T_{N-1}`.
pub fn build_initial_curve(
    scenario: CurveScenario,
    tenor: &TenorStructure,
) -> Result<InitialCurve> {
    let knots = scenario.knots(tenor);
    let rates = (0..tenor.n())
        .map(|i| {
            let t = tenor.date(i);
            piecewise_linear(&knots, t).ok_or_else(|| {
                Error::Config(format!(
                    "scenario {} is not defined at start date {t}",
                    scenario.id()
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    InitialCurve::new(rates)
}

/// Realized spot fixings `L(T_i, T_i)` along one path.
#[derive(Debug, Clone, PartialEq)]
pub struct FixingHistory {
    tenor: TenorStructure,
    values: Vec<Option<f64>>,
}

impl FixingHistory {
    pub fn tenor(&self) -> &TenorStructure {
        &self.tenor
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        self.values.get(i).copied().flatten()
    }

    pub(crate) fn require(&self, i: usize) -> Result<f64> {
        self.get(i)
            .ok_or_else(|| Error::State(format!("fixing L(T_{i}, T_{i}) has not been recorded")))
    }

    /// Number of recorded fixings (they are always a prefix `0..k`).
    pub fn count(&self) -> usize {
        self.values.iter().take_while(|v| v.is_some()).count()
    }
}

/// Live forward LIBORs and recorded fixings at model time `t`.
///
/// `libors[i]` holds `L(t, T_i)` for every `i < N`. Once `T_i <= t` the entry
/// is frozen at the fixing `L(T_i, T_i)`, which is also stored in the
/// fixing history.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    tenor: TenorStructure,
    t: f64,
    libors: Vec<f64>,
    fixings: FixingHistory,
}

impl ModelState {
    /// State at `T_0` from an initial curve; `L(T_0, T_0)` is fixed immediately.
    pub fn initial(tenor: &TenorStructure, curve: &InitialCurve) -> Result<Self> {
        Self::new(tenor, tenor.t0(), curve.libors().to_vec())
    }

    /// State at time `t` where every rate with `T_i <= t` is taken as fixed at
    /// its given value.
    pub fn new(tenor: &TenorStructure, t: f64, libors: Vec<f64>) -> Result<Self> {
        if libors.len() != tenor.n() {
            return Err(Error::Config(format!(
                "expected {} LIBORs, got {}",
                tenor.n(),
                libors.len()
            )));
        }
        if let Some(bad) = libors.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(Error::State(format!("LIBOR {bad} is not positive")));
        }
        let k = tenor.eta_closed(t)?;
        let fixed = if tenor.is_tenor_date(t) { k + 1 } else { k };
        let values = (0..tenor.n())
            .map(|i| (i < fixed).then_some(libors[i]))
            .collect();
        Ok(Self {
            tenor: *tenor,
            t,
            libors,
            fixings: FixingHistory {
                tenor: *tenor,
                values,
            },
        })
    }

    pub fn tenor(&self) -> &TenorStructure {
        &self.tenor
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// `L(t, T_i)` for all `i < N` (fixed rates report their fixing).
    pub fn libors(&self) -> &[f64] {
        &self.libors
    }

    pub fn libor(&self, i: usize) -> Result<f64> {
        self.libors.get(i).copied().ok_or_else(|| {
            Error::Domain(format!(
                "no LIBOR L(., T_{i}) in a {}-period tenor",
                self.tenor.n()
            ))
        })
    }

    pub fn fixing(&self, i: usize) -> Option<f64> {
        self.fixings.get(i)
    }

    pub fn fixings(&self) -> &FixingHistory {
        &self.fixings
    }

    /// Whether `L(., T_i)` still diffuses (`T_i > t`).
    pub fn is_live(&self, i: usize) -> bool {
        i < self.tenor.n() && self.fixings.get(i).is_none()
    }

    /// Copy of the state with one LIBOR replaced. Fixed rates move together
    /// with their fixing.
    pub fn with_libor(&self, i: usize, value: f64) -> Result<Self> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::State(format!("LIBOR {value} is not positive")));
        }
        let mut out = self.clone();
        *out.libors
            .get_mut(i)
            .ok_or_else(|| Error::Domain(format!("no LIBOR index {i}")))? = value;
        if out.fixings.values[i].is_some() {
            out.fixings.values[i] = Some(value);
        }
        Ok(out)
    }

    /// Records `L(T_i, T_i)`; the state must sit exactly at `T_i`.
    pub fn advance_fixing(&mut self, i: usize) -> Result<()> {
        if i >= self.tenor.n() {
            return domain(format!("no rate L(., T_{i}) to fix"));
        }
        if self.tenor.index_of(self.t) != Some(i) {
            return Err(Error::State(format!(
                "cannot fix L(T_{i}, T_{i}) at t = {}",
                self.t
            )));
        }
        if self.fixings.values[i].is_some() {
            return Err(Error::State(format!("L(T_{i}, T_{i}) is already fixed")));
        }
        self.fixings.values[i] = Some(self.libors[i]);
        Ok(())
    }

    pub(crate) fn set_time(&mut self, t: f64) {
        self.t = t;
    }

    pub(crate) fn libors_mut(&mut self) -> &mut [f64] {
        &mut self.libors
    }

    /// `B(t, T_j) / B(t, T_{eta(t)}) = prod_{i=eta(t)}^{j-1} (1 + delta L(t, T_i))^{-1}`.
    ///
    /// At a tenor date the short bond is 1, so this is the bond price itself.
    pub fn discrete_bond(&self, j: usize) -> Result<f64> {
        if j > self.tenor.n() {
            return domain(format!("tenor index {j} beyond N = {}", self.tenor.n()));
        }
        let start = self.tenor.eta_closed(self.t)?;
        if j < start {
            return domain(format!(
                "bond maturity T_{j} = {} precedes t = {}",
                self.tenor.date(j),
                self.t
            ));
        }
        let delta = self.tenor.delta();
        Ok(self.libors[start..j]
            .iter()
            .map(|l| 1.0 / (1.0 + delta * l))
            .product())
    }
}
