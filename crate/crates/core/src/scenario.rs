//! Scenario configuration and the figure runs: term-structure sweeps at
//! `t = 0`, single-path dynamics traces and broken-date implied volatility
//! strips.
//!
//! Configs are flat `key = value` text. `#` starts a comment.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::curve::{build_initial_curve, CurveScenario, InitialCurve, ModelState};
use crate::error::{Error, Result};
use crate::format::sig12;
use crate::interpolation::{
    ForwardMode, InterpolationScheme, Interpolator, LogLinearDiscount, Method, Side,
};
use crate::measure::MeasureTag;
use crate::pricing::{
    approx_implied_vol, caplet_forward_and_discount, implied_band, price_caplet_strip_mc,
    CapletSpec,
};
use crate::simulation::{Discretization, GaussianStream, MCConfig, PathEvolver};
use crate::tenor::{TenorStructure, TENOR_DATE_TOL};
use crate::vol::VolatilitySpec;

/// Points per accrual period in the dense `t = 0` sweeps.
pub const SWEEP_POINTS_PER_PERIOD: usize = 64;
/// Offset from tenor dates used to sample one-sided limits.
pub const SWEEP_EDGE_OFFSET: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum CurveSource {
    Scenario(CurveScenario),
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodChoice {
    Method1,
    Method2,
    Baseline,
    All,
}

impl MethodChoice {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "1" | "method1" => Some(MethodChoice::Method1),
            "2" | "method2" => Some(MethodChoice::Method2),
            "baseline" => Some(MethodChoice::Baseline),
            "all" => Some(MethodChoice::All),
            _ => None,
        }
    }

    fn as_str(&self) -> &'static str {
        match self {
            MethodChoice::Method1 => "1",
            MethodChoice::Method2 => "2",
            MethodChoice::Baseline => "baseline",
            MethodChoice::All => "all",
        }
    }

    /// Interpolation methods selected (the baseline is not a model method).
    pub fn methods(&self) -> Vec<Method> {
        match self {
            MethodChoice::Method1 => vec![Method::DaycountFractions],
            MethodChoice::Method2 => vec![Method::ShortBondVolatility],
            MethodChoice::Baseline => vec![],
            MethodChoice::All => vec![Method::DaycountFractions, Method::ShortBondVolatility],
        }
    }

    pub fn includes_baseline(&self) -> bool {
        matches!(self, MethodChoice::Baseline | MethodChoice::All)
    }
}

/// One run's inputs. [`ScenarioConfig::figure`] gives the fixed curve,
/// volatility and horizon of each figure setup.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub figure: Option<u8>,
    pub curve: CurveSource,
    pub vol: VolatilitySpec,
    pub t_star: f64,
    pub delta: f64,
    pub method: MethodChoice,
    pub fixed_maturity: Option<f64>,
    pub fixed_ttm: Option<f64>,
    pub n_paths: usize,
    pub steps_per_period: usize,
    pub seed: u64,
    pub antithetic: bool,
    pub scheme: Discretization,
    /// `[start, end]` of the `L(0, T)` sweep.
    pub libor_window: (f64, f64),
    /// Start of the accrual period swept by the implied volatility run.
    pub impvol_period_start: f64,
    /// Interior sample points of that period (endpoints are added).
    pub impvol_points: usize,
    pub output_dir: PathBuf,
}

const KEYS: &[&str] = &[
    "figure",
    "curve",
    "vol",
    "t_star",
    "delta",
    "method",
    "fixed_maturity",
    "fixed_ttm",
    "paths",
    "steps_per_period",
    "seed",
    "antithetic",
    "scheme",
    "libor_window_start",
    "libor_window_end",
    "impvol_period_start",
    "impvol_points",
    "output_dir",
];

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            figure: None,
            curve: CurveSource::Scenario(CurveScenario::Hump),
            vol: VolatilitySpec::lambda1(),
            t_star: 10.0,
            delta: 0.25,
            method: MethodChoice::All,
            fixed_maturity: None,
            fixed_ttm: None,
            n_paths: 100_000,
            steps_per_period: 4,
            seed: 20_010_101,
            antithetic: false,
            scheme: Discretization::LogEuler,
            libor_window: (4.0, 6.0),
            impvol_period_start: 3.5,
            impvol_points: 9,
            output_dir: PathBuf::from("out"),
        }
    }
}

/// (curve, uses lambda2, T*, fixed maturity, fixed TTM)
type TableRow = (CurveScenario, bool, f64, Option<f64>, Option<f64>);

fn table_row(figure: u8) -> Option<TableRow> {
    Some(match figure {
        1..=3 => (
            if figure == 3 {
                CurveScenario::Kinked
            } else {
                CurveScenario::Hump
            },
            false,
            10.0,
            None,
            None,
        ),
        4 | 5 => (
            CurveScenario::Steep,
            false,
            2.25,
            Some(1.8125),
            Some(0.3125),
        ),
        6 | 7 => (CurveScenario::Steep, true, 4.25, None, None),
        _ => return None,
    })
}

fn parse_f64(key: &str, v: &str, line: usize) -> Result<f64> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Config(format!("line {line}: {key}: expected a number, got '{v}'")))
}

fn parse_opt_f64(key: &str, v: &str, line: usize) -> Result<Option<f64>> {
    if v.eq_ignore_ascii_case("na") || v.eq_ignore_ascii_case("none") {
        Ok(None)
    } else {
        parse_f64(key, v, line).map(Some)
    }
}

fn parse_vol(v: &str, line: usize) -> Result<VolatilitySpec> {
    let bad = || {
        Error::Config(format!("line {line}: vol: expected lambda1, lambda2, flat:<level> or exp2:<a1>,<b1>,<a2>,<b2>, got '{v}'"))
    };
    let spec = match v {
        "lambda1" => VolatilitySpec::lambda1(),
        "lambda2" => VolatilitySpec::lambda2(),
        _ => {
            let (kind, args) = v.split_once(':').ok_or_else(bad)?;
            let nums: Vec<f64> = args
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad())?;
            match (kind, nums.as_slice()) {
                ("flat", [level]) => VolatilitySpec::Flat { level: *level },
                ("exp2", [a1, b1, a2, b2]) => VolatilitySpec::TwoFactorExponential {
                    a1: *a1,
                    b1: *b1,
                    a2: *a2,
                    b2: *b2,
                },
                _ => return Err(bad()),
            }
        }
    };
    spec.validate()
        .map_err(|e| Error::Config(format!("line {line}: vol: {e}")))?;
    Ok(spec)
}

fn vol_to_string(v: &VolatilitySpec) -> Result<String> {
    if *v == VolatilitySpec::lambda1() {
        return Ok("lambda1".into());
    }
    if *v == VolatilitySpec::lambda2() {
        return Ok("lambda2".into());
    }
    match v {
        VolatilitySpec::Flat { level } => Ok(format!("flat:{}", sig12(*level))),
        VolatilitySpec::TwoFactorExponential { a1, b1, a2, b2 } => Ok(format!(
            "exp2:{},{},{},{}",
            sig12(*a1),
            sig12(*b1),
            sig12(*a2),
            sig12(*b2)
        )),
        VolatilitySpec::PiecewiseConstant(_) => Err(Error::Config(
            "piecewise-constant volatilities cannot be written as key=value config".into(),
        )),
    }
}

impl ScenarioConfig {
    /// Preset for figure 1-7.
    pub fn figure(id: u8) -> Result<Self> {
        let (curve, lambda2, t_star, fixed_maturity, fixed_ttm) = table_row(id)
            .ok_or_else(|| Error::Config(format!("unknown figure {id}; expected 1-7")))?;
        let method = match id {
            1 | 4 | 6 => MethodChoice::Method1,
            2 | 5 | 7 => MethodChoice::Method2,
            _ => MethodChoice::All,
        };
        Ok(Self {
            figure: Some(id),
            curve: CurveSource::Scenario(curve),
            vol: if lambda2 {
                VolatilitySpec::lambda2()
            } else {
                VolatilitySpec::lambda1()
            },
            t_star,
            method,
            fixed_maturity,
            fixed_ttm,
            n_paths: if id >= 6 { 1_000_000 } else { 100_000 },
            // four substeps leave a visible bias in implied vols at 10^6 paths
            steps_per_period: if id >= 6 { 16 } else { 4 },
            output_dir: PathBuf::from(format!("out/figure{id}")),
            ..Self::default()
        })
    }

    /// Parses `key = value` lines. A `figure` key loads that preset first;
    /// the remaining keys override it and must stay consistent with the table.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<&str, (&str, usize)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {line}: expected key = value")))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(Error::Config(format!("line {line}: unknown key '{k}'")));
            }
            if entries.insert(k, (v, line)).is_some() {
                return Err(Error::Config(format!("line {line}: duplicate key '{k}'")));
            }
        }

        let mut cfg = match entries.get("figure") {
            Some(&(v, line)) if v != "custom" => {
                let id: u8 = v.parse().map_err(|_| {
                    Error::Config(format!(
                        "line {line}: figure: expected 1-7 or custom, got '{v}'"
                    ))
                })?;
                Self::figure(id).map_err(|e| Error::Config(format!("line {line}: {e}")))?
            }
            _ => Self::default(),
        };

        for (&key, &(v, line)) in &entries {
            match key {
                "figure" => {}
                "curve" => {
                    cfg.curve = if let Some(path) = v.strip_prefix("file:") {
                        CurveSource::File(PathBuf::from(path))
                    } else {
                        let id = v.parse().map_err(|_| {
                            Error::Config(format!(
                                "line {line}: curve: expected 1, 2, 3 or file:<path>, got '{v}'"
                            ))
                        })?;
                        CurveSource::Scenario(
                            CurveScenario::from_id(id)
                                .map_err(|e| Error::Config(format!("line {line}: {e}")))?,
                        )
                    }
                }
                "vol" => cfg.vol = parse_vol(v, line)?,
                "t_star" => cfg.t_star = parse_f64(key, v, line)?,
                "delta" => cfg.delta = parse_f64(key, v, line)?,
                "method" => {
                    cfg.method = MethodChoice::parse(v).ok_or_else(|| {
                        Error::Config(format!(
                            "line {line}: method: expected 1, 2, baseline or all, got '{v}'"
                        ))
                    })?
                }
                "fixed_maturity" => cfg.fixed_maturity = parse_opt_f64(key, v, line)?,
                "fixed_ttm" => cfg.fixed_ttm = parse_opt_f64(key, v, line)?,
                "paths" => {
                    cfg.n_paths = v.parse().map_err(|_| {
                        Error::Config(format!("line {line}: paths: expected a count, got '{v}'"))
                    })?
                }
                "steps_per_period" => {
                    cfg.steps_per_period = v.parse().map_err(|_| {
                        Error::Config(format!(
                            "line {line}: steps_per_period: expected a count, got '{v}'"
                        ))
                    })?
                }
                "seed" => {
                    cfg.seed = v.parse().map_err(|_| {
                        Error::Config(format!("line {line}: seed: expected an integer, got '{v}'"))
                    })?
                }
                "antithetic" => {
                    cfg.antithetic = v.parse().map_err(|_| {
                        Error::Config(format!("line {line}: antithetic: expected true or false"))
                    })?
                }
                "scheme" => {
                    cfg.scheme = match v {
                        "log_euler" => Discretization::LogEuler,
                        "predictor_corrector" => Discretization::PredictorCorrector,
                        _ => {
                            return Err(Error::Config(format!(
                        "line {line}: scheme: expected log_euler or predictor_corrector, got '{v}'"
                    )))
                        }
                    }
                }
                "libor_window_start" => cfg.libor_window.0 = parse_f64(key, v, line)?,
                "libor_window_end" => cfg.libor_window.1 = parse_f64(key, v, line)?,
                "impvol_period_start" => cfg.impvol_period_start = parse_f64(key, v, line)?,
                "impvol_points" => {
                    cfg.impvol_points = v.parse().map_err(|_| {
                        Error::Config(format!("line {line}: impvol_points: expected a count"))
                    })?
                }
                "output_dir" => cfg.output_dir = PathBuf::from(v),
                _ => unreachable!("keys are checked above"),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Writes every key; `parse(serialize(c)) == c`.
    pub fn serialize(&self) -> Result<String> {
        let opt = |x: Option<f64>| x.map(sig12).unwrap_or_else(|| "NA".into());
        let curve = match &self.curve {
            CurveSource::Scenario(s) => s.id().to_string(),
            CurveSource::File(p) => format!("file:{}", p.display()),
        };
        let scheme = match self.scheme {
            Discretization::LogEuler => "log_euler",
            Discretization::PredictorCorrector => "predictor_corrector",
        };
        let lines = [
            (
                "figure",
                self.figure
                    .map(|f| f.to_string())
                    .unwrap_or_else(|| "custom".into()),
            ),
            ("curve", curve),
            ("vol", vol_to_string(&self.vol)?),
            ("t_star", sig12(self.t_star)),
            ("delta", sig12(self.delta)),
            ("method", self.method.as_str().into()),
            ("fixed_maturity", opt(self.fixed_maturity)),
            ("fixed_ttm", opt(self.fixed_ttm)),
            ("paths", self.n_paths.to_string()),
            ("steps_per_period", self.steps_per_period.to_string()),
            ("seed", self.seed.to_string()),
            ("antithetic", self.antithetic.to_string()),
            ("scheme", scheme.into()),
            ("libor_window_start", sig12(self.libor_window.0)),
            ("libor_window_end", sig12(self.libor_window.1)),
            ("impvol_period_start", sig12(self.impvol_period_start)),
            ("impvol_points", self.impvol_points.to_string()),
            ("output_dir", self.output_dir.display().to_string()),
        ];
        Ok(lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(id) = self.figure {
            let (curve, lambda2, t_star, fm, ttm) =
                table_row(id).ok_or_else(|| Error::Config(format!("unknown figure {id}")))?;
            let vol = if lambda2 {
                VolatilitySpec::lambda2()
            } else {
                VolatilitySpec::lambda1()
            };
            let mismatch = |field: &str| {
                Err(Error::Config(format!(
                    "figure {id}: {field} differs from the figure preset; use figure = custom to change it"
                )))
            };
            if self.curve != CurveSource::Scenario(curve) {
                return mismatch("curve");
            }
            if self.vol != vol {
                return mismatch("vol");
            }
            if self.t_star != t_star || self.delta != 0.25 {
                return mismatch("t_star/delta");
            }
            if self.fixed_maturity != fm || self.fixed_ttm != ttm {
                return mismatch("fixed_maturity/fixed_ttm");
            }
        }
        let tenor = self.tenor()?;
        MCConfig {
            n_paths: self.n_paths,
            steps_per_period: self.steps_per_period,
            scheme: self.scheme,
            measure: MeasureTag::SpotRolling,
            seed: self.seed,
            antithetic: self.antithetic,
        }
        .validate(&tenor)?;
        if let Some(m) = self.fixed_maturity {
            if !(m > 0.0 && m < self.t_star) {
                return Err(Error::Config(format!(
                    "fixed_maturity {m} outside (0, {})",
                    self.t_star
                )));
            }
        }
        if let Some(x) = self.fixed_ttm {
            if !(x > 0.0 && x < self.t_star) {
                return Err(Error::Config(format!(
                    "fixed_ttm {x} outside (0, {})",
                    self.t_star
                )));
            }
        }
        let (a, b) = self.libor_window;
        if !(a >= 0.0 && a < b) {
            return Err(Error::Config(format!("libor window [{a}, {b}] is empty")));
        }
        Ok(())
    }

    pub fn tenor(&self) -> Result<TenorStructure> {
        TenorStructure::with_horizon(self.delta, self.t_star)
    }

    pub fn initial_curve(&self, tenor: &TenorStructure) -> Result<InitialCurve> {
        let curve = match &self.curve {
            CurveSource::Scenario(s) => build_initial_curve(*s, tenor)?,
            CurveSource::File(p) => {
                let f = File::open(p).map_err(|e| {
                    Error::Config(format!("cannot open curve {}: {e}", p.display()))
                })?;
                InitialCurve::read_csv(f)?
            }
        };
        curve.check_tenor(tenor)?;
        Ok(curve)
    }

    pub fn mc_config(&self) -> MCConfig {
        MCConfig {
            n_paths: self.n_paths,
            steps_per_period: self.steps_per_period,
            scheme: self.scheme,
            measure: MeasureTag::SpotRolling,
            seed: self.seed,
            antithetic: self.antithetic,
        }
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(
        path,
    )?)))
}

/// Dense maturities covering `[a, b]` period by period: each tenor date
/// appears as `T_i + offset` and `T_i - offset`, with
/// [`SWEEP_POINTS_PER_PERIOD`] - 1 interior points in between.
pub fn dense_grid(tenor: &TenorStructure, a: f64, b: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let delta = tenor.delta();
    for i in 0..tenor.n() {
        let (lo, hi) = (tenor.date(i), tenor.date(i + 1));
        if hi <= a + TENOR_DATE_TOL || lo >= b - TENOR_DATE_TOL {
            continue;
        }
        out.push(lo + SWEEP_EDGE_OFFSET);
        for m in 1..SWEEP_POINTS_PER_PERIOD {
            out.push(lo + delta * m as f64 / SWEEP_POINTS_PER_PERIOD as f64);
        }
        out.push(hi - SWEEP_EDGE_OFFSET);
    }
    out.retain(|&t| t >= a - TENOR_DATE_TOL && t <= b + TENOR_DATE_TOL);
    out
}

/// Column of a term-structure sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepColumn {
    Model(Method),
    Baseline,
}

impl SweepColumn {
    pub fn label(&self) -> &'static str {
        match self {
            SweepColumn::Model(m) => m.label(),
            SweepColumn::Baseline => "baseline",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermStructureSweep {
    pub columns: Vec<SweepColumn>,
    /// `(maturity, f(0, T) per column)`
    pub forwards: Vec<(f64, Vec<f64>)>,
    /// `(start, L(0, T) per column)`
    pub libors: Vec<(f64, Vec<f64>)>,
}

pub fn term_structure_sweep(cfg: &ScenarioConfig) -> Result<TermStructureSweep> {
    let tenor = cfg.tenor()?;
    let curve = cfg.initial_curve(&tenor)?;
    let state = ModelState::initial(&tenor, &curve)?;
    let mut columns: Vec<SweepColumn> = cfg
        .method
        .methods()
        .into_iter()
        .map(SweepColumn::Model)
        .collect();
    if cfg.method.includes_baseline() {
        columns.push(SweepColumn::Baseline);
    }
    let base = LogLinearDiscount;
    let forward = |col: SweepColumn, t: f64| match col {
        SweepColumn::Model(m) => Interpolator::new(InterpolationScheme::from_method(m), &cfg.vol)
            .instantaneous_forward(&state, t, ForwardMode::Analytic),
        SweepColumn::Baseline => base.forward(&curve, &tenor, t),
    };
    let libor = |col: SweepColumn, t: f64| match col {
        SweepColumn::Model(m) => Interpolator::new(InterpolationScheme::from_method(m), &cfg.vol)
            .interpolated_libor(&state, t),
        SweepColumn::Baseline => base.libor(&curve, &tenor, t),
    };
    let forwards = dense_grid(&tenor, tenor.t0(), tenor.end())
        .into_iter()
        .map(|t| {
            Ok((
                t,
                columns
                    .iter()
                    .map(|&c| forward(c, t))
                    .collect::<Result<Vec<_>>>()?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let last_start = tenor.end() - tenor.delta();
    let (a, b) = cfg.libor_window;
    let (a, b) = if b > last_start + TENOR_DATE_TOL {
        (a.min(last_start), last_start)
    } else {
        (a, b)
    };
    let mut starts = dense_grid(&tenor, a, b);
    for t in [a, b] {
        if !starts
            .iter()
            .any(|s| (s - t).abs() <= 2.0 * SWEEP_EDGE_OFFSET)
        {
            starts.push(t);
        }
    }
    starts.sort_by(f64::total_cmp);
    let libors = starts
        .into_iter()
        .map(|t| {
            Ok((
                t,
                columns
                    .iter()
                    .map(|&c| libor(c, t))
                    .collect::<Result<Vec<_>>>()?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TermStructureSweep {
        columns,
        forwards,
        libors,
    })
}

/// Writes `forward_rates.csv` and `libor_rates.csv` into the output directory.
pub fn run_term_structure_sweep(cfg: &ScenarioConfig) -> Result<Vec<PathBuf>> {
    let sweep = term_structure_sweep(cfg)?;
    let mut written = Vec::new();
    for (name, first, rows) in [
        ("forward_rates.csv", "maturity", &sweep.forwards),
        ("libor_rates.csv", "start", &sweep.libors),
    ] {
        let path = cfg.output_dir.join(name);
        let mut w = csv_writer(&path)?;
        let mut header = vec![first.to_string()];
        header.extend(sweep.columns.iter().map(|c| c.label().to_string()));
        w.write_record(&header)?;
        for (t, vals) in rows {
            let mut rec = vec![sig12(*t)];
            rec.extend(vals.iter().map(|v| sig12(*v)));
            w.write_record(&rec)?;
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateKind {
    ShortRate,
    FixedMaturity,
    FixedTtm,
}

impl RateKind {
    pub fn label(&self) -> &'static str {
        match self {
            RateKind::ShortRate => "short_rate",
            RateKind::FixedMaturity => "fixed_maturity",
            RateKind::FixedTtm => "fixed_ttm",
        }
    }
}

/// One sample of a dynamics trace. `side` is set for the two rows emitted
/// at a time where the traced rate jumps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub time: f64,
    pub kind: RateKind,
    /// Maturity for [`RateKind::FixedMaturity`], time to maturity for
    /// [`RateKind::FixedTtm`], zero for the short rate.
    pub parameter: f64,
    pub side: Option<Side>,
    pub value: f64,
}

/// Times at which a fixed time-to-maturity forward changes accrual period:
/// `T_i - ttm` inside `[t0, end)` for interior tenor dates `T_i`.
pub fn ttm_jump_times(tenor: &TenorStructure, ttm: f64, end: f64) -> Vec<f64> {
    (1..tenor.n())
        .map(|i| tenor.date(i) - ttm)
        .filter(|&t| t > tenor.t0() + TENOR_DATE_TOL && t < end - TENOR_DATE_TOL)
        .collect()
}

/// Simulates one path under the rolling-spot measure and traces the short
/// rate, `f(t, fixed_maturity)` and `f(t, t + fixed_ttm)` on a grid of
/// `delta / 64` plus every jump time, over `[0, T_{N-1}]`.
pub fn dynamics_trace(cfg: &ScenarioConfig, method: Method) -> Result<Vec<TraceRow>> {
    let tenor = cfg.tenor()?;
    let curve = cfg.initial_curve(&tenor)?;
    let end = tenor.date(tenor.n() - 1);
    let step = tenor.delta() / SWEEP_POINTS_PER_PERIOD as f64;
    let count = ((end - tenor.t0()) / step).round() as usize;
    let mut times: Vec<f64> = (0..=count).map(|m| tenor.t0() + m as f64 * step).collect();
    let ttm_jumps = cfg
        .fixed_ttm
        .map(|x| ttm_jump_times(&tenor, x, end))
        .unwrap_or_default();
    times.extend(ttm_jumps.iter().copied());
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() <= TENOR_DATE_TOL);

    let mc = cfg.mc_config();
    let evolver = PathEvolver::new(&curve, &tenor, &cfg.vol, &mc, end, &times)?;
    let mut normals = GaussianStream::for_path(cfg.seed, 0, false);
    let snaps = evolver.run_path(&mut normals, &mut evolver.workspace())?;
    let ip = Interpolator::new(InterpolationScheme::from_method(method), &cfg.vol);
    let mode = ForwardMode::Analytic;

    let mut rows = Vec::new();
    for s in &snaps {
        let t = s.time();
        let mut push = |kind, parameter, side, value| {
            rows.push(TraceRow {
                time: t,
                kind,
                parameter,
                side,
                value,
            })
        };
        if tenor.is_tenor_date(t) && t > tenor.t0() + TENOR_DATE_TOL {
            push(
                RateKind::ShortRate,
                0.0,
                Some(Side::Left),
                ip.instantaneous_forward_limit(s, t, Side::Left, mode)?,
            );
            push(
                RateKind::ShortRate,
                0.0,
                Some(Side::Right),
                ip.short_rate(s, mode)?,
            );
        } else {
            push(RateKind::ShortRate, 0.0, None, ip.short_rate(s, mode)?);
        }
        if let Some(m) = cfg.fixed_maturity {
            if t < m - TENOR_DATE_TOL {
                push(
                    RateKind::FixedMaturity,
                    m,
                    None,
                    ip.instantaneous_forward_limit(s, m, Side::Right, mode)?,
                );
            }
        }
        if let Some(x) = cfg.fixed_ttm {
            let m = t + x;
            if m < tenor.end() - TENOR_DATE_TOL {
                if tenor.is_tenor_date(m) {
                    for side in [Side::Left, Side::Right] {
                        push(
                            RateKind::FixedTtm,
                            x,
                            Some(side),
                            ip.instantaneous_forward_limit(s, m, side, mode)?,
                        );
                    }
                } else {
                    push(
                        RateKind::FixedTtm,
                        x,
                        None,
                        ip.instantaneous_forward(s, m, mode)?,
                    );
                }
            }
        }
    }
    Ok(rows)
}

fn side_label(side: Option<Side>) -> &'static str {
    match side {
        Some(Side::Left) => "left",
        Some(Side::Right) => "right",
        None => "",
    }
}

/// Writes `dynamics_<method>.csv` for each selected method.
pub fn run_dynamics_trace(cfg: &ScenarioConfig) -> Result<Vec<PathBuf>> {
    let methods = cfg.method.methods();
    if methods.is_empty() {
        return Err(Error::Config(
            "dynamics traces need method 1, 2 or all".into(),
        ));
    }
    let mut written = Vec::new();
    for m in methods {
        let rows = dynamics_trace(cfg, m)?;
        let path = cfg.output_dir.join(format!("dynamics_{}.csv", m.label()));
        let mut w = csv_writer(&path)?;
        w.write_record(["time", "rate_kind", "maturity_or_ttm", "limit", "value"])?;
        for r in rows {
            w.write_record([
                sig12(r.time),
                r.kind.label().to_string(),
                sig12(r.parameter),
                side_label(r.side).to_string(),
                sig12(r.value),
            ])?;
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpvolRow {
    pub start: f64,
    pub method: Method,
    pub strike: f64,
    pub mc_price: f64,
    pub mc_std_error: f64,
    pub mc_implied: f64,
    pub mc_lo: f64,
    pub mc_hi: f64,
    pub approx_implied: f64,
    /// Method 2 evaluated part of the rate with the method-1 formula.
    pub fallback: bool,
}

/// Caplet start dates: the period's endpoints and `points` equally spaced
/// interior dates.
pub fn impvol_starts(period_start: f64, delta: f64, points: usize) -> Vec<f64> {
    (0..=points + 1)
        .map(|i| period_start + delta * i as f64 / (points + 1) as f64)
        .collect()
}

/// Implied volatility strip for one method: strikes at 1.25 times the
/// interpolated forward, MC implied vol with a `band_k` standard error band
/// and the frozen-coefficient approximation.
pub fn impvol_strip(cfg: &ScenarioConfig, method: Method, band_k: f64) -> Result<Vec<ImpvolRow>> {
    let tenor = cfg.tenor()?;
    let curve = cfg.initial_curve(&tenor)?;
    let scheme = InterpolationScheme::from_method(method);
    let starts = impvol_starts(cfg.impvol_period_start, tenor.delta(), cfg.impvol_points);
    let mut specs = Vec::with_capacity(starts.len());
    for &t in &starts {
        let probe = CapletSpec::new(t, tenor.delta(), 1.0);
        let (f, _) = caplet_forward_and_discount(&probe, &curve, &tenor, &cfg.vol, scheme)?;
        specs.push(CapletSpec::new(t, tenor.delta(), 1.25 * f));
    }
    let ests = price_caplet_strip_mc(&specs, &curve, &tenor, &cfg.vol, scheme, &cfg.mc_config())?;
    let ip = Interpolator::new(scheme, &cfg.vol);
    specs
        .iter()
        .zip(ests)
        .map(|(spec, est)| {
            let (f, p) = caplet_forward_and_discount(spec, &curve, &tenor, &cfg.vol, scheme)?;
            let band = implied_band(&est, band_k, f, spec.strike, spec.start, p, spec.accrual)?;
            Ok(ImpvolRow {
                start: spec.start,
                method,
                strike: spec.strike,
                mc_price: est.mean,
                mc_std_error: est.std_error,
                mc_implied: band.mid,
                mc_lo: band.lo,
                mc_hi: band.hi,
                approx_implied: approx_implied_vol(spec, &curve, &tenor, &cfg.vol, scheme)?,
                fallback: ip.libor_falls_back(&tenor, spec.start),
            })
        })
        .collect()
}

/// Writes `impvol.csv` with a two standard error band for each selected method.
pub fn run_impvol_experiment(cfg: &ScenarioConfig) -> Result<Vec<PathBuf>> {
    let methods = cfg.method.methods();
    if methods.is_empty() {
        return Err(Error::Config(
            "implied volatility runs need method 1, 2 or all".into(),
        ));
    }
    let path = cfg.output_dir.join("impvol.csv");
    let mut rows = Vec::new();
    for m in methods {
        rows.extend(impvol_strip(cfg, m, 2.0)?);
    }
    let mut w = csv_writer(&path)?;
    w.write_record([
        "T",
        "mc_implied",
        "mc_lo",
        "mc_hi",
        "approx_implied",
        "method",
        "strike",
        "mc_price",
        "mc_std_error",
        "fallback",
    ])?;
    for r in rows {
        w.write_record([
            sig12(r.start),
            sig12(r.mc_implied),
            sig12(r.mc_lo),
            sig12(r.mc_hi),
            sig12(r.approx_implied),
            r.method.label().to_string(),
            sig12(r.strike),
            sig12(r.mc_price),
            sig12(r.mc_std_error),
            r.fallback.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(vec![path])
}

/// Writes the config that produced a run next to its outputs.
pub fn write_config_echo(cfg: &ScenarioConfig) -> Result<PathBuf> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    let path = cfg.output_dir.join("config.txt");
    let mut f = File::create(&path)?;
    f.write_all(cfg.serialize()?.as_bytes())?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_presets_match_the_table() {
        let rows = [
            (1, 1, false, 10.0, None, None),
            (2, 1, false, 10.0, None, None),
            (3, 2, false, 10.0, None, None),
            (4, 3, false, 2.25, Some(1.8125), Some(0.3125)),
            (5, 3, false, 2.25, Some(1.8125), Some(0.3125)),
            (6, 3, true, 4.25, None, None),
            (7, 3, true, 4.25, None, None),
        ];
        for (id, curve, l2, t_star, fm, ttm) in rows {
            let c = ScenarioConfig::figure(id).unwrap();
            assert_eq!(
                c.curve,
                CurveSource::Scenario(CurveScenario::from_id(curve).unwrap())
            );
            assert_eq!(
                c.vol,
                if l2 {
                    VolatilitySpec::lambda2()
                } else {
                    VolatilitySpec::lambda1()
                }
            );
            assert_eq!(
                (c.t_star, c.delta, c.fixed_maturity, c.fixed_ttm),
                (t_star, 0.25, fm, ttm)
            );
            c.validate().unwrap();
        }
        assert!(ScenarioConfig::figure(8).is_err());
    }

    #[test]
    fn config_round_trips() {
        for id in 1..=7 {
            let c = ScenarioConfig::figure(id).unwrap();
            let text = c.serialize().unwrap();
            let back = ScenarioConfig::parse(&text).unwrap();
            assert_eq!(back, c);
            assert_eq!(back.serialize().unwrap(), text);
        }
        let custom = ScenarioConfig::parse(
            "figure = custom\ncurve = 3\nvol = exp2:0.5,0.7,0.1,0.02\nt_star = 3\nmethod = baseline\nfixed_ttm = 0.4\nantithetic = true\npaths = 1000\nscheme = predictor_corrector\n",
        )
        .unwrap();
        assert_eq!(
            ScenarioConfig::parse(&custom.serialize().unwrap()).unwrap(),
            custom
        );
    }

    #[test]
    fn config_errors_name_the_line() {
        let err = |text: &str| ScenarioConfig::parse(text).unwrap_err().to_string();
        assert!(err("figure = 1\nbogus = 3\n").contains("line 2"));
        assert!(err("t_star = ten\n").contains("line 1: t_star"));
        assert!(err("figure = 4\nt_star = 3\n").contains("figure 4"));
        assert!(err("vol = lambda9\n").contains("line 1: vol"));
        assert!(err("paths = 1\n").contains("at least 2"));
        assert!(err("t_star = 2.1\n").contains("multiple"));
        assert!(err("seed = 1\nseed = 2\n").contains("duplicate"));
        assert!(ScenarioConfig::parse("figure = 6\npaths = 5000 # quick\n").is_ok());
    }

    #[test]
    fn dense_grid_avoids_tenor_dates() {
        let ts = TenorStructure::with_horizon(0.25, 2.0).unwrap();
        let g = dense_grid(&ts, 0.0, 2.0);
        assert_eq!(g.len(), 8 * (SWEEP_POINTS_PER_PERIOD + 1));
        assert!(g.iter().all(|&t| !ts.is_tenor_date(t)));
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(g[0], SWEEP_EDGE_OFFSET);
    }

    #[test]
    fn flat_curve_sawtooth_envelope() {
        let mut cfg = ScenarioConfig::default();
        let tenor = TenorStructure::with_horizon(0.25, 10.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let flat = dir.path().join("flat.csv");
        InitialCurve::flat(0.05, &tenor)
            .unwrap()
            .write_csv(&tenor, File::create(&flat).unwrap())
            .unwrap();
        cfg.curve = CurveSource::File(flat);
        let sweep = term_structure_sweep(&cfg).unwrap();
        assert_eq!(sweep.columns.len(), 3);
        let (lo, hi) = (0.05 / 1.0125, 0.05);
        for (t, v) in &sweep.forwards {
            let k = tenor.eta(*t).unwrap();
            let expect = 0.05 / (1.0 + (tenor.date(k) - t) * 0.05);
            assert!((v[0] - expect).abs() < 1e-12);
            assert!(v[0] >= lo - 1e-12 && v[0] <= hi + 1e-12);
            assert!((v[2] - 1.0125f64.ln() / 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn baseline_sweep_is_stepwise_constant() {
        let cfg = ScenarioConfig::figure(1).unwrap();
        let cfg = ScenarioConfig {
            method: MethodChoice::Baseline,
            ..cfg
        };
        let sweep = term_structure_sweep(&cfg).unwrap();
        let tenor = cfg.tenor().unwrap();
        for w in sweep.forwards.windows(2) {
            if tenor.eta(w[0].0).unwrap() == tenor.eta(w[1].0).unwrap() {
                assert_eq!(w[0].1[0], w[1].1[0]);
            }
        }
    }

    #[test]
    fn ttm_jump_times_at_three_quarters() {
        let ts = TenorStructure::with_horizon(0.25, 2.25).unwrap();
        let j = ttm_jump_times(&ts, 0.3125, 2.0);
        assert_eq!(&j[..3], &[0.1875, 0.4375, 0.6875]);
        assert!(j.iter().all(|t| ((t / 0.25).fract() - 0.75).abs() < 1e-12));
    }

    #[test]
    fn sweep_outputs_are_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ScenarioConfig::figure(4).unwrap();
        cfg.output_dir = dir.path().join("a");
        let a = run_dynamics_trace(&cfg).unwrap();
        cfg.output_dir = dir.path().join("b");
        let b = run_dynamics_trace(&cfg).unwrap();
        assert_eq!(std::fs::read(&a[0]).unwrap(), std::fs::read(&b[0]).unwrap());
    }
}
