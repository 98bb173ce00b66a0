//! Deterministic LIBOR volatility functions `lambda(t, T)` and their integrated
//! (co)variances.
//!
//! All integrals are closed form (or exact bucket sums), so the correction
//! factor, the drift terms and the frozen-coefficient implied volatility never
//! need quadrature at run time.

use crate::error::{domain, Error, Result};
use crate::tenor::TENOR_DATE_TOL;

/// Deterministic `d`-factor volatility of the discrete-tenor forward LIBORs.
#[derive(Debug, Clone, PartialEq)]
pub enum VolatilitySpec {
    /// One factor, constant level.
    Flat { level: f64 },
    /// Two factors `(a1 e^{-b1 (T-t)}, a2 e^{-b2 (T-t)})`.
    TwoFactorExponential { a1: f64, b1: f64, a2: f64, b2: f64 },
    /// Constant `d`-vectors on (time bucket, maturity bucket) cells.
    PiecewiseConstant(PiecewiseConstantVol),
}

/// Piecewise-constant volatility table.
///
/// Time bucket `a` covers `[time_breaks[a], time_breaks[a+1])`, the last one
/// is open-ended. Maturity column `b` covers `(maturity_breaks[b-1],
/// maturity_breaks[b]]`; maturities past the last break use the last column.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstantVol {
    time_breaks: Vec<f64>,
    maturity_breaks: Vec<f64>,
    values: Vec<Vec<Vec<f64>>>,
    dim: usize,
}

impl PiecewiseConstantVol {
    pub fn new(
        time_breaks: Vec<f64>,
        maturity_breaks: Vec<f64>,
        values: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        if time_breaks.is_empty() || time_breaks[0] > 0.0 || !increasing(&time_breaks) {
            return Err(Error::Config(
                "time breaks must be increasing and start at or before 0".into(),
            ));
        }
        if maturity_breaks.is_empty() || !increasing(&maturity_breaks) {
            return Err(Error::Config("maturity breaks must be increasing".into()));
        }
        if values.len() != time_breaks.len()
            || values.iter().any(|row| row.len() != maturity_breaks.len())
        {
            return Err(Error::Config(format!(
                "vol table must be {} x {}",
                time_breaks.len(),
                maturity_breaks.len()
            )));
        }
        let dim = values[0][0].len();
        if dim == 0 {
            return Err(Error::Config("vol vectors must be non-empty".into()));
        }
        for cell in values.iter().flatten() {
            if cell.len() != dim || cell.iter().any(|x| !x.is_finite()) {
                return Err(Error::Config(
                    "vol vectors must share one dimension and be finite".into(),
                ));
            }
        }
        Ok(Self {
            time_breaks,
            maturity_breaks,
            values,
            dim,
        })
    }

    fn bucket(&self, t: f64) -> usize {
        self.time_breaks
            .partition_point(|&b| b <= t)
            .saturating_sub(1)
    }

    fn column(&self, maturity: f64) -> usize {
        self.maturity_breaks
            .partition_point(|&b| b < maturity - TENOR_DATE_TOL)
            .min(self.maturity_breaks.len() - 1)
    }

    fn cell(&self, t: f64, maturity: f64) -> &[f64] {
        &self.values[self.bucket(t)][self.column(maturity)]
    }

    fn component_cov(&self, c: usize, ta: f64, tb: f64, s0: f64, s1: f64) -> f64 {
        let (ca, cb) = (self.column(ta), self.column(tb));
        let mut total = 0.0;
        for (a, row) in self.values.iter().enumerate() {
            let lo = self.time_breaks[a].max(s0);
            let hi = self
                .time_breaks
                .get(a + 1)
                .copied()
                .unwrap_or(f64::INFINITY)
                .min(s1);
            if hi > lo {
                total += (hi - lo) * row[ca][c] * row[cb][c];
            }
        }
        total
    }
}

impl VolatilitySpec {
    /// Flat 30% one-factor volatility.
    pub fn lambda1() -> Self {
        VolatilitySpec::Flat { level: 0.3 }
    }

    /// Two-factor exponentially decaying volatility `(0.6 e^{-0.8 x}, 0.1 e^{-0.01 x})`.
    pub fn lambda2() -> Self {
        VolatilitySpec::TwoFactorExponential {
            a1: 0.6,
            b1: 0.8,
            a2: 0.1,
            b2: 0.01,
        }
    }

    /// Volatility that vanishes identically (one factor).
    pub fn zero() -> Self {
        VolatilitySpec::Flat { level: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = match self {
            VolatilitySpec::Flat { level } => level.is_finite(),
            VolatilitySpec::TwoFactorExponential { a1, b1, a2, b2 } => {
                [a1, b1, a2, b2].iter().all(|x| x.is_finite())
            }
            VolatilitySpec::PiecewiseConstant(_) => true,
        };
        if finite {
            Ok(())
        } else {
            Err(Error::Config("volatility parameters must be finite".into()))
        }
    }

    /// Number of driving factors `d`.
    pub fn dim(&self) -> usize {
        match self {
            VolatilitySpec::Flat { .. } => 1,
            VolatilitySpec::TwoFactorExponential { .. } => 2,
            VolatilitySpec::PiecewiseConstant(p) => p.dim,
        }
    }

    /// `lambda(t, T)` as a `d`-vector.
    pub fn vol(&self, t: f64, maturity: f64) -> Result<Vec<f64>> {
        if !(t.is_finite() && maturity.is_finite()) || t < -TENOR_DATE_TOL {
            return domain(format!("vol({t}, {maturity}) has invalid arguments"));
        }
        if t > maturity + TENOR_DATE_TOL {
            return domain(format!("vol({t}, {maturity}): t is past the maturity"));
        }
        let mut out = vec![0.0; self.dim()];
        self.vol_into(t, maturity, &mut out);
        Ok(out)
    }

    /// Unchecked evaluation into a caller-supplied buffer of length `dim()`.
    pub(crate) fn vol_into(&self, t: f64, maturity: f64, out: &mut [f64]) {
        match self {
            VolatilitySpec::Flat { level } => out[0] = *level,
            VolatilitySpec::TwoFactorExponential { a1, b1, a2, b2 } => {
                let x = maturity - t;
                out[0] = a1 * (-b1 * x).exp();
                out[1] = a2 * (-b2 * x).exp();
            }
            VolatilitySpec::PiecewiseConstant(p) => out.copy_from_slice(p.cell(t, maturity)),
        }
    }

    /// `int_{s0}^{s1} lambda_c(s, ta) lambda_c(s, tb) ds` for one factor `c`.
    fn component_cov(&self, c: usize, ta: f64, tb: f64, s0: f64, s1: f64) -> f64 {
        let len = s1 - s0;
        if len <= 0.0 {
            return 0.0;
        }
        match self {
            VolatilitySpec::Flat { level } => level * level * len,
            VolatilitySpec::TwoFactorExponential { a1, b1, a2, b2 } => {
                let (a, b) = if c == 0 { (*a1, *b1) } else { (*a2, *b2) };
                if b == 0.0 {
                    return a * a * len;
                }
                // a^2 e^{-b(ta+tb-2s1)} (1 - e^{-2b len}) / (2b)
                a * a * (-b * (ta + tb - 2.0 * s1)).exp() * (-(-2.0 * b * len).exp_m1()) / (2.0 * b)
            }
            VolatilitySpec::PiecewiseConstant(p) => p.component_cov(c, ta, tb, s0, s1),
        }
    }

    /// `int_{s0}^{s1} lambda(s, ta) . lambda(s, tb) ds`.
    pub fn integrated_cov(&self, ta: f64, tb: f64, s0: f64, s1: f64) -> Result<f64> {
        let vals = [ta, tb, s0, s1];
        if vals.iter().any(|x| !x.is_finite()) {
            return domain("integrated_cov arguments must be finite");
        }
        if s0 < -TENOR_DATE_TOL || s0 > s1 + TENOR_DATE_TOL {
            return domain(format!("integration limits [{s0}, {s1}] are invalid"));
        }
        if s1 > ta.min(tb) + TENOR_DATE_TOL {
            return domain(format!("upper limit {s1} exceeds maturity {}", ta.min(tb)));
        }
        Ok(self.integrated_cov_unchecked(ta, tb, s0, s1))
    }

    pub(crate) fn integrated_cov_unchecked(&self, ta: f64, tb: f64, s0: f64, s1: f64) -> f64 {
        (0..self.dim())
            .map(|c| self.component_cov(c, ta, tb, s0, s1))
            .sum()
    }

    /// `int_{s0}^{s1} |lambda(s, T)|^2 ds`.
    pub fn integrated_var(&self, maturity: f64, s0: f64, s1: f64) -> Result<f64> {
        self.integrated_cov(maturity, maturity, s0, s1)
    }

    /// `sqrt(int_{s0}^{s1} |lambda(s, T)|^2 ds)`.
    pub fn lambda_bar(&self, maturity: f64, s0: f64, s1: f64) -> Result<f64> {
        self.integrated_var(maturity, s0, s1).map(f64::sqrt)
    }

    /// Per-factor root-mean-square loading over `[s0, s1]`, signed like
    /// `lambda(s0, T)`.
    ///
    /// For factor-separable specs (all variants here) the loadings reproduce
    /// the exact step covariance `int lambda(s,T_a) lambda(s,T_b)^T ds` of any
    /// pair of maturities.
    pub(crate) fn step_loading(&self, s0: f64, s1: f64, maturity: f64, out: &mut [f64]) {
        self.vol_into(s0, maturity, out);
        let len = s1 - s0;
        if len <= 0.0 {
            return;
        }
        match self {
            VolatilitySpec::Flat { .. } => {}
            _ => {
                for (c, v) in out.iter_mut().enumerate() {
                    let var = self.component_cov(c, maturity, maturity, s0, s1);
                    *v = (var / len).sqrt().copysign(*v);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Adaptive Simpson quadrature, absolute tolerance `tol`.
    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
            let m = 0.5 * (a + b);
            let fm = f(m);
            (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
        }
        #[allow(clippy::too_many_arguments)]
        fn recurse(
            f: &dyn Fn(f64) -> f64,
            a: f64,
            fa: f64,
            b: f64,
            fb: f64,
            whole: f64,
            m: f64,
            fm: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let (lm, flm, left) = simpson(f, a, fa, m, fm);
            let (rm, frm, right) = simpson(f, m, fm, b, fb);
            let delta = left + right - whole;
            if depth == 0 || delta.abs() <= 15.0 * tol {
                return left + right + delta / 15.0;
            }
            recurse(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
        }
        let (fa, fb) = (f(a), f(b));
        let (m, fm, whole) = simpson(f, a, fa, b, fb);
        recurse(f, a, fa, b, fb, whole, m, fm, tol, 50)
    }

    fn quad_cov(spec: &VolatilitySpec, ta: f64, tb: f64, s0: f64, s1: f64) -> f64 {
        let f = |s: f64| {
            let x = spec.vol(s, ta).unwrap();
            let y = spec.vol(s, tb).unwrap();
            x.iter().zip(&y).map(|(p, q)| p * q).sum::<f64>()
        };
        adaptive_simpson(&f, s0, s1, 1e-12)
    }

    #[test]
    fn vol_examples() {
        assert_eq!(VolatilitySpec::lambda1().vol(0.7, 3.0).unwrap(), vec![0.3]);
        let l2 = VolatilitySpec::lambda2();
        assert_eq!(l2.vol(2.0, 2.0).unwrap(), vec![0.6, 0.1]);
        let v = l2.vol(1.0, 2.0).unwrap();
        assert_relative_eq!(v[0], 0.6 * (-0.8f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(v[1], 0.1 * (-0.01f64).exp(), max_relative = 1e-15);
        assert!((v[0] - 0.26960).abs() < 5e-6 && (v[1] - 0.09900).abs() < 5e-6);
    }

    #[test]
    fn vol_rejects_time_past_maturity() {
        assert!(VolatilitySpec::lambda1().vol(2.0, 1.0).is_err());
    }

    #[test]
    fn integrated_examples() {
        let l1 = VolatilitySpec::lambda1();
        assert_relative_eq!(
            l1.integrated_cov(2.0, 3.0, 0.0, 1.0).unwrap(),
            0.09,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            l1.integrated_var(2.5, 0.0, 2.5).unwrap(),
            0.09 * 2.5,
            max_relative = 1e-15
        );

        let l2 = VolatilitySpec::lambda2();
        let closed = 0.36 * (1.0 - (-1.6f64).exp()) / 1.6 + 0.01 * (1.0 - (-0.02f64).exp()) / 0.02;
        let quad = quad_cov(&l2, 1.0, 1.0, 0.0, 1.0);
        let got = l2.integrated_var(1.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(got, closed, max_relative = 1e-13);
        assert_relative_eq!(got, quad, max_relative = 1e-10);
        assert!((got - 0.189474).abs() < 1e-6);
        assert!((got.sqrt() - 0.43529).abs() < 1e-5);
        assert_eq!(l2.integrated_var(1.0, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(l2.integrated_cov(1.0, 2.0, 0.4, 0.4).unwrap(), 0.0);
    }

    #[test]
    fn integrated_cov_rejects_bad_limits() {
        let l2 = VolatilitySpec::lambda2();
        assert!(l2.integrated_cov(1.0, 2.0, 0.5, 0.2).is_err());
        assert!(l2.integrated_cov(1.0, 2.0, 0.0, 1.5).is_err());
        assert!(l2.integrated_cov(1.0, 2.0, -1.0, 0.5).is_err());
    }

    fn piecewise() -> VolatilitySpec {
        let values = vec![
            vec![vec![0.2, 0.05], vec![0.25, 0.04], vec![0.3, 0.02]],
            vec![vec![0.15, 0.06], vec![0.18, 0.05], vec![0.22, 0.01]],
            vec![vec![0.1, 0.07], vec![0.12, 0.06], vec![0.2, 0.03]],
        ];
        VolatilitySpec::PiecewiseConstant(
            PiecewiseConstantVol::new(vec![0.0, 0.7, 1.3], vec![1.0, 2.0, 3.0], values).unwrap(),
        )
    }

    #[test]
    fn closed_forms_match_quadrature_on_random_tuples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for spec in [
            VolatilitySpec::lambda1(),
            VolatilitySpec::lambda2(),
            piecewise(),
        ] {
            for _ in 0..100 {
                let ta: f64 = rng.gen_range(0.3..4.0);
                let tb: f64 = rng.gen_range(0.3..4.0);
                let hi = ta.min(tb);
                let mut s0: f64 = rng.gen_range(0.0..hi);
                let mut s1: f64 = rng.gen_range(0.0..hi);
                if s0 > s1 {
                    std::mem::swap(&mut s0, &mut s1);
                }
                let exact = spec.integrated_cov(ta, tb, s0, s1).unwrap();
                let quad = if let VolatilitySpec::PiecewiseConstant(_) = spec {
                    // integrand is discontinuous; integrate bucket by bucket
                    let mut knots = vec![s0, s1, 0.7, 1.3];
                    knots.retain(|k| *k >= s0 && *k <= s1);
                    knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    knots
                        .windows(2)
                        .map(|w| {
                            let m = 0.5 * (w[0] + w[1]);
                            let x = spec.vol(m, ta).unwrap();
                            let y = spec.vol(m, tb).unwrap();
                            (w[1] - w[0]) * x.iter().zip(&y).map(|(p, q)| p * q).sum::<f64>()
                        })
                        .sum()
                } else {
                    quad_cov(&spec, ta, tb, s0, s1)
                };
                let scale = exact.abs().max(1e-300);
                assert!(
                    (exact - quad).abs() / scale <= 1e-10 || (exact - quad).abs() < 1e-14,
                    "{spec:?} {ta} {tb} [{s0},{s1}]: {exact} vs {quad}"
                );
            }
        }
    }

    #[test]
    fn step_loading_reproduces_step_covariance() {
        let l2 = VolatilitySpec::lambda2();
        let (s0, s1) = (1.0, 1.0625);
        let (ta, tb) = (1.5, 2.25);
        let mut va = [0.0; 2];
        let mut vb = [0.0; 2];
        l2.step_loading(s0, s1, ta, &mut va);
        l2.step_loading(s0, s1, tb, &mut vb);
        let approx = (va[0] * vb[0] + va[1] * vb[1]) * (s1 - s0);
        let exact = l2.integrated_cov(ta, tb, s0, s1).unwrap();
        assert_relative_eq!(approx, exact, max_relative = 1e-13);
    }

    #[test]
    fn piecewise_validation() {
        assert!(PiecewiseConstantVol::new(vec![0.5], vec![1.0], vec![vec![vec![0.1]]]).is_err());
        assert!(
            PiecewiseConstantVol::new(vec![0.0], vec![1.0, 2.0], vec![vec![vec![0.1]]]).is_err()
        );
        assert!(PiecewiseConstantVol::new(
            vec![0.0],
            vec![1.0, 2.0],
            vec![vec![vec![0.1], vec![0.1, 0.2]]]
        )
        .is_err());
    }

    proptest::proptest! {
        #[test]
        fn cov_symmetric_additive_and_bounded(
            ta in 0.5f64..5.0, tb in 0.5f64..5.0, u in 0.0f64..1.0, v in 0.0f64..1.0, w in 0.0f64..1.0
        ) {
            for spec in [VolatilitySpec::lambda2(), piecewise()] {
                let hi = ta.min(tb);
                let mut knots = [u * hi, v * hi, w * hi];
                knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let [s0, sm, s1] = knots;
                let c = spec.integrated_cov(ta, tb, s0, s1).unwrap();
                let c_sym = spec.integrated_cov(tb, ta, s0, s1).unwrap();
                proptest::prop_assert!((c - c_sym).abs() <= 1e-15 * c.abs().max(1.0));
                let split = spec.integrated_cov(ta, tb, s0, sm).unwrap()
                    + spec.integrated_cov(ta, tb, sm, s1).unwrap();
                proptest::prop_assert!((c - split).abs() <= 1e-13 * c.abs().max(1e-3));
                let va = spec.integrated_var(ta, s0, s1).unwrap();
                let vb = spec.integrated_var(tb, s0, s1).unwrap();
                proptest::prop_assert!(c * c <= va * vb * (1.0 + 1e-12) + 1e-300);
            }
        }
    }
}
