//! Time-scaling maps that squeeze an infinite horizon onto a prescribed
//! interval.
//!
//! A [`KappaMap`] is a strictly increasing map `[0, tau) -> [0, inf)` with
//! `kappa(0) = 0` that diverges as `t -> tau`. Its inverse [`MuMap`] maps
//! `[0, inf)` onto `[0, tau)`. Controllers schedule their gains from the
//! first and second derivatives of these maps, so evaluation returns all
//! three values at once.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fraction of `tau` kept away from the divergence point: public evaluation
/// refuses `t > tau * (1 - TAU_GUARD)` so gain schedules fail loudly instead
/// of propagating infinities.
pub const TAU_GUARD: f64 = 1e-12;

const INVERT_MAX_ITER: usize = 200;

/// One `a * t^b / (tau - t)^c` term of a rational-sum map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalTerm {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// One `a * tan(pi/2 * t/tau)^b` term of a tangent-sum map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TanTerm {
    pub a: f64,
    pub b: f64,
}

/// A class-K time-scaling function on `[0, tau)`.
///
/// Serialized as a `{ family, terms, tau }` record (the exponential family
/// stores its `{ alpha, x_norm, tau }` parameters instead of terms).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KappaMap {
    /// `kappa(t) = sum_i a_i t^{b_i} / (tau - t)^{c_i}`
    RationalSum { terms: Vec<RationalTerm>, tau: f64 },
    /// `kappa(t) = -(sum_i a_i) ln(1 - t/tau)`
    LogSum { terms: Vec<f64>, tau: f64 },
    /// `kappa(t) = sum_i a_i tan(pi/2 * t/tau)^{b_i}`
    TanSum { terms: Vec<TanTerm>, tau: f64 },
    /// Inverse of `mu(s) = tau (1 - exp(-alpha s / x_norm))`:
    /// `kappa(t) = -(x_norm/alpha) ln(1 - t/tau)`
    ExpInverse { alpha: f64, x_norm: f64, tau: f64 },
}

/// Value and first two derivatives of a map at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// `coef * base^exp`, skipping the power when the coefficient vanishes so a
/// zero coefficient never multiplies an infinite power (0 * inf = NaN).
#[inline]
fn pterm(coef: f64, base: f64, exp: f64) -> f64 {
    if coef == 0.0 {
        0.0
    } else {
        coef * base.powf(exp)
    }
}

impl KappaMap {
    pub fn rational_sum(terms: Vec<RationalTerm>, tau: f64) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Domain("rational_sum needs at least one term".into()));
        }
        for t in &terms {
            if !(t.a > 0.0 && t.b > 0.0 && t.c > 0.0) {
                return Err(Error::Domain(format!(
                    "rational term coefficients must be positive (got a={}, b={}, c={})",
                    t.a, t.b, t.c
                )));
            }
        }
        check_tau(tau)?;
        Ok(Self::RationalSum { terms, tau })
    }

    pub fn log_sum(terms: Vec<f64>, tau: f64) -> Result<Self> {
        if terms.is_empty() || terms.iter().any(|&a| a <= 0.0) {
            return Err(Error::Domain("log_sum coefficients must be positive".into()));
        }
        check_tau(tau)?;
        Ok(Self::LogSum { terms, tau })
    }

    pub fn tan_sum(terms: Vec<TanTerm>, tau: f64) -> Result<Self> {
        if terms.is_empty() || terms.iter().any(|t| t.a <= 0.0 || t.b <= 0.0) {
            return Err(Error::Domain("tan_sum coefficients must be positive".into()));
        }
        check_tau(tau)?;
        Ok(Self::TanSum { terms, tau })
    }

    pub fn exp_inverse(alpha: f64, x_norm: f64, tau: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::Domain(format!("alpha must lie in (0, 0.5), got {alpha}")));
        }
        if !(x_norm > 0.0) {
            return Err(Error::Domain(format!("x_norm must be positive, got {x_norm}")));
        }
        check_tau(tau)?;
        Ok(Self::ExpInverse { alpha, x_norm, tau })
    }

    /// The paper-style single rational term `a t / (tau - t)`; class K1 when
    /// `a = tau`.
    pub fn rational_unit(a: f64, tau: f64) -> Result<Self> {
        Self::rational_sum(vec![RationalTerm { a, b: 1.0, c: 1.0 }], tau)
    }

    pub fn tau(&self) -> f64 {
        match *self {
            Self::RationalSum { tau, .. }
            | Self::LogSum { tau, .. }
            | Self::TanSum { tau, .. }
            | Self::ExpInverse { tau, .. } => tau,
        }
    }

    /// Evaluate `kappa`, `kappa'`, `kappa''` at `t in [0, tau)`.
    ///
    /// Fails with [`Error::Domain`] outside `[0, tau)` and with
    /// [`Error::NonFinite`] within `TAU_GUARD` of `tau` or when the value
    /// overflows the number format.
    pub fn eval(&self, t: f64) -> Result<Jet2> {
        let tau = self.tau();
        if !t.is_finite() || t < 0.0 || t >= tau {
            return Err(Error::Domain(format!("t = {t} outside [0, {tau})")));
        }
        if t > tau * (1.0 - TAU_GUARD) {
            return Err(Error::NonFinite(format!(
                "t = {t} too close to tau = {tau} for the number format"
            )));
        }
        let jet = self.eval_raw(t);
        // kappa'' is legitimately unbounded at t = 0 for terms with b < 2;
        // only the value and slope must stay representable.
        if jet.value.is_finite() && jet.d1.is_finite() && (t == 0.0 || jet.d2.is_finite()) {
            Ok(jet)
        } else {
            Err(Error::NonFinite(format!("kappa overflow at t = {t}")))
        }
    }

    /// Evaluation without domain policing; may return infinities. Used by the
    /// numeric inverse, which treats an overflow as "above the target".
    fn eval_raw(&self, t: f64) -> Jet2 {
        match self {
            Self::RationalSum { terms, tau } => {
                let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
                let r = tau - t;
                for &RationalTerm { a, b, c } in terms {
                    v += a * pterm(1.0, t, b) * pterm(1.0, r, -c);
                    d1 += a
                        * (pterm(b, t, b - 1.0) * pterm(1.0, r, -c)
                            + pterm(c, t, b) * pterm(1.0, r, -c - 1.0));
                    d2 += a
                        * (pterm(b * (b - 1.0), t, b - 2.0) * pterm(1.0, r, -c)
                            + pterm(2.0 * b * c, t, b - 1.0) * pterm(1.0, r, -c - 1.0)
                            + pterm(c * (c + 1.0), t, b) * pterm(1.0, r, -c - 2.0));
                }
                Jet2 { value: v, d1, d2 }
            }
            Self::LogSum { terms, tau } => log_jet(terms.iter().sum(), t, *tau),
            Self::ExpInverse { alpha, x_norm, tau } => log_jet(x_norm / alpha, t, *tau),
            Self::TanSum { terms, tau } => {
                let w = std::f64::consts::FRAC_PI_2 / tau;
                let x = (w * t).tan();
                let sec2 = 1.0 + x * x;
                let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
                for &TanTerm { a, b } in terms {
                    v += a * pterm(1.0, x, b);
                    d1 += a * w * pterm(b, x, b - 1.0) * sec2;
                    d2 += a
                        * w
                        * w
                        * b
                        * (pterm(b - 1.0, x, b - 2.0) * sec2 * sec2
                            + pterm(2.0, x, b) * sec2);
                }
                Jet2 { value: v, d1, d2 }
            }
        }
    }

    /// Analytic `kappa'(0)`.
    pub fn initial_slope(&self) -> f64 {
        self.eval_raw(0.0).d1
    }

    /// The inverse class-M map.
    pub fn inverse(&self) -> MuMap {
        MuMap::new(self.clone())
    }

    /// Check the class-K (or class-K1) conditions on a finite grid and
    /// report every failure.
    pub fn validate_class(&self, target: ClassTarget) -> ValidationReport {
        self.validate_class_on(target, &ValidationGrid::default())
    }

    pub fn validate_class_on(&self, target: ClassTarget, grid: &ValidationGrid) -> ValidationReport {
        let tau = self.tau();
        let ts = grid.build(tau);
        let mut conditions = Vec::new();

        let at_zero = self.eval_raw(0.0);
        conditions.push(ConditionResult::scalar("zero_at_origin", at_zero.value == 0.0, 0.0));

        let mut monotone_failures = Vec::new();
        let mut divergence = f64::NAN;
        let mut prev = at_zero.value;
        for &t in &ts {
            let v = self.eval_raw(t).value;
            if !(v > prev) && monotone_failures.len() < MAX_RECORDED_FAILURES {
                monotone_failures.push(t);
            }
            prev = v;
            divergence = v;
        }
        conditions.push(ConditionResult {
            name: "strictly_increasing",
            passed: monotone_failures.is_empty(),
            failures: monotone_failures,
        });
        // Divergence proxy at tau(1 - 1e-9), the last grid point. Power-law
        // families clear 1e6 there. Logarithmic families grow like
        // A ln(tau/(tau-t)) and cannot reach 1e6 within f64's resolution of
        // tau - t, so for them the proxy checks the exact analytic value.
        let diverged = match self {
            Self::LogSum { .. } | Self::ExpInverse { .. } => {
                let a = match self {
                    Self::LogSum { terms, .. } => terms.iter().sum::<f64>(),
                    Self::ExpInverse { alpha, x_norm, .. } => x_norm / alpha,
                    _ => unreachable!(),
                };
                let expected = -a * (1e-9_f64).ln();
                divergence >= expected * (1.0 - 1e-9)
            }
            _ => divergence > 1e6,
        };
        conditions.push(ConditionResult::scalar("diverges_at_tau", diverged, tau * (1.0 - 1e-9)));

        if target == ClassTarget::K1 {
            let slope = self.initial_slope();
            conditions.push(ConditionResult::scalar(
                "unit_initial_slope",
                (slope - 1.0).abs() <= 1e-9,
                0.0,
            ));
            let mut convex_failures = Vec::new();
            for &t in std::iter::once(&0.0).chain(ts.iter()) {
                let d2 = self.eval_raw(t).d2;
                if !(d2 >= -1e-12) && convex_failures.len() < MAX_RECORDED_FAILURES {
                    convex_failures.push(t);
                }
            }
            conditions.push(ConditionResult {
                name: "nonnegative_second_derivative",
                passed: convex_failures.is_empty(),
                failures: convex_failures,
            });
        }

        ValidationReport { target, conditions }
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("tau must be positive and finite, got {tau}")))
    }
}

/// `A * (-ln(1 - t/tau))` jet, shared by the log-sum and exponential families.
fn log_jet(a: f64, t: f64, tau: f64) -> Jet2 {
    let r = tau - t;
    Jet2 {
        value: -a * (-t / tau).ln_1p(),
        d1: a / r,
        d2: a / (r * r),
    }
}

/// Validation target: plain class K, or class K1 (unit initial slope and
/// convexity on top of the class-K conditions).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassTarget {
    K,
    K1,
}

const MAX_RECORDED_FAILURES: usize = 8;

/// Grid used by [`KappaMap::validate_class`]: a uniform core with log-spaced
/// tails toward both `0` and `tau`. Densities are overridable defaults.
#[derive(Clone, Copy, Debug)]
pub struct ValidationGrid {
    pub points: usize,
    pub tail_points: usize,
}

impl Default for ValidationGrid {
    fn default() -> Self {
        Self { points: 10_000, tail_points: 64 }
    }
}

impl ValidationGrid {
    fn build(&self, tau: f64) -> Vec<f64> {
        let hi = tau * (1.0 - 1e-9);
        let core = self.points.max(16) - 2 * self.tail_points.min(self.points / 4);
        let mut ts: Vec<f64> = (1..=core).map(|i| hi * i as f64 / core as f64).collect();
        for k in 0..self.tail_points {
            let u = 2.0 + 7.0 * k as f64 / (self.tail_points.max(2) - 1) as f64;
            ts.push(tau * 10f64.powf(-u));
            ts.push(tau * (1.0 - 10f64.powf(-u)));
        }
        ts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        ts.dedup();
        ts
    }
}

#[derive(Clone, Debug)]
pub struct ConditionResult {
    pub name: &'static str,
    pub passed: bool,
    /// The grid times at which the condition failed (first few).
    pub failures: Vec<f64>,
}

impl ConditionResult {
    fn scalar(name: &'static str, passed: bool, at: f64) -> Self {
        Self { name, passed, failures: if passed { Vec::new() } else { vec![at] } }
    }
}

/// Pass/fail per class condition, with the failing grid times.
#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub target: ClassTarget,
    pub conditions: Vec<ConditionResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }

    pub fn failed_names(&self) -> Vec<&'static str> {
        self.conditions.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "class {:?} validation: {}", self.target, if self.passed() { "pass" } else { "FAIL" })?;
        for c in &self.conditions {
            write!(f, "  {:32} {}", c.name, if c.passed { "pass" } else { "FAIL" })?;
            if !c.failures.is_empty() {
                write!(f, " at t = {:?}", c.failures)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Closed-form inverse available for some families.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClosedFormInverse {
    /// Single rational term with `b = c = 1`: `mu(s) = tau s / (a + s)`.
    RationalUnit,
    /// Log-sum / exponential family: `mu(s) = tau (1 - exp(-s/A))`.
    Logarithmic,
    /// Single tangent term with `b = 1`: `mu(s) = (2 tau / pi) atan(s/a)`.
    Arctangent,
}

/// The class-M inverse of a [`KappaMap`]: maps `[0, inf)` onto `[0, tau)`.
///
/// Uses the analytic inverse when the family admits one, otherwise bracketed
/// bisection seeded on `[0, tau(1 - 1e-15)]` polished by Newton steps.
/// Derivatives come from the inverse-function identities
/// `mu' = 1/kappa'(mu)` and `mu'' = -kappa''(mu)/kappa'(mu)^3`.
#[derive(Clone, Debug, PartialEq)]
pub struct MuMap {
    kappa: KappaMap,
    closed_form: Option<ClosedFormInverse>,
}

impl MuMap {
    pub fn new(kappa: KappaMap) -> Self {
        let closed_form = match &kappa {
            KappaMap::RationalSum { terms, .. }
                if terms.len() == 1 && terms[0].b == 1.0 && terms[0].c == 1.0 =>
            {
                Some(ClosedFormInverse::RationalUnit)
            }
            KappaMap::LogSum { .. } | KappaMap::ExpInverse { .. } => {
                Some(ClosedFormInverse::Logarithmic)
            }
            KappaMap::TanSum { terms, .. } if terms.len() == 1 && terms[0].b == 1.0 => {
                Some(ClosedFormInverse::Arctangent)
            }
            _ => None,
        };
        Self { kappa, closed_form }
    }

    pub fn kappa(&self) -> &KappaMap {
        &self.kappa
    }

    pub fn tau(&self) -> f64 {
        self.kappa.tau()
    }

    pub fn closed_form(&self) -> Option<ClosedFormInverse> {
        self.closed_form
    }

    /// Evaluate `mu`, `mu'`, `mu''` at `s >= 0`.
    pub fn eval(&self, s: f64) -> Result<Jet2> {
        if !s.is_finite() || s < 0.0 {
            return Err(Error::Domain(format!("s = {s} outside [0, inf)")));
        }
        let value = match self.closed_form {
            Some(ClosedFormInverse::RationalUnit) => {
                let (a, tau) = match &self.kappa {
                    KappaMap::RationalSum { terms, tau } => (terms[0].a, *tau),
                    _ => unreachable!(),
                };
                tau * s / (a + s)
            }
            Some(ClosedFormInverse::Logarithmic) => {
                let (a, tau) = match &self.kappa {
                    KappaMap::LogSum { terms, tau } => (terms.iter().sum::<f64>(), *tau),
                    KappaMap::ExpInverse { alpha, x_norm, tau } => (x_norm / alpha, *tau),
                    _ => unreachable!(),
                };
                -tau * (-s / a).exp_m1()
            }
            Some(ClosedFormInverse::Arctangent) => {
                let (a, tau) = match &self.kappa {
                    KappaMap::TanSum { terms, tau } => (terms[0].a, *tau),
                    _ => unreachable!(),
                };
                (2.0 * tau / std::f64::consts::PI) * (s / a).atan()
            }
            None => self.invert_numeric(s)?,
        };
        // Keep mu strictly below tau even where the closed form rounds to it.
        let value = value.min(self.kappa.tau() * (1.0 - 1e-15));
        let k = self.kappa.eval_raw(value);
        Ok(Jet2 {
            value,
            d1: 1.0 / k.d1,
            d2: -k.d2 / (k.d1 * k.d1 * k.d1),
        })
    }

    /// Bisection on `[0, tau(1 - 1e-15)]` to `|kappa(x) - s| <= 1e-12 max(1, s)`,
    /// then Newton polish. Bisection guarantees bracketing despite the steep
    /// growth near `tau`, which defeats pure Newton.
    fn invert_numeric(&self, s: f64) -> Result<f64> {
        if s == 0.0 {
            return Ok(0.0);
        }
        let tau = self.kappa.tau();
        let tol = 1e-12 * s.max(1.0);
        let mut lo = 0.0_f64;
        let mut hi = tau * (1.0 - 1e-15);
        // Above the representable range of kappa: clamp to the bracket end so
        // mu stays inside [0, tau) for every s.
        let top = self.kappa.eval_raw(hi).value;
        if !(top > s) {
            return Ok(hi);
        }
        let mut x = 0.5 * hi;
        for iter in 0..INVERT_MAX_ITER {
            let jet = self.kappa.eval_raw(x);
            let f = jet.value - s;
            if f.is_finite() && f.abs() <= tol {
                return Ok(x);
            }
            if f.is_finite() && f < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            // Newton once the bracket is tight enough for the local slope to
            // be trustworthy; otherwise keep bisecting.
            let newton = if f.is_finite() && jet.d1.is_finite() && iter > 40 {
                let xn = x - f / jet.d1;
                (xn > lo && xn < hi).then_some(xn)
            } else {
                None
            };
            x = newton.unwrap_or_else(|| 0.5 * (lo + hi));
            if hi - lo <= f64::EPSILON * tau {
                let f = self.kappa.eval_raw(x).value - s;
                if f.abs() <= tol.max(1e-9 * s.max(1.0)) {
                    return Ok(x);
                }
            }
        }
        let residual = (self.kappa.eval_raw(x).value - s).abs();
        if residual <= tol.max(1e-9 * s.max(1.0)) {
            Ok(x)
        } else {
            Err(Error::Convergence { iterations: INVERT_MAX_ITER, residual })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn paper_kappa() -> KappaMap {
        KappaMap::rational_unit(20.0, 20.0).unwrap()
    }

    #[test]
    fn rational_hand_values() {
        // kappa = 20t/(20-t), kappa' = 400/(20-t)^2, kappa'' = 800/(20-t)^3
        let k = paper_kappa();
        let j0 = k.eval(0.0).unwrap();
        assert_eq!(j0.value, 0.0);
        assert_relative_eq!(j0.d1, 1.0, max_relative = 1e-14);
        assert_relative_eq!(j0.d2, 0.1, max_relative = 1e-14);
        let j10 = k.eval(10.0).unwrap();
        assert_relative_eq!(j10.value, 20.0, max_relative = 1e-14);
        assert_relative_eq!(j10.d1, 4.0, max_relative = 1e-14);
        assert_relative_eq!(j10.d2, 0.8, max_relative = 1e-14);
    }

    #[test]
    fn zero_at_origin_all_families() {
        let maps = [
            paper_kappa(),
            KappaMap::log_sum(vec![1.0, 2.5], 5.0).unwrap(),
            KappaMap::tan_sum(vec![TanTerm { a: 1.3, b: 2.0 }], 7.0).unwrap(),
            KappaMap::exp_inverse(0.4, 10.525, 20.0).unwrap(),
            KappaMap::rational_sum(
                vec![RationalTerm { a: 2.0, b: 1.5, c: 0.5 }, RationalTerm { a: 0.1, b: 3.0, c: 2.0 }],
                3.0,
            )
            .unwrap(),
        ];
        for m in maps {
            assert_eq!(m.eval(0.0).unwrap().value, 0.0);
        }
    }

    #[test]
    fn eval_domain_errors() {
        let k = paper_kappa();
        assert!(matches!(k.eval(-0.1), Err(Error::Domain(_))));
        assert!(matches!(k.eval(20.0), Err(Error::Domain(_))));
        assert!(matches!(k.eval(25.0), Err(Error::Domain(_))));
        // inside [0, tau) but beyond the guard
        assert!(matches!(k.eval(20.0 * (1.0 - 1e-14)), Err(Error::NonFinite(_))));
    }

    #[test]
    fn mu_hand_values() {
        // mu(s) = 20 s / (20 + s) for the paper map
        let mu = paper_kappa().inverse();
        assert_eq!(mu.closed_form(), Some(ClosedFormInverse::RationalUnit));
        let j = mu.eval(20.0).unwrap();
        assert_relative_eq!(j.value, 10.0, max_relative = 1e-14);
        let j0 = mu.eval(0.0).unwrap();
        assert_eq!(j0.value, 0.0);
        assert_relative_eq!(j0.d1, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn exp_inverse_half_horizon() {
        // alpha=0.4, |X|=10.525, tau=20: mu = 10 at dt = |X|/alpha * ln 2
        let mu = KappaMap::exp_inverse(0.4, 10.525, 20.0).unwrap().inverse();
        let dt = 10.525 / 0.4 * std::f64::consts::LN_2;
        assert_relative_eq!(mu.eval(dt).unwrap().value, 10.0, max_relative = 1e-12);
        // mu -> tau as s -> inf
        assert_relative_eq!(mu.eval(1e9).unwrap().value, 20.0, max_relative = 1e-9);
        // Lemma 1 item 6 calibration: mu'(0) = (alpha/|X|) * tau
        assert_relative_eq!(mu.eval(0.0).unwrap().d1, 0.4 * 20.0 / 10.525, max_relative = 1e-12);
    }

    #[test]
    fn validation_paper_map_is_k1() {
        let rep = paper_kappa().validate_class(ClassTarget::K1);
        assert!(rep.passed(), "{rep}");
    }

    #[test]
    fn validation_wrong_slope_fails_k1() {
        // a = 1, tau = 20: kappa'(0) = 1/20
        let k = KappaMap::rational_unit(1.0, 20.0).unwrap();
        let rep = k.validate_class(ClassTarget::K1);
        assert!(!rep.passed());
        assert!(rep.failed_names().contains(&"unit_initial_slope"));
        // but it is still a valid class-K map
        assert!(k.validate_class(ClassTarget::K).passed());
    }

    #[test]
    fn validation_log_sum_is_k() {
        let k = KappaMap::log_sum(vec![1.0], 5.0).unwrap();
        assert!(k.validate_class(ClassTarget::K).passed());
    }

    #[test]
    fn numeric_inversion_multi_term() {
        let k = KappaMap::rational_sum(
            vec![RationalTerm { a: 3.0, b: 1.0, c: 1.0 }, RationalTerm { a: 0.5, b: 2.0, c: 3.0 }],
            4.0,
        )
        .unwrap();
        let mu = k.inverse();
        assert_eq!(mu.closed_form(), None);
        for s in [1e-3, 0.1, 1.0, 42.0, 1e4, 1e8] {
            let m = mu.eval(s).unwrap().value;
            let back = k.eval_raw(m).value;
            assert_relative_eq!(back, s, max_relative = 1e-9);
            assert!(m >= 0.0 && m < 4.0);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let maps = [
            paper_kappa(),
            KappaMap::log_sum(vec![2.0, 3.0], 6.0).unwrap(),
            KappaMap::tan_sum(vec![TanTerm { a: 2.0, b: 1.0 }, TanTerm { a: 0.3, b: 3.0 }], 9.0).unwrap(),
            KappaMap::exp_inverse(0.45, 3.0, 8.0).unwrap(),
        ];
        for k in maps {
            let tau = k.tau();
            for frac in [0.1, 0.3, 0.5, 0.7, 0.9] {
                let t = tau * frac;
                let h = 1e-6 * tau;
                let j = k.eval(t).unwrap();
                let fd1 = (k.eval(t + h).unwrap().value - k.eval(t - h).unwrap().value) / (2.0 * h);
                let fd2 = (k.eval(t + h).unwrap().d1 - k.eval(t - h).unwrap().d1) / (2.0 * h);
                assert_relative_eq!(j.d1, fd1, max_relative = 1e-5);
                assert_relative_eq!(j.d2, fd2, max_relative = 1e-5);
            }
        }
    }

    #[test]
    fn lemma1_derivative_identities() {
        // mu' = 1/kappa'(mu) and kappa''(mu) mu'^2 + kappa'(mu) mu'' = 0
        let k = KappaMap::tan_sum(vec![TanTerm { a: 1.0, b: 1.0 }, TanTerm { a: 0.2, b: 2.0 }], 5.0).unwrap();
        let mu = k.inverse();
        for s in [0.0, 0.01, 0.5, 3.0, 50.0, 2e3] {
            let m = mu.eval(s).unwrap();
            let kj = k.eval(m.value).unwrap();
            assert_relative_eq!(m.d1, 1.0 / kj.d1, max_relative = 1e-8);
            let resid = kj.d2 * m.d1 * m.d1 + kj.d1 * m.d2;
            assert!(resid.abs() <= 1e-6 * (1.0 + kj.d2.abs()), "resid = {resid}");
        }
    }

    #[test]
    fn sum_of_two_maps_is_class_k() {
        // Lemma 1 item 4, checked pointwise on a grid.
        let k1 = paper_kappa();
        let k2 = KappaMap::log_sum(vec![4.0], 20.0).unwrap();
        let mut prev = -1.0;
        for i in 0..2000 {
            let t = 20.0 * (1.0 - 1e-9) * i as f64 / 1999.0;
            let v = k1.eval_raw(t).value + k2.eval_raw(t).value;
            assert!(v > prev, "sum not strictly increasing at t = {t}");
            prev = v;
        }
        assert_eq!(k1.eval_raw(0.0).value + k2.eval_raw(0.0).value, 0.0);
    }

    #[test]
    fn serde_round_trip() {
        let k = KappaMap::rational_sum(
            vec![RationalTerm { a: 20.0, b: 1.0, c: 1.0 }],
            20.0,
        )
        .unwrap();
        let text = toml::to_string(&k).unwrap();
        assert!(text.contains("family = \"rational_sum\""));
        let back: KappaMap = toml::from_str(&text).unwrap();
        assert_eq!(k, back);

        let e = KappaMap::exp_inverse(0.45, 10.525, 20.0).unwrap();
        let text = toml::to_string(&e).unwrap();
        let back: KappaMap = toml::from_str(&text).unwrap();
        assert_eq!(e, back);
    }
}
