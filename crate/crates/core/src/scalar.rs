//! Scalar Legendre-type convex functions stored as conjugate pairs.
//!
//! A [`LegendreFunction`] carries `V`, `V'`, `V*` and `V*'` together with the
//! effective domains `I = dom V` and `I* = dom V*`. Conjugates are supplied by
//! the caller, never computed numerically. The only built-in family is the
//! shifted quadratic `V(t) = a t²/2 + shift`; anything else is a plug-in
//! resolved by name through a [`LegendreRegistry`] and checked with
//! [`validate_legendre`].

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CdtError, Result};

/// Distance from a finite endpoint at which validation samples stop.
const BOUNDARY_GAP: f64 = 1e-6;
/// Half-width used when a side of the domain is unbounded.
const UNBOUNDED_REACH: f64 = 10.0;
const VALIDATION_TOL: f64 = 1e-9;

/// An interval of the extended real line with per-endpoint closedness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(CdtError::InvalidParameter(format!(
                "interval endpoints out of order: [{lo}, {hi}]"
            )));
        }
        Ok(Self {
            lo,
            hi,
            lo_closed: lo_closed && lo.is_finite(),
            hi_closed: hi_closed && hi.is_finite(),
        })
    }

    pub const fn real_line() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
            lo_closed: false,
            hi_closed: false,
        }
    }

    /// `[lo, ∞)`
    pub fn closed_from(lo: f64) -> Self {
        Self {
            lo,
            hi: f64::INFINITY,
            lo_closed: true,
            hi_closed: false,
        }
    }

    /// `(lo, ∞)`
    pub fn open_from(lo: f64) -> Self {
        Self {
            lo,
            hi: f64::INFINITY,
            lo_closed: false,
            hi_closed: false,
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        if t.is_nan() {
            return false;
        }
        let above = if self.lo_closed { t >= self.lo } else { t > self.lo };
        let below = if self.hi_closed { t <= self.hi } else { t < self.hi };
        above && below
    }

    /// Membership in the interior; no tolerance, the interior is open.
    pub fn interior_contains(&self, t: f64) -> bool {
        t > self.lo && t < self.hi
    }

    pub fn has_interior(&self) -> bool {
        self.lo < self.hi
    }

    pub fn is_real_line(&self) -> bool {
        self.lo == f64::NEG_INFINITY && self.hi == f64::INFINITY
    }

    /// Finite window inside the interior used for sampling.
    pub fn sampling_window(&self) -> Option<(f64, f64)> {
        if !self.has_interior() {
            return None;
        }
        let (lo, hi) = match (self.lo.is_finite(), self.hi.is_finite()) {
            (false, false) => (-UNBOUNDED_REACH, UNBOUNDED_REACH),
            (true, false) => (self.lo + BOUNDARY_GAP, self.lo + 2.0 * UNBOUNDED_REACH),
            (false, true) => (self.hi - 2.0 * UNBOUNDED_REACH, self.hi - BOUNDARY_GAP),
            (true, true) => {
                let gap = BOUNDARY_GAP.min(0.25 * (self.hi - self.lo));
                (self.lo + gap, self.hi - gap)
            }
        };
        Some((lo, hi))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.lo_closed { '[' } else { '(' };
        let close = if self.hi_closed { ']' } else { ')' };
        let end = |v: f64| {
            if v == f64::INFINITY {
                "inf".to_string()
            } else if v == f64::NEG_INFINITY {
                "-inf".to_string()
            } else {
                format!("{v}")
            }
        };
        write!(f, "{open}{}, {}{close}", end(self.lo), end(self.hi))
    }
}

/// Raw evaluation of a conjugate pair. Callers guarantee the argument lies in
/// the relevant domain; [`LegendreFunction`] performs that check.
pub trait ConjugatePair: Send + Sync + fmt::Debug {
    fn value(&self, t: f64) -> f64;
    fn deriv(&self, t: f64) -> f64;
    fn conj_value(&self, s: f64) -> f64;
    fn conj_deriv(&self, s: f64) -> f64;

    /// Second derivative of the conjugate, used by the Newton Jacobian.
    fn conj_second(&self, s: f64) -> f64 {
        let h = 1e-6 * (1.0 + s.abs());
        (self.conj_deriv(s + h) - self.conj_deriv(s - h)) / (2.0 * h)
    }
}

/// How a function is written in a problem file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LegendreSpec {
    Quadratic {
        a: f64,
        #[serde(default)]
        shift: f64,
    },
    Plugin {
        name: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct ShiftedQuadratic {
    a: f64,
    shift: f64,
}

impl ConjugatePair for ShiftedQuadratic {
    fn value(&self, t: f64) -> f64 {
        0.5 * self.a * t * t + self.shift
    }
    fn deriv(&self, t: f64) -> f64 {
        self.a * t
    }
    fn conj_value(&self, s: f64) -> f64 {
        s * s / (2.0 * self.a) - self.shift
    }
    fn conj_deriv(&self, s: f64) -> f64 {
        s / self.a
    }
    fn conj_second(&self, _s: f64) -> f64 {
        1.0 / self.a
    }
}

/// `V(t) = e^t`, `V*(s) = s ln s − s` on `[0, ∞)`.
#[derive(Debug, Clone, Copy)]
struct Exponential;

impl ConjugatePair for Exponential {
    fn value(&self, t: f64) -> f64 {
        t.exp()
    }
    fn deriv(&self, t: f64) -> f64 {
        t.exp()
    }
    fn conj_value(&self, s: f64) -> f64 {
        if s == 0.0 {
            0.0
        } else {
            s * s.ln() - s
        }
    }
    fn conj_deriv(&self, s: f64) -> f64 {
        s.ln()
    }
    fn conj_second(&self, s: f64) -> f64 {
        1.0 / s
    }
}

/// `V(t) = t ln t − t` on `[0, ∞)`, `V*(s) = e^s`.
#[derive(Debug, Clone, Copy)]
struct Entropy;

impl ConjugatePair for Entropy {
    fn value(&self, t: f64) -> f64 {
        if t == 0.0 {
            0.0
        } else {
            t * t.ln() - t
        }
    }
    fn deriv(&self, t: f64) -> f64 {
        t.ln()
    }
    fn conj_value(&self, s: f64) -> f64 {
        s.exp()
    }
    fn conj_deriv(&self, s: f64) -> f64 {
        s.exp()
    }
    fn conj_second(&self, s: f64) -> f64 {
        s.exp()
    }
}

/// A scalar function of Legendre type with its conjugate.
#[derive(Clone)]
pub struct LegendreFunction {
    dom: Interval,
    conj_dom: Interval,
    pair: Arc<dyn ConjugatePair>,
    spec: LegendreSpec,
    label: String,
}

impl fmt::Debug for LegendreFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LegendreFunction")
            .field("label", &self.label)
            .field("dom", &self.dom)
            .field("conj_dom", &self.conj_dom)
            .finish()
    }
}

impl PartialEq for LegendreFunction {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.dom == other.dom && self.conj_dom == other.conj_dom
    }
}

impl LegendreFunction {
    /// Wraps a user-supplied pair. The result should be passed through
    /// [`validate_legendre`] before use.
    pub fn from_pair(
        name: impl Into<String>,
        dom: Interval,
        conj_dom: Interval,
        pair: Arc<dyn ConjugatePair>,
    ) -> Self {
        let name = name.into();
        Self {
            dom,
            conj_dom,
            pair,
            spec: LegendreSpec::Plugin { name: name.clone() },
            label: name,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn spec(&self) -> &LegendreSpec {
        &self.spec
    }

    pub fn dom(&self) -> &Interval {
        &self.dom
    }

    pub fn conj_dom(&self) -> &Interval {
        &self.conj_dom
    }

    /// True for the plain half-square `t²/2` used for quadratic indices.
    pub fn is_half_square(&self) -> bool {
        matches!(self.spec, LegendreSpec::Quadratic { a, shift } if a == 1.0 && shift == 0.0)
    }

    pub fn value(&self, t: f64) -> Option<f64> {
        self.dom.contains(t).then(|| self.pair.value(t))
    }

    pub fn deriv(&self, t: f64) -> Option<f64> {
        self.dom.interior_contains(t).then(|| self.pair.deriv(t))
    }

    pub fn conj_value(&self, s: f64) -> Option<f64> {
        self.conj_dom.contains(s).then(|| self.pair.conj_value(s))
    }

    pub fn conj_deriv(&self, s: f64) -> Option<f64> {
        self.conj_dom
            .interior_contains(s)
            .then(|| self.pair.conj_deriv(s))
    }

    pub fn conj_second(&self, s: f64) -> Option<f64> {
        self.conj_dom
            .interior_contains(s)
            .then(|| self.pair.conj_second(s))
    }
}

/// `V(t) = a t²/2 + shift` with `V*(s) = s²/(2a) − shift`; both domains are ℝ.
pub fn quadratic_legendre(a: f64, shift: f64) -> Result<LegendreFunction> {
    if !(a > 0.0) || !a.is_finite() || !shift.is_finite() {
        return Err(CdtError::InvalidParameter(format!(
            "quadratic Legendre function needs a > 0 and finite shift (a={a}, shift={shift})"
        )));
    }
    let label = if shift == 0.0 {
        format!("{a}·t²/2")
    } else {
        format!("{a}·t²/2{shift:+}")
    };
    Ok(LegendreFunction {
        dom: Interval::real_line(),
        conj_dom: Interval::real_line(),
        pair: Arc::new(ShiftedQuadratic { a, shift }),
        spec: LegendreSpec::Quadratic { a, shift },
        label,
    })
}

/// The half-square `t²/2`, self-conjugate.
pub fn half_square() -> LegendreFunction {
    quadratic_legendre(1.0, 0.0).expect("a = 1 is valid")
}

/// Named plug-in functions available to problem files.
#[derive(Debug, Clone)]
pub struct LegendreRegistry {
    entries: BTreeMap<String, LegendreFunction>,
}

impl Default for LegendreRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl LegendreRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    /// Registry holding `exp` (`e^t`) and `entropy` (`t ln t − t`).
    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        reg.register(LegendreFunction::from_pair(
            "exp",
            Interval::real_line(),
            Interval::closed_from(0.0),
            Arc::new(Exponential),
        ));
        reg.register(LegendreFunction::from_pair(
            "entropy",
            Interval::closed_from(0.0),
            Interval::real_line(),
            Arc::new(Entropy),
        ));
        reg
    }

    pub fn register(&mut self, f: LegendreFunction) {
        self.entries.insert(f.label.clone(), f);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn resolve(&self, spec: &LegendreSpec) -> Result<LegendreFunction> {
        match spec {
            LegendreSpec::Quadratic { a, shift } => quadratic_legendre(*a, *shift),
            LegendreSpec::Plugin { name } => self.entries.get(name).cloned().ok_or_else(|| {
                CdtError::InvalidParameter(format!("unknown Legendre plug-in `{name}`"))
            }),
        }
    }
}

/// Outcome of [`validate_legendre`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub label: String,
    pub samples: usize,
    /// max |V(t) + V*(V'(t)) − t V'(t)|
    pub max_fenchel_young_abs: f64,
    /// Same, divided by `1 + |t V'(t)|`.
    pub max_fenchel_young_rel: f64,
    /// max |V*'(V'(t)) − t| / (1 + |t|)
    pub max_inverse_residual_rel: f64,
    /// min over sampled (t, s) of V(t) + V*(s) − t s, scaled by magnitude.
    pub min_fenchel_slack: f64,
    pub pass: bool,
}

/// Samples the interior of `dom V` on a seeded jittered grid and checks
/// Fenchel–Young with equality at `s = V'(t)` and the inverse-derivative
/// relation `V*' ∘ V' = id`.
pub fn validate_legendre(v: &LegendreFunction, samples: usize, seed: u64) -> Result<ValidationReport> {
    if samples == 0 {
        return Err(CdtError::InvalidParameter("samples must be >= 1".into()));
    }
    let invalid = |reason: &str| CdtError::InvalidFunction {
        label: v.label.clone(),
        reason: reason.to_string(),
    };
    let (lo, hi) = v
        .dom
        .sampling_window()
        .ok_or_else(|| invalid("dom V has empty interior"))?;
    let (slo, shi) = v
        .conj_dom
        .sampling_window()
        .ok_or_else(|| invalid("dom V* has empty interior"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ts: Vec<f64> = Vec::with_capacity(samples + 2);
    let width = (hi - lo) / samples as f64;
    for i in 0..samples {
        ts.push(lo + (i as f64 + rng.gen::<f64>()) * width);
    }
    if v.dom.lo.is_finite() {
        ts.push(lo);
    }
    if v.dom.hi.is_finite() {
        ts.push(hi);
    }

    let mut max_abs = 0.0_f64;
    let mut max_rel = 0.0_f64;
    let mut max_inv = 0.0_f64;
    let mut min_slack = f64::INFINITY;
    for &t in &ts {
        let (Some(vt), Some(dt)) = (v.value(t), v.deriv(t)) else {
            return Err(invalid("sample point outside dom V"));
        };
        let conj = v
            .conj_value(dt)
            .ok_or_else(|| invalid("V' maps outside dom V*"))?;
        let inv = v
            .conj_deriv(dt)
            .ok_or_else(|| invalid("V' maps outside int dom V*"))?;
        let gap = (vt + conj - t * dt).abs();
        max_abs = max_abs.max(gap);
        max_rel = max_rel.max(gap / (1.0 + (t * dt).abs()));
        max_inv = max_inv.max((inv - t).abs() / (1.0 + t.abs()));

        let s = slo + rng.gen::<f64>() * (shi - slo);
        if let Some(cs) = v.conj_value(s) {
            let scale = 1.0 + vt.abs() + cs.abs() + (t * s).abs();
            min_slack = min_slack.min((vt + cs - t * s) / scale);
        }
    }
    if !min_slack.is_finite() {
        min_slack = 0.0;
    }

    let pass = max_rel <= VALIDATION_TOL && max_inv <= VALIDATION_TOL && min_slack >= -1e-12;
    Ok(ValidationReport {
        label: v.label.clone(),
        samples: ts.len(),
        max_fenchel_young_abs: max_abs,
        max_fenchel_young_rel: max_rel,
        max_inverse_residual_rel: max_inv,
        min_fenchel_slack: min_slack,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug)]
    struct OffByTenth;

    impl ConjugatePair for OffByTenth {
        fn value(&self, t: f64) -> f64 {
            0.5 * t * t
        }
        fn deriv(&self, t: f64) -> f64 {
            t
        }
        fn conj_value(&self, s: f64) -> f64 {
            0.5 * s * s + 0.1
        }
        fn conj_deriv(&self, s: f64) -> f64 {
            s
        }
    }

    #[test]
    fn half_square_is_self_conjugate() {
        let v = quadratic_legendre(1.0, 0.0).unwrap();
        assert_eq!(v.value(3.0), Some(4.5));
        assert_eq!(v.conj_value(3.0), Some(4.5));
        assert_eq!(v.deriv(2.0), Some(2.0));
    }

    #[test]
    fn shifted_quadratic_conjugate() {
        // V1 of the double-well example: t²/2 − 2, so V1*(4) = 8 + 2.
        let v = quadratic_legendre(1.0, -2.0).unwrap();
        assert_eq!(v.conj_value(4.0), Some(10.0));
        assert_eq!(v.value(2.0), Some(0.0));
    }

    #[test]
    fn scaled_quadratic_conjugate_matches_grid_sup() {
        let v = quadratic_legendre(2.0, 0.0).unwrap();
        // sup_t (4t − t²) on a fine grid
        let brute = (-4000..=4000)
            .map(|i| {
                let t = i as f64 * 1e-3;
                4.0 * t - t * t
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((brute - 4.0).abs() < 1e-9);
        assert_eq!(v.conj_value(4.0), Some(4.0));
    }

    #[test]
    fn rejects_nonpositive_curvature() {
        assert!(matches!(
            quadratic_legendre(0.0, 0.0),
            Err(CdtError::InvalidParameter(_))
        ));
        assert!(quadratic_legendre(-1.0, 3.0).is_err());
    }

    #[test]
    fn validation_passes_for_builtins() {
        for v in [
            quadratic_legendre(1.0, 0.0).unwrap(),
            quadratic_legendre(1.0, -2.0).unwrap(),
            quadratic_legendre(3.5, 1.25).unwrap(),
        ] {
            let rep = validate_legendre(&v, 100, 11).unwrap();
            assert!(rep.pass, "{rep:?}");
            assert!(rep.max_fenchel_young_abs < 1e-12);
        }
        let reg = LegendreRegistry::with_builtins();
        for name in ["exp", "entropy"] {
            let v = reg
                .resolve(&LegendreSpec::Plugin { name: name.into() })
                .unwrap();
            let rep = validate_legendre(&v, 200, 3).unwrap();
            assert!(rep.pass, "{rep:?}");
        }
    }

    #[test]
    fn validation_catches_planted_defect() {
        let v = LegendreFunction::from_pair(
            "broken",
            Interval::real_line(),
            Interval::real_line(),
            Arc::new(OffByTenth),
        );
        let rep = validate_legendre(&v, 100, 5).unwrap();
        assert!(!rep.pass);
        assert!((rep.max_fenchel_young_abs - 0.1).abs() < 1e-12);
    }

    #[test]
    fn validation_rejects_empty_interior() {
        let point = Interval::new(1.0, 1.0, true, true).unwrap();
        let v = LegendreFunction::from_pair("degenerate", point, point, Arc::new(OffByTenth));
        assert!(matches!(
            validate_legendre(&v, 10, 0),
            Err(CdtError::InvalidFunction { .. })
        ));
        assert!(validate_legendre(&half_square(), 0, 0).is_err());
    }

    #[test]
    fn domain_checks_respect_openness() {
        let reg = LegendreRegistry::with_builtins();
        let ent = reg
            .resolve(&LegendreSpec::Plugin {
                name: "entropy".into(),
            })
            .unwrap();
        assert_eq!(ent.value(0.0), Some(0.0));
        assert_eq!(ent.deriv(0.0), None);
        assert_eq!(ent.value(-1.0), None);
        let exp = reg
            .resolve(&LegendreSpec::Plugin { name: "exp".into() })
            .unwrap();
        assert_eq!(exp.conj_value(0.0), Some(0.0));
        assert_eq!(exp.conj_deriv(0.0), None);
    }

    #[test]
    fn unknown_plugin_is_reported() {
        let reg = LegendreRegistry::with_builtins();
        assert!(reg
            .resolve(&LegendreSpec::Plugin {
                name: "nope".into()
            })
            .is_err());
    }
}
