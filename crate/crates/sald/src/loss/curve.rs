//! Quadrature oracles for the minimal-length property of the losses.
//!
//! Restrict the zero level set to a graph curve `u(s) = (s, t(s))` joining
//! the two data points `(0, 0)` and `(span, 0)`. Along such a curve the
//! value loss reduces to the line integral of the unsigned distance and
//! the derivative term to the arc-length integral of `|d/ds |u||` (with
//! the `|sin|` measure). Both are evaluated here by composite Simpson
//! quadrature, directly from the curve — no trained network involved —
//! so they serve as an independent check that the straight line is the
//! strict minimizer.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

type CurveFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, PartialEq)]
pub enum CurveError {
    /// `t` must vanish at both ends of the span (within 1e-12).
    EndpointViolation { at: f64, value: f64 },
    NonFinite { at: f64 },
    /// Simpson needs an even, positive interval count.
    BadResolution,
}

impl fmt::Display for CurveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EndpointViolation { at, value } => {
                write!(f, "curve must vanish at s = {at}, found {value}")
            }
            Self::NonFinite { at } => write!(f, "curve is non-finite at s = {at}"),
            Self::BadResolution => write!(f, "quadrature resolution must be even and positive"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CurveError {}

/// A graph curve `(s, t(s))` over `[0, span]` with `t(0) = t(span) = 0`.
pub struct CurveFamily {
    span: f64,
    t: CurveFn,
    t_dot: CurveFn,
    resolution: usize,
}

pub const DEFAULT_RESOLUTION: usize = 4096;

impl CurveFamily {
    pub fn new(
        span: f64,
        t: CurveFn,
        t_dot: CurveFn,
        resolution: usize,
    ) -> Result<Self, CurveError> {
        if resolution < 2 || resolution % 2 != 0 {
            return Err(CurveError::BadResolution);
        }
        assert!(span > 0.0 && span.is_finite());
        for s in [0.0, span] {
            let v = t(s);
            if v.abs() > 1e-12 {
                return Err(CurveError::EndpointViolation { at: s, value: v });
            }
        }
        for i in 0..=resolution {
            let s = span * i as f64 / resolution as f64;
            if !t(s).is_finite() || !t_dot(s).is_finite() {
                return Err(CurveError::NonFinite { at: s });
            }
        }
        Ok(Self {
            span,
            t,
            t_dot,
            resolution,
        })
    }

    /// The sine bump family `t(s) = amplitude * sin(pi s / span)`.
    pub fn sine(span: f64, amplitude: f64, resolution: usize) -> Self {
        let w = core::f64::consts::PI / span;
        Self::new(
            span,
            Box::new(move |s| amplitude * (w * s).sin()),
            Box::new(move |s| amplitude * w * (w * s).cos()),
            resolution,
        )
        .expect("sine family satisfies the endpoint conditions")
    }

    pub fn span(&self) -> f64 {
        self.span
    }
}

/// The two half-span integrals of a curve-restricted loss.
///
/// The closest data point switches at mid-span, so each half has its own
/// smooth integrand; `total` is the loss over the whole curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfSpanIntegral {
    pub first: f64,
    pub second: f64,
}

impl HalfSpanIntegral {
    pub fn total(&self) -> f64 {
        self.first + self.second
    }
}

/// Which sign-agnostic measure the derivative-term oracle integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradTau {
    /// `|sin|` of the angle: the measure the minimal-length argument is
    /// proved for. Its integrand telescopes to `|d/ds |u||`.
    Sin,
    /// The min-norm measure of the actual loss. Dominates `Sin`, so every
    /// lower bound transfers.
    MinNorm,
}

/// Value-term loss restricted to the curve: the line integral of the
/// unsigned distance to the two span endpoints.
pub fn curve_restricted_sal(curve: &CurveFamily) -> HalfSpanIntegral {
    let l = curve.span;
    let t = &curve.t;
    let td = &curve.t_dot;
    let first = simpson(
        &|s: f64| {
            let tv = t(s);
            let tdv = td(s);
            hypot2(s, tv) * (1.0 + tdv * tdv).sqrt()
        },
        0.0,
        l / 2.0,
        curve.resolution,
    );
    let second = simpson(
        &|s: f64| {
            let tv = t(s);
            let tdv = td(s);
            hypot2(s - l, tv) * (1.0 + tdv * tdv).sqrt()
        },
        l / 2.0,
        l,
        curve.resolution,
    );
    HalfSpanIntegral { first, second }
}

/// Derivative-term loss restricted to the curve, per unit `lambda`.
///
/// With [`GradTau::Sin`] the first-half integrand is `|d/ds |(s, t)||`,
/// which integrates to at least `|(span/2, t(span/2))| >= span/2`; the
/// straight line attains the bound. The integrand's absolute value can
/// kink where `s + t t'` changes sign, so the quadrature splits there.
pub fn curve_restricted_sald_excess(curve: &CurveFamily, tau: GradTau) -> HalfSpanIntegral {
    let l = curve.span;
    let first = excess_half(curve, 0.0, l / 2.0, 0.0, tau);
    let second = excess_half(curve, l / 2.0, l, l, tau);
    HalfSpanIntegral { first, second }
}

fn excess_half(curve: &CurveFamily, a: f64, b: f64, anchor: f64, tau: GradTau) -> f64 {
    let t = &curve.t;
    let td = &curve.t_dot;
    let integrand = move |s: f64| {
        let tv = t(s);
        let tdv = td(s);
        let ds = s - anchor;
        let r = hypot2(ds, tv);
        match tau {
            GradTau::Sin => {
                if r < 1e-9 {
                    // Limit of |(ds + t t')/r| as the curve leaves the
                    // data point along direction (1, t').
                    (1.0 + tdv * tdv).sqrt()
                } else {
                    (ds + tv * tdv).abs() / r
                }
            }
            GradTau::MinNorm => {
                let speed = (1.0 + tdv * tdv).sqrt();
                // cos of the angle between the curve normal (-t', 1) and
                // the distance gradient (ds, t)/r; at r = 0 the gradient
                // degenerates to the tangent direction, angle pi/2.
                let cos = if r < 1e-9 {
                    0.0
                } else {
                    ((-tdv * ds + tv) / (speed * r)).clamp(-1.0, 1.0)
                };
                (2.0 * (1.0 - cos.abs())).sqrt() * speed
            }
        }
    };
    // Kinks of the Sin integrand sit at sign changes of ds + t t'.
    let phi = move |s: f64| (s - anchor) + t(s) * td(s);
    integrate_split_at_sign_changes(&integrand, &phi, a, b, curve.resolution)
}

#[inline]
fn hypot2(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

/// Composite Simpson on `n` (even) intervals.
fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    debug_assert!(n >= 2 && n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + h * i as f64);
    }
    sum * h / 3.0
}

/// Simpson integration of `f`, splitting `[a, b]` wherever `phi` changes
/// sign (located by bisection) so each piece is smooth.
fn integrate_split_at_sign_changes<F, P>(f: &F, phi: &P, a: f64, b: f64, n: usize) -> f64
where
    F: Fn(f64) -> f64,
    P: Fn(f64) -> f64,
{
    // Only strict sign changes are kinks of |phi|; grid zeros where phi
    // touches without crossing leave the integrand smooth.
    let mut cuts: Vec<f64> = Vec::new();
    let mut prev_s = a;
    let mut prev_v = phi(a);
    for i in 1..=n {
        let s = a + (b - a) * i as f64 / n as f64;
        let v = phi(s);
        if prev_v * v < 0.0 {
            let (mut lo, mut hi) = (prev_s, s);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if (phi(mid) < 0.0) == (prev_v < 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let root = 0.5 * (lo + hi);
            if root > a + 1e-15 && root < b - 1e-15 {
                cuts.push(root);
            }
        }
        prev_s = s;
        prev_v = v;
    }
    let mut total = 0.0;
    let mut lo = a;
    for cut in cuts.into_iter().chain(core::iter::once(b)) {
        if cut - lo > 1e-14 {
            // Resolution proportional to the piece, at least 64 intervals.
            let frac = (cut - lo) / (b - a);
            let m = (((n as f64 * frac) as usize).max(64) + 1) / 2 * 2;
            total += simpson(f, lo, cut, m);
        }
        lo = cut;
    }
    total
}
