// Copyright 2026 The chunkcache Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Audience retention curves.
//!
//! `R(τ)` is the fraction of the viewers of a video who are still watching at
//! normalized position `τ`. Under the abandonment model a viewer watches the
//! prefix `[0, b]` and `R` is the survivor function of `b`, so every curve
//! here starts at `R(0) = 1` and never increases.

use serde::{Deserialize, Serialize};

use crate::error::{check_unit_interval, Error, Result};

/// Largest `|λ|` accepted for truncated exponential curves. Beyond it the
/// mean watch-time is within 0.002 of 0 or 1 and `e^λ` starts to lose range.
pub const MAX_ABS_LAMBDA: f64 = 500.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveRepr", into = "CurveRepr")]
pub enum RetentionCurve {
    /// Every viewer watches the whole video.
    Constant,
    /// Abandonment point drawn from an exponential density truncated to
    /// `[0, 1]`: `π(τ) ∝ e^{-λτ}`. `λ < 0` puts the mass near the end,
    /// `λ = 0` is uniform abandonment.
    TruncatedExponential { lambda: f64 },
    /// Piecewise-linear curve through validated knots.
    Tabulated(Tabulated),
}

/// Knots `(τ, r)` of a piecewise-linear retention curve.
///
/// Knot positions are non-decreasing (a repeated position encodes a jump),
/// start at `(0, 1)` and end at `τ = 1`; values never increase.
#[derive(Clone, Debug, PartialEq)]
pub struct Tabulated {
    knots: Vec<(f64, f64)>,
}

impl Tabulated {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidCurve("need at least two knots".into()));
        }
        if knots.iter().any(|&(t, r)| !t.is_finite() || !r.is_finite()) {
            return Err(Error::InvalidCurve("non-finite knot".into()));
        }
        if knots[0] != (0.0, 1.0) {
            return Err(Error::InvalidCurve(format!(
                "first knot must be (0, 1), got {:?}",
                knots[0]
            )));
        }
        if knots[knots.len() - 1].0 != 1.0 {
            return Err(Error::InvalidCurve("last knot must sit at τ = 1".into()));
        }
        for pair in knots.windows(2) {
            let ((t0, r0), (t1, r1)) = (pair[0], pair[1]);
            if t1 < t0 {
                return Err(Error::InvalidCurve(format!(
                    "knot positions decrease at τ = {t1}"
                )));
            }
            if r1 > r0 {
                return Err(Error::InvalidCurve(format!(
                    "retention increases at τ = {t1}"
                )));
            }
        }
        if knots.iter().any(|&(_, r)| !(0.0..=1.0).contains(&r)) {
            return Err(Error::InvalidCurve(
                "retention values must lie in [0, 1]".into(),
            ));
        }
        Ok(Self { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    fn value(&self, tau: f64) -> f64 {
        let k = &self.knots;
        let idx = k.partition_point(|&(t, _)| t < tau);
        if idx == 0 {
            return k[0].1;
        }
        if idx == k.len() {
            return k[k.len() - 1].1;
        }
        let (t1, r1) = k[idx];
        if t1 == tau {
            return r1;
        }
        let (t0, r0) = k[idx - 1];
        r0 + (r1 - r0) * (tau - t0) / (t1 - t0)
    }

    /// Exact integral of the interpolant over `[a, b]`.
    fn integral(&self, a: f64, b: f64) -> f64 {
        self.knots
            .windows(2)
            .map(|seg| {
                let ((t0, r0), (t1, r1)) = (seg[0], seg[1]);
                let lo = a.max(t0);
                let hi = b.min(t1);
                if hi <= lo || t1 == t0 {
                    return 0.0;
                }
                let at = |t: f64| r0 + (r1 - r0) * (t - t0) / (t1 - t0);
                0.5 * (hi - lo) * (at(lo) + at(hi))
            })
            .sum()
    }

    fn upper_inverse(&self, r: f64) -> f64 {
        let k = &self.knots;
        // Values never increase, so the knots with value >= r form a prefix.
        let last = k.partition_point(|&(_, v)| v >= r);
        if last == 0 {
            return 0.0;
        }
        if last == k.len() {
            return 1.0;
        }
        let (t0, r0) = k[last - 1];
        let (t1, r1) = k[last];
        t0 + (r0 - r) / (r0 - r1) * (t1 - t0)
    }

    fn slopes(&self) -> (f64, f64) {
        let slope = |seg: &[(f64, f64)]| (seg[1].1 - seg[0].1) / (seg[1].0 - seg[0].0);
        let first = self
            .knots
            .windows(2)
            .find(|s| s[1].0 > s[0].0)
            .map(slope)
            .unwrap_or(0.0);
        let last = self
            .knots
            .windows(2)
            .rev()
            .find(|s| s[1].0 > s[0].0)
            .map(slope)
            .unwrap_or(0.0);
        (first, last)
    }
}

/// `(e^{λu} - 1 - λu) / λ²`, the antiderivative in `u = 1 - τ` of the
/// unnormalized truncated exponential curve.
fn exp_second_remainder(lambda: f64, u: f64) -> f64 {
    let z = lambda * u;
    if z.abs() < 0.5 {
        // u²/2 + λu³/6 + λ²u⁴/24 + ...
        let mut term = u * u / 2.0;
        let mut sum = term;
        for n in 3..40 {
            term *= z / n as f64;
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        (z.exp_m1() - z) / (lambda * lambda)
    }
}

/// `(e^λ - 1) / λ`, equal to 1 at λ = 0.
fn exprel(lambda: f64) -> f64 {
    if lambda == 0.0 {
        1.0
    } else {
        lambda.exp_m1() / lambda
    }
}

impl RetentionCurve {
    pub fn truncated_exponential(lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda.abs() > MAX_ABS_LAMBDA {
            return Err(Error::Domain {
                what: "lambda",
                value: lambda,
                domain: "[-500, 500]",
            });
        }
        Ok(Self::TruncatedExponential { lambda })
    }

    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self> {
        Tabulated::new(knots).map(Self::Tabulated)
    }

    /// Truncated exponential curve whose mean watch-time equals `target`.
    pub fn with_mean_watch_time(target: f64) -> Result<Self> {
        fit_lambda_to_watch_time(target).map(|lambda| Self::TruncatedExponential { lambda })
    }

    /// `R(τ)`; fails outside `[0, 1]`.
    pub fn eval(&self, tau: f64) -> Result<f64> {
        check_unit_interval("tau", tau)?;
        Ok(self.value(tau))
    }

    /// `R(τ)` with `τ` clamped into `[0, 1]`. Hot-path variant of [`eval`].
    ///
    /// [`eval`]: Self::eval
    pub fn value(&self, tau: f64) -> f64 {
        let tau = tau.clamp(0.0, 1.0);
        match self {
            Self::Constant => 1.0,
            Self::TruncatedExponential { lambda } => {
                let l = *lambda;
                if l == 0.0 {
                    1.0 - tau
                } else {
                    ((l * (1.0 - tau)).exp_m1() / l.exp_m1()).clamp(0.0, 1.0)
                }
            }
            Self::Tabulated(t) => t.value(tau),
        }
    }

    /// `∫_a^b R(τ) dτ` for `0 <= a <= b <= 1`, in closed form for every variant.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let a = a.clamp(0.0, 1.0);
        let b = b.clamp(0.0, 1.0);
        if b <= a {
            return 0.0;
        }
        match self {
            Self::Constant => b - a,
            Self::TruncatedExponential { lambda } => {
                let l = *lambda;
                (exp_second_remainder(l, 1.0 - a) - exp_second_remainder(l, 1.0 - b)) / exprel(l)
            }
            Self::Tabulated(t) => t.integral(a, b),
        }
    }

    /// Average watch-time `∫_0^1 R`.
    pub fn mean_watch_time(&self) -> f64 {
        self.integral(0.0, 1.0)
    }

    /// `sup { τ ∈ [0, 1] : R(τ) >= r }`, the right end of the prefix where the
    /// curve is at least `r` (0 when `r > 1`).
    pub fn upper_inverse(&self, r: f64) -> f64 {
        if r <= 0.0 {
            // R >= 0 everywhere.
            return 1.0;
        }
        if r > 1.0 {
            return 0.0;
        }
        match self {
            Self::Constant => 1.0,
            Self::TruncatedExponential { lambda } => {
                let l = *lambda;
                if r >= 1.0 {
                    0.0
                } else if l == 0.0 {
                    1.0 - r
                } else {
                    (1.0 - (r * l.exp_m1()).ln_1p() / l).clamp(0.0, 1.0)
                }
            }
            Self::Tabulated(t) => t.upper_inverse(r),
        }
    }

    /// Same as [`upper_inverse`] but by bisection on [`value`] only, without
    /// using the variant's closed form.
    ///
    /// [`upper_inverse`]: Self::upper_inverse
    /// [`value`]: Self::value
    pub fn upper_inverse_by_search(&self, r: f64) -> f64 {
        if r <= 0.0 || self.value(1.0) >= r {
            return 1.0;
        }
        if r > 1.0 {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.value(mid) >= r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Inverse-CDF draw of the abandonment point: the `b` with `1 - R(b) = u`.
    pub fn sample_abandonment(&self, u: f64) -> f64 {
        self.upper_inverse(1.0 - u)
    }

    /// One-sided slopes `(R'(0+), R'(1-))`.
    pub fn boundary_slopes(&self) -> (f64, f64) {
        match self {
            Self::Constant => (0.0, 0.0),
            Self::TruncatedExponential { lambda } => {
                let l = *lambda;
                if l == 0.0 {
                    (-1.0, -1.0)
                } else {
                    let scale = -l / l.exp_m1();
                    (scale * l.exp(), scale)
                }
            }
            Self::Tabulated(t) => t.slopes(),
        }
    }

    /// Positions where the curve is not smooth (tabulated knots).
    pub fn breakpoints(&self) -> &[(f64, f64)] {
        match self {
            Self::Tabulated(t) => t.knots(),
            _ => &[],
        }
    }

    /// True when `R` is constant on some interval of positive length.
    pub fn has_plateau(&self) -> bool {
        match self {
            Self::Constant => true,
            Self::TruncatedExponential { .. } => false,
            Self::Tabulated(t) => t
                .knots
                .windows(2)
                .any(|s| s[1].0 > s[0].0 && s[1].1 == s[0].1),
        }
    }
}

/// Mean watch-time of the truncated exponential family as a function of λ:
/// `1/λ - e^{-λ}/(1 - e^{-λ})`, equal to 1/2 at λ = 0 and decreasing in λ.
pub fn truncated_exponential_mean(lambda: f64) -> f64 {
    if lambda.abs() < 1e-4 {
        // Series of 1/λ - 1/(e^λ - 1).
        let l2 = lambda * lambda;
        0.5 - lambda / 12.0 + lambda * l2 / 720.0 - lambda * l2 * l2 / 30240.0
    } else {
        1.0 / lambda - 1.0 / lambda.exp_m1()
    }
}

/// λ of the truncated exponential curve with mean watch-time `target`.
///
/// Targets above 1/2 need λ < 0. Bisection on the closed-form mean, stopping
/// once the mean matches to 1e-12.
pub fn fit_lambda_to_watch_time(target: f64) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Domain {
            what: "watch-time",
            value: target,
            domain: "(0, 1)",
        });
    }
    let (lo_mean, hi_mean) = (
        truncated_exponential_mean(MAX_ABS_LAMBDA),
        truncated_exponential_mean(-MAX_ABS_LAMBDA),
    );
    if target <= lo_mean || target >= hi_mean {
        return Err(Error::Domain {
            what: "watch-time",
            value: target,
            domain: "the range reachable with |lambda| <= 500",
        });
    }
    // The mean decreases in λ.
    let (mut lo, mut hi) = (-MAX_ABS_LAMBDA, MAX_ABS_LAMBDA);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let m = truncated_exponential_mean(mid);
        if (m - target).abs() <= 1e-12 {
            return Ok(mid);
        }
        if m > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum CurveRepr {
    Constant,
    TruncatedExponential { lambda: f64 },
    Tabulated { knots: Vec<(f64, f64)> },
}

impl TryFrom<CurveRepr> for RetentionCurve {
    type Error = Error;

    fn try_from(repr: CurveRepr) -> Result<Self> {
        match repr {
            CurveRepr::Constant => Ok(Self::Constant),
            CurveRepr::TruncatedExponential { lambda } => Self::truncated_exponential(lambda),
            CurveRepr::Tabulated { knots } => Self::tabulated(knots),
        }
    }
}

impl From<RetentionCurve> for CurveRepr {
    fn from(curve: RetentionCurve) -> Self {
        match curve {
            RetentionCurve::Constant => Self::Constant,
            RetentionCurve::TruncatedExponential { lambda } => {
                Self::TruncatedExponential { lambda }
            }
            RetentionCurve::Tabulated(t) => Self::Tabulated { knots: t.knots },
        }
    }
}
