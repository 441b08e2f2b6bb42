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

//! Scalar root finding and line minimization.

/// Bisection for a monotone `f` with `f(lo) <= 0 <= f(hi)`, stopping once the
/// bracket is within `rtol` relative width or `max_iter` halvings were done.
/// Returns the final bracket.
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    rtol: f64,
    max_iter: usize,
) -> (f64, f64) {
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= rtol * hi.abs().max(lo.abs()) {
            break;
        }
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Root of an increasing function on `[lo, hi]` with `f(lo) < 0 < f(hi)`,
/// using Newton steps that fall back to bisection whenever they would leave
/// the bracket. `f` returns `(value, derivative)`.
pub fn newton_bisect<F: FnMut(f64) -> (f64, f64)>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    rtol: f64,
    max_iter: usize,
) -> f64 {
    let mut x = 0.5 * (lo + hi);
    for _ in 0..max_iter {
        let (v, d) = f(x);
        if v == 0.0 {
            return x;
        }
        if v < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - v / d;
        let next = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= rtol * next.abs() || hi - lo <= rtol * hi.abs() {
            return next;
        }
        x = next;
    }
    x
}

/// Grows `hi` geometrically from `start` until `f(hi) > 0`. Returns `None`
/// when no sign change is found within `max_doublings`.
pub fn expand_upper<F: FnMut(f64) -> f64>(
    mut f: F,
    start: f64,
    max_doublings: usize,
) -> Option<f64> {
    let mut hi = start;
    for _ in 0..max_doublings {
        if f(hi) > 0.0 {
            return Some(hi);
        }
        hi *= 2.0;
    }
    None
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for a minimum of a unimodal `f` on `[a, b]`.
/// Returns `(argmin, min)` among all evaluated points, endpoints included.
pub fn golden_section_min<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (a.min(b), a.max(b));
    let mut best = (a, f(a));
    let fb = f(b);
    if fb < best.1 {
        best = (b, fb);
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        for (x, v) in [(c, fc), (d, fd)] {
            if v < best.1 {
                best = (x, v);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_brackets_sqrt2() {
        let (lo, hi) = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14, 200);
        assert!(lo <= std::f64::consts::SQRT_2 && std::f64::consts::SQRT_2 <= hi);
        assert!(hi - lo < 1e-13);
    }

    #[test]
    fn newton_bisect_converges_on_flat_tail() {
        // 1 - e^{-x} = 0.999999 has its root far out where the slope is tiny.
        let target = 0.999_999;
        let hi = expand_upper(|x| 1.0 - (-x).exp() - target, 1.0, 64).unwrap();
        let x = newton_bisect(
            |x| (1.0 - (-x).exp() - target, (-x).exp()),
            0.0,
            hi,
            1e-14,
            200,
        );
        assert!((x - (1e6f64).ln()).abs() < 1e-9);
    }

    #[test]
    fn golden_finds_interior_and_boundary_minima() {
        let (x, _) = golden_section_min(|x| (x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-8);
        assert!((x - 0.3).abs() < 1e-7);
        let (x, _) = golden_section_min(|x| -x, 0.0, 1.0, 1e-8);
        assert_eq!(x, 1.0);
    }
}
