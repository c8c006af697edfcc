//! Self-similar recovery shape: the profile `v(s)` on the inner scale, where
//! depth and distance above the touch grow like `t^{1/3}` powers,
//!
//! ```text
//! 3 (v^2)'' + (s - gamma) v' + v = 0,   v(0) = 0,   v -> v_inf / s,
//! ```
//!
//! with `gamma >= 0` the dimensionless speed of the advancing touch.
//!
//! The boundary-value problem is solved through its exact first integral
//! `3 (v^2)' + (s - gamma) v = v_inf`: in `w = v^2` that is a regular
//! first-order equation integrated outward from the degenerate touch, where a
//! fractional power series seeds the march. Every trajectory of the first
//! integral solves the shape equation, so no shooting iteration is needed and
//! the far field settles onto `v_inf / s` automatically. Solutions are
//! normalized to `v_inf = 1`; other amplitudes follow from the family's
//! scaling symmetry.

use crate::book::{BookProfile, PriceGrid, Side};
use crate::error::{Error, Result};

/// Integration step on the similarity coordinate.
const STEP: f64 = 5e-3;

/// Far-field coefficient the profile is normalized to.
const V_INF_TARGET: f64 = 1.0;

#[derive(Debug, Clone)]
pub struct ShootingConfig {
    /// Outer edge of the similarity grid.
    pub s_max: f64,
    /// Number of terms of the touch series used to seed the march (1..=4).
    pub series_terms: usize,
    /// Tolerance reserved for bracketing searches; retained for
    /// compatibility, the outward first-integral march does not iterate.
    pub bisect_tol: f64,
    pub max_iter: usize,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self {
            s_max: 50.0,
            series_terms: 3,
            bisect_tol: 1e-9,
            max_iter: 200,
        }
    }
}

impl ShootingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.s_max.is_finite() && self.s_max >= 10.0) {
            return Err(Error::InvalidInput(format!(
                "similarity grid must extend to at least s = 10, got {}",
                self.s_max
            )));
        }
        if !(1..=4).contains(&self.series_terms) {
            return Err(Error::InvalidInput(format!(
                "series_terms must lie in 1..=4, got {}",
                self.series_terms
            )));
        }
        if !(self.bisect_tol > 0.0) {
            return Err(Error::InvalidInput(format!(
                "bisect_tol must be positive, got {}",
                self.bisect_tol
            )));
        }
        Ok(())
    }
}

/// Solved similarity shape, normalized to a unit far-field coefficient.
#[derive(Debug, Clone)]
pub struct SimilarityProfile {
    pub gamma: f64,
    pub s: Vec<f64>,
    pub v: Vec<f64>,
    /// Derivative from the first integral, `v' = (v_inf - (s - gamma) v) / (6 v)`;
    /// the touch value is a one-sided difference since the slope diverges there.
    pub v_prime: Vec<f64>,
    /// Far-field coefficient recovered from the tail; close to 1 by
    /// construction.
    pub v_inf: f64,
    /// Location of the profile maximum.
    pub s_peak: f64,
    /// Height of the profile maximum.
    pub v_max: f64,
}

impl SimilarityProfile {
    /// Linear interpolation of `v` at `x`; zero below the touch, the
    /// three-term far-field tail beyond the grid.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let last = *self.s.last().expect("nonempty grid");
        if x >= last {
            let g = self.gamma;
            return self.v_inf * (1.0 / x + g / (x * x) + g * g / (x * x * x));
        }
        let step = self.s[1] - self.s[0];
        let i = ((x - self.s[0]) / step) as usize;
        let i = i.min(self.s.len() - 2);
        let frac = (x - self.s[i]) / step;
        self.v[i] * (1.0 - frac) + self.v[i + 1] * frac
    }
}

fn seed_w(gamma: f64, s: f64, terms: usize) -> f64 {
    let a1 = V_INF_TARGET / 3.0;
    let sq = a1.sqrt();
    let a2 = 2.0 * gamma * sq / 9.0;
    let a3 = gamma * gamma / 54.0;
    let a4 = 2.0 * sq / 15.0 * (gamma.powi(3) / 108.0 - 1.0);
    let mut w = a1 * s;
    if terms >= 2 {
        w += a2 * s.powf(1.5);
    }
    if terms >= 3 {
        w += a3 * s * s;
    }
    if terms >= 4 {
        w += a4 * s.powf(2.5);
    }
    w
}

fn solve_with_step(gamma: f64, cfg: &ShootingConfig, step: f64) -> Result<SimilarityProfile> {
    if !gamma.is_finite() {
        return Err(Error::InvalidInput(format!(
            "gamma must be finite, got {gamma}"
        )));
    }
    if gamma < 0.0 {
        return Err(Error::NoPositiveSolution { gamma });
    }
    cfg.validate()?;

    let n = (cfg.s_max / step).round() as usize;
    let s_grid: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
    let mut w = vec![0.0; n + 1];
    w[1] = seed_w(gamma, s_grid[1], cfg.series_terms);

    let f = |s: f64, w: f64| (V_INF_TARGET - (s - gamma) * w.max(0.0).sqrt()) / 3.0;
    for i in 1..n {
        let s = s_grid[i];
        let k1 = f(s, w[i]);
        let k2 = f(s + 0.5 * step, w[i] + 0.5 * step * k1);
        let k3 = f(s + 0.5 * step, w[i] + 0.5 * step * k2);
        let k4 = f(s + step, w[i] + step * k3);
        w[i + 1] = w[i] + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }

    let v: Vec<f64> = w.iter().map(|&x| x.max(0.0).sqrt()).collect();
    let mut v_prime = vec![0.0; n + 1];
    v_prime[0] = (v[1] - v[0]) / step;
    for i in 1..=n {
        v_prime[i] = (V_INF_TARGET - (s_grid[i] - gamma) * v[i]) / (6.0 * v[i]);
    }

    // Tail estimate of the far-field coefficient through the inverse-power
    // expansion v ~ v_inf (1/s + gamma/s^2 + gamma^2/s^3).
    let s_last = s_grid[n];
    let tail = 1.0 / s_last + gamma / (s_last * s_last) + gamma * gamma / s_last.powi(3);
    let v_inf = v[n] / tail;

    // Peak: discrete argmax sharpened by the local parabola.
    let (mut ip, mut vmax) = (0usize, 0.0f64);
    for (i, &vi) in v.iter().enumerate() {
        if vi > vmax {
            vmax = vi;
            ip = i;
        }
    }
    let (s_peak, v_max) = if ip == 0 || ip == n {
        (s_grid[ip], vmax)
    } else {
        let (ym, y0, yp) = (v[ip - 1], v[ip], v[ip + 1]);
        let den = ym - 2.0 * y0 + yp;
        if den < 0.0 {
            let delta = (0.5 * (ym - yp) / den).clamp(-0.5, 0.5);
            (s_grid[ip] + delta * step, y0 - 0.25 * (ym - yp) * delta)
        } else {
            (s_grid[ip], vmax)
        }
    };

    Ok(SimilarityProfile {
        gamma,
        s: s_grid,
        v,
        v_prime,
        v_inf,
        s_peak,
        v_max,
    })
}

/// Solves the similarity boundary-value problem for touch speed `gamma >= 0`.
pub fn solve_similarity(gamma: f64, cfg: &ShootingConfig) -> Result<SimilarityProfile> {
    solve_with_step(gamma, cfg, STEP)
}

/// Largest pointwise residual of the shape equation
/// `3 (v^2)'' + (s - gamma) v' + v` over the grid, with both derivatives
/// taken by five-point finite differences so the check is independent of how
/// the profile was produced.
///
/// Points closer than half a similarity unit to the lower grid edge are
/// excluded: the square-root touch has unbounded derivatives that polynomial
/// stencils cannot represent.
pub fn residual(profile: &SimilarityProfile) -> f64 {
    let s = &profile.s;
    let v = &profile.v;
    let n = s.len();
    if n < 5 {
        return f64::NAN;
    }
    let step = s[1] - s[0];
    let w: Vec<f64> = v.iter().map(|x| x * x).collect();
    let cutoff = s[0] + 0.5;
    let mut worst = 0.0f64;
    for i in 2..n - 2 {
        if s[i] < cutoff {
            continue;
        }
        let wpp = (-w[i - 2] + 16.0 * w[i - 1] - 30.0 * w[i] + 16.0 * w[i + 1] - w[i + 2])
            / (12.0 * step * step);
        let vp = (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * step);
        let r = 3.0 * wpp + (s[i] - profile.gamma) * vp + v[i];
        worst = worst.max(r.abs());
    }
    worst
}

/// Dimensional book profile generated by the similarity solution at time
/// `t > 0`, sampled on `grid`.
///
/// With scales `(h0, l0)` and the touch passing through `s0` at `t = 1`, the
/// touch path is `S0(t) = s0 - gamma l0 (t^{1/3} - 1)` and
///
/// ```text
/// h(S, t) = h0 t^{-1/3} v((S - S0(t)) / (l0 t^{1/3})).
/// ```
///
/// The pair solves the depth equation when `h0 = l0^2`; other scale pairs
/// sample the same shape without that dynamic meaning. At `t = 1` with unit
/// scales this reduces to `h(S) = v(S - s0)`.
pub fn dimensional_profile(
    profile: &SimilarityProfile,
    t: f64,
    s0: f64,
    scales: (f64, f64),
    grid: PriceGrid,
) -> Result<BookProfile> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Domain(format!(
            "the similarity solution needs t > 0, got {t}"
        )));
    }
    let (h0, l0) = scales;
    if !(h0.is_finite() && h0 > 0.0 && l0.is_finite() && l0 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "scales must be finite and positive, got ({h0}, {l0})"
        )));
    }
    if !s0.is_finite() {
        return Err(Error::InvalidInput(format!("s0 must be finite, got {s0}")));
    }
    let t13 = t.powf(1.0 / 3.0);
    let s0_t = s0 - profile.gamma * l0 * (t13 - 1.0);
    let height = h0 / t13;
    let width = l0 * t13;
    let h: Vec<f64> = (0..grid.n_cells())
        .map(|i| height * profile.eval((grid.cell_center(i) - s0_t) / width))
        .collect();
    BookProfile::new(grid, Side::Ask, h, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::book::peak;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn rejects_invalid_input() {
        let cfg = ShootingConfig::default();
        assert!(matches!(
            solve_similarity(-0.5, &cfg),
            Err(Error::NoPositiveSolution { .. })
        ));
        assert!(solve_similarity(f64::NAN, &cfg).is_err());
        let bad = ShootingConfig {
            s_max: 2.0,
            ..ShootingConfig::default()
        };
        assert!(solve_similarity(1.0, &bad).is_err());
    }

    #[test]
    fn profile_satisfies_touch_and_far_field_structure() {
        let cfg = ShootingConfig::default();
        for gamma in [0.0, 1.0, 2.0] {
            let p = solve_similarity(gamma, &cfg).unwrap();
            assert_eq!(p.v[0], 0.0);
            assert!(p.v.iter().skip(1).all(|&x| x > 0.0));
            // Near the touch v ~ sqrt(v_inf s / 3); the first correction is
            // O(gamma sqrt(s)), so probe close in.
            let s_probe = p.s[2];
            let expected = (V_INF_TARGET * s_probe / 3.0).sqrt();
            assert_relative_eq!(p.v[2], expected, max_relative = 0.05);
            // Far field: s v / v_inf -> 1 with the gamma/s correction.
            let n = p.s.len() - 1;
            let ratio = p.s[n] * p.v[n] / p.v_inf;
            assert_abs_diff_eq!(ratio, 1.0 + gamma / p.s[n], epsilon = 2e-3);
            assert!((p.v_inf - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn peak_location_grows_with_gamma() {
        let cfg = ShootingConfig::default();
        let mut last = 0.0;
        for gamma in [0.0, 0.5, 1.0, 2.0] {
            let p = solve_similarity(gamma, &cfg).unwrap();
            assert!(p.s_peak > last, "s_peak must increase with gamma");
            assert!(p.v_max > 0.0);
            last = p.s_peak;
        }
    }

    #[test]
    fn finite_difference_residual_is_small() {
        let cfg = ShootingConfig::default();
        for gamma in [0.0, 0.5, 1.0, 2.0] {
            let p = solve_similarity(gamma, &cfg).unwrap();
            let r = residual(&p);
            assert!(
                r < 1e-6 * p.v_max,
                "residual {r} too large at gamma = {gamma}"
            );
        }
    }

    #[test]
    fn residual_check_accepts_the_exact_parabola() {
        // v = c - s^2 / 12 solves the shape equation at gamma = 0 wherever it
        // is positive; the five-point stencils are exact on quartics, so the
        // residual must be round-off.
        let c = 2.0;
        let step = 0.01;
        let n = 800;
        let s: Vec<f64> = (0..=n).map(|i| -4.0 + i as f64 * step).collect();
        let v: Vec<f64> = s.iter().map(|&x| c - x * x / 12.0).collect();
        assert!(v.iter().all(|&x| x > 0.0), "stay inside the support");
        let v_prime: Vec<f64> = s.iter().map(|&x| -x / 6.0).collect();
        let p = SimilarityProfile {
            gamma: 0.0,
            s,
            v,
            v_prime,
            v_inf: 1.0,
            s_peak: 0.0,
            v_max: c,
        };
        assert!(residual(&p) < 1e-9);
    }

    #[test]
    fn halving_the_step_does_not_move_the_solution() {
        let cfg = ShootingConfig::default();
        let gamma = 1.0;
        let coarse = solve_with_step(gamma, &cfg, STEP).unwrap();
        let fine = solve_with_step(gamma, &cfg, STEP / 2.0).unwrap();
        assert_abs_diff_eq!(coarse.s_peak, fine.s_peak, epsilon = 1e-5);
        assert_abs_diff_eq!(coarse.v_max, fine.v_max, epsilon = 1e-7);
        assert_abs_diff_eq!(coarse.v_inf, fine.v_inf, epsilon = 1e-7);
    }

    #[test]
    fn eval_interpolates_and_extends() {
        let cfg = ShootingConfig::default();
        let p = solve_similarity(1.0, &cfg).unwrap();
        assert_eq!(p.eval(-1.0), 0.0);
        assert_eq!(p.eval(0.0), 0.0);
        // On-grid values are reproduced exactly.
        assert_eq!(p.eval(p.s[100]), p.v[100]);
        // Beyond the grid the tail continues smoothly.
        let inside = p.eval(cfg.s_max - 1e-9);
        let outside = p.eval(cfg.s_max + 1e-9);
        assert_relative_eq!(inside, outside, max_relative = 1e-3);
    }

    #[test]
    fn dimensional_profile_reduces_to_v_at_unit_time() {
        let cfg = ShootingConfig::default();
        let p = solve_similarity(1.0, &cfg).unwrap();
        let grid = PriceGrid::new(0.0, 20.0, 2000).unwrap();
        let s0 = 2.0;
        let book = dimensional_profile(&p, 1.0, s0, (1.0, 1.0), grid).unwrap();
        for i in [0, 150, 500, 1200] {
            let s = grid.cell_center(i);
            assert_relative_eq!(
                book.depths()[i],
                p.eval(s - s0),
                max_relative = 1e-12,
                epsilon = 1e-12
            );
        }
        assert!(dimensional_profile(&p, 0.0, s0, (1.0, 1.0), grid).is_err());
        assert!(dimensional_profile(&p, 1.0, s0, (0.0, 1.0), grid).is_err());
    }

    #[test]
    fn dimensional_profile_spreads_and_advances() {
        // gamma > 0: the touch moves to lower prices as t grows, the book
        // flattens as t^{-1/3}, and the peak offset widens as t^{1/3}.
        let cfg = ShootingConfig::default();
        let gamma = 1.0;
        let p = solve_similarity(gamma, &cfg).unwrap();
        let grid = PriceGrid::new(-10.0, 30.0, 4000).unwrap();
        let s0 = 5.0;
        let b1 = dimensional_profile(&p, 1.0, s0, (1.0, 1.0), grid).unwrap();
        let b8 = dimensional_profile(&p, 8.0, s0, (1.0, 1.0), grid).unwrap();
        let (pos1, h1) = peak(&b1).unwrap();
        let (pos8, h8) = peak(&b8).unwrap();
        assert_relative_eq!(h8 / h1, 0.5, max_relative = 1e-3);
        // Touch path: s0 - gamma (t^{1/3} - 1); peak sits s_peak t^{1/3} above.
        let want1 = s0 + p.s_peak;
        let want8 = s0 - gamma * (2.0 - 1.0) + p.s_peak * 2.0;
        assert_abs_diff_eq!(pos1, want1, epsilon = 2.0 * grid.dx());
        assert_abs_diff_eq!(pos8, want8, epsilon = 2.0 * grid.dx());
    }
}
