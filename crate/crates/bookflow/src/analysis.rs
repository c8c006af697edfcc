//! Measurement utilities over solver trajectories: power-law fits of the
//! touch recovery and peak decay, collapse of snapshots onto the similarity
//! shape, speed estimation for the advancing touch, and distance from the
//! steady family.

use crate::book::{peak, total_mass, BookProfile};
use crate::error::{Error, Result};
use crate::pde::{SolverConfig, Trajectory};
use crate::similarity::{solve_similarity, ShootingConfig};
use std::collections::HashMap;

/// Result of a log-log power-law fit.
#[derive(Debug, Clone)]
pub struct ScalingFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub fit_window: (f64, f64),
    pub r_squared: f64,
    /// Per-sample log residuals in fit order.
    pub residuals: Vec<f64>,
}

/// Snapshot collapse onto the similarity shape.
#[derive(Debug, Clone)]
pub struct CollapseReport {
    pub times: Vec<f64>,
    /// Common inner grid, expressed in family units via the hint.
    pub s_grid: Vec<f64>,
    /// One rescaled profile per requested time, on `s_grid`.
    pub profiles: Vec<Vec<f64>>,
    /// Relative L2 distances between rescaled profile pairs.
    pub pairwise_distance: Vec<Vec<f64>>,
    pub max_distance: f64,
}

/// Touch-speed estimate in family units.
#[derive(Debug, Clone, Copy)]
pub struct GammaEstimate {
    pub value: f64,
    /// Set when the trajectory's shape does not match any member of the
    /// similarity family (no consistent speed/width ratio), in which case
    /// `value` is the raw path-slope ratio rather than a family parameter.
    pub outside_family: bool,
}

fn least_squares(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64, Vec<f64>)> {
    let n = x.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| b - (intercept + slope * a))
        .collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let r2 = if ss_tot < 1e-30 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Some((slope, intercept, r2, residuals))
}

fn monotone_violation(values: &[f64], slack: f64) -> Option<usize> {
    let increasing = values.windows(2).position(|w| w[1] < w[0] - slack);
    let decreasing = values.windows(2).position(|w| w[1] > w[0] + slack);
    match (increasing, decreasing) {
        (None, _) | (_, None) => None,
        (Some(i), Some(j)) => Some(i.min(j)),
    }
}

/// Fits `|S0(t) - S0(t_ref)| ~ prefactor * (t - t_ref)^exponent` over the
/// window `(t_lo, t_hi]`, where the reference is the last recorded sample at
/// or before `t_lo` (for a run started by a liquidity-taking event, that is
/// the event sample itself).
///
/// Needs at least 8 samples with positive displacement, and the displacement
/// must be monotone across the window.
pub fn fit_touch_exponent(traj: &Trajectory, window: (f64, f64)) -> Result<ScalingFit> {
    let (t_lo, t_hi) = window;
    if !(t_lo.is_finite() && t_hi.is_finite() && t_lo < t_hi) {
        return Err(Error::InvalidInput(format!(
            "fit window must be an interval, got ({t_lo}, {t_hi})"
        )));
    }
    let tol = 1e-9 * t_lo.abs().max(1.0);
    let samples: Vec<(f64, f64)> = traj
        .touch_series
        .iter()
        .filter_map(|&(t, s)| s.map(|v| (t, v)))
        .collect();
    let reference = samples
        .iter()
        .rev()
        .find(|&&(t, _)| t <= t_lo + tol)
        .copied()
        .ok_or_else(|| Error::Unfittable {
            reason: format!("no touch sample at or before the window start {t_lo}"),
            samples: 0,
            max_displacement: 0.0,
        })?;
    let (t_ref, s_ref) = reference;

    let displacements: Vec<(f64, f64)> = samples
        .iter()
        .filter(|&&(t, _)| t > t_lo + tol && t <= t_hi + tol && t > t_ref)
        .map(|&(t, s)| (t, (s - s_ref).abs()))
        .collect();
    let max_d = displacements.iter().fold(0.0f64, |m, &(_, d)| m.max(d));

    let slack = 1e-6 * max_d;
    let d_only: Vec<f64> = displacements.iter().map(|&(_, d)| d).collect();
    if let Some(i) = monotone_violation(&d_only, slack) {
        return Err(Error::Unfittable {
            reason: format!(
                "touch displacement is not monotone near t = {}",
                displacements[i].0
            ),
            samples: displacements.len(),
            max_displacement: max_d,
        });
    }

    let usable: Vec<(f64, f64)> = displacements
        .into_iter()
        .filter(|&(_, d)| d > 0.0)
        .collect();
    if usable.len() < 8 {
        return Err(Error::Unfittable {
            reason: "fewer than 8 samples with positive touch displacement".into(),
            samples: usable.len(),
            max_displacement: max_d,
        });
    }

    let x: Vec<f64> = usable.iter().map(|&(t, _)| (t - t_ref).ln()).collect();
    let y: Vec<f64> = usable.iter().map(|&(_, d)| d.ln()).collect();
    let (slope, intercept, r2, residuals) =
        least_squares(&x, &y).ok_or_else(|| Error::Unfittable {
            reason: "degenerate time axis".into(),
            samples: usable.len(),
            max_displacement: max_d,
        })?;
    Ok(ScalingFit {
        exponent: slope,
        prefactor: intercept.exp(),
        fit_window: window,
        r_squared: r2,
        residuals,
    })
}

/// Fits `peak depth ~ prefactor * t^exponent` over `t` in `[t_lo, t_hi]`
/// (samples need `t > 0`). The peak series must be monotone over the window.
pub fn fit_height_exponent(traj: &Trajectory, window: (f64, f64)) -> Result<ScalingFit> {
    let (t_lo, t_hi) = window;
    if !(t_lo.is_finite() && t_hi.is_finite() && t_lo < t_hi) {
        return Err(Error::InvalidInput(format!(
            "fit window must be an interval, got ({t_lo}, {t_hi})"
        )));
    }
    let tol = 1e-9 * t_lo.abs().max(1.0);
    let usable: Vec<(f64, f64)> = traj
        .peak_series
        .iter()
        .filter(|&&(t, _, h)| t > 0.0 && t >= t_lo - tol && t <= t_hi + tol && h > 0.0)
        .map(|&(t, _, h)| (t, h))
        .collect();
    let heights: Vec<f64> = usable.iter().map(|&(_, h)| h).collect();
    let h_max = heights.iter().cloned().fold(0.0f64, f64::max);
    let h_min = heights.iter().cloned().fold(f64::INFINITY, f64::min);
    if usable.len() < 8 {
        return Err(Error::Unfittable {
            reason: "fewer than 8 peak-depth samples in the window".into(),
            samples: usable.len(),
            max_displacement: if heights.is_empty() {
                0.0
            } else {
                h_max - h_min
            },
        });
    }
    let slack = 1e-6 * (h_max - h_min);
    if let Some(i) = monotone_violation(&heights, slack) {
        return Err(Error::Unfittable {
            reason: format!("peak depth is not monotone near t = {}", usable[i].0),
            samples: usable.len(),
            max_displacement: h_max - h_min,
        });
    }
    let x: Vec<f64> = usable.iter().map(|&(t, _)| t.ln()).collect();
    let y: Vec<f64> = usable.iter().map(|&(_, h)| h.ln()).collect();
    let (slope, intercept, r2, residuals) =
        least_squares(&x, &y).ok_or_else(|| Error::Unfittable {
            reason: "degenerate time axis".into(),
            samples: usable.len(),
            max_displacement: h_max - h_min,
        })?;
    Ok(ScalingFit {
        exponent: slope,
        prefactor: intercept.exp(),
        fit_window: window,
        r_squared: r2,
        residuals,
    })
}

/// Depth at price `s` by linear interpolation between cell centers. Inside
/// the domain but beyond the end centers the nearest cell value is used;
/// outside the domain there is no book, so the depth is zero.
fn interp_depth(profile: &BookProfile, s: f64) -> f64 {
    let grid = &profile.grid;
    if s < grid.s_min() || s > grid.s_max() {
        return 0.0;
    }
    let h = profile.depths();
    let n = h.len();
    let c0 = grid.cell_center(0);
    let dx = grid.dx();
    let pos = (s - c0) / dx;
    if pos <= 0.0 {
        return h[0];
    }
    if pos >= (n - 1) as f64 {
        return h[n - 1];
    }
    let i = pos as usize;
    let frac = pos - i as f64;
    h[i] * (1.0 - frac) + h[i + 1] * frac
}

/// Number of inner-coordinate samples per collapsed profile.
const COLLAPSE_POINTS: usize = 601;
/// Inner coordinate extends to three peak offsets above the touch.
const COLLAPSE_RANGE: f64 = 3.0;

/// Rescales snapshots at `times` onto the inner coordinate
/// `(S - S0) / (S_peak - S0)` with depth normalized by the peak, then
/// measures their mutual relative L2 distances. The hint labels the output
/// grid in family units through the hinted member's peak location; distances
/// are independent of the hint.
pub fn collapse(traj: &Trajectory, times: &[f64], gamma_hint: f64) -> Result<CollapseReport> {
    if times.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "collapse needs at least 3 snapshot times, got {}",
            times.len()
        )));
    }
    let family = solve_similarity(gamma_hint, &ShootingConfig::default())?;
    let cfg = SolverConfig::default();

    let mut profiles: Vec<Vec<f64>> = Vec::with_capacity(times.len());
    for &t_req in times {
        let tol = 1e-6 * t_req.abs().max(1.0);
        let (_, snap) = traj
            .snapshots
            .iter()
            .find(|(t, _)| (t - t_req).abs() <= tol)
            .ok_or(Error::SnapshotLookup { t: t_req })?;
        let s0 = crate::pde::find_touch(snap, &cfg).ok_or_else(|| Error::Unfittable {
            reason: format!("snapshot at t = {t_req} holds an empty book"),
            samples: 0,
            max_displacement: 0.0,
        })?;
        let (p_pos, p_h) = peak(snap).ok_or_else(|| Error::Unfittable {
            reason: format!("snapshot at t = {t_req} holds an empty book"),
            samples: 0,
            max_displacement: 0.0,
        })?;
        let offset = p_pos - s0;
        if !(offset > 0.0) {
            return Err(Error::Unfittable {
                reason: format!("snapshot at t = {t_req} has no peak above the touch"),
                samples: 0,
                max_displacement: offset,
            });
        }
        let prof: Vec<f64> = (0..COLLAPSE_POINTS)
            .map(|k| {
                let inner = COLLAPSE_RANGE * k as f64 / (COLLAPSE_POINTS - 1) as f64;
                interp_depth(snap, s0 + inner * offset) / p_h
            })
            .collect();
        profiles.push(prof);
    }

    let norm = |p: &[f64]| p.iter().map(|v| v * v).sum::<f64>().sqrt();
    let m = profiles.len();
    let mut pairwise = vec![vec![0.0; m]; m];
    let mut max_distance = 0.0f64;
    for i in 0..m {
        for j in (i + 1)..m {
            let diff: f64 = profiles[i]
                .iter()
                .zip(&profiles[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let scale = 0.5 * (norm(&profiles[i]) + norm(&profiles[j]));
            let d = if scale > 0.0 { diff / scale } else { 0.0 };
            pairwise[i][j] = d;
            pairwise[j][i] = d;
            max_distance = max_distance.max(d);
        }
    }

    // Family units: the hinted member's peak sits at s_peak(hint), depth
    // scale v_max(hint).
    let s_grid: Vec<f64> = (0..COLLAPSE_POINTS)
        .map(|k| COLLAPSE_RANGE * k as f64 / (COLLAPSE_POINTS - 1) as f64 * family.s_peak)
        .collect();
    let profiles: Vec<Vec<f64>> = profiles
        .into_iter()
        .map(|p| p.into_iter().map(|v| v * family.v_max).collect())
        .collect();

    Ok(CollapseReport {
        times: times.to_vec(),
        s_grid,
        profiles,
        pairwise_distance: pairwise,
        max_distance,
    })
}

/// Largest family parameter the fixed-point search will accept before
/// declaring the trajectory outside the family.
const GAMMA_SEARCH_MAX: f64 = 10.0;
/// Speed/width ratios at or above this value have no family fixed point.
const RATIO_MAX: f64 = 0.995;

fn family_s_peak(gamma: f64) -> Result<f64> {
    Ok(solve_similarity(gamma, &ShootingConfig::default())?.s_peak)
}

/// Estimates the family speed parameter from a trajectory over `window`.
///
/// The touch path slope `sigma` (on the `t^{1/3}` axis) and the peak-offset
/// growth rate `d0` (through the origin on the same axis) combine into the
/// raw ratio `sigma / d0`. Within the family the offset carries the shape
/// factor `s_peak(gamma)`, so the estimate solves the fixed point
/// `gamma = -sigma s_peak(gamma) / d0`. A stationary touch estimates zero; a
/// trajectory with no consistent fixed point (for example a freely spreading
/// symmetric blob, whose ratio is too fast for any member) reports the raw
/// ratio with `outside_family` set, negative for an advancing touch.
pub fn estimate_gamma(traj: &Trajectory, window: (f64, f64)) -> Result<GammaEstimate> {
    let (t_lo, t_hi) = window;
    if !(t_lo.is_finite() && t_hi.is_finite() && t_lo < t_hi) {
        return Err(Error::InvalidInput(format!(
            "estimation window must be an interval, got ({t_lo}, {t_hi})"
        )));
    }
    let tol = 1e-9 * t_lo.abs().max(1.0);
    let touch: Vec<(f64, f64)> = traj
        .touch_series
        .iter()
        .filter_map(|&(t, s)| s.map(|v| (t, v)))
        .filter(|&(t, _)| t >= t_lo - tol && t <= t_hi + tol)
        .collect();
    if touch.len() < 8 {
        return Err(Error::Unfittable {
            reason: "fewer than 8 touch samples in the window".into(),
            samples: touch.len(),
            max_displacement: 0.0,
        });
    }

    // Stationary touch: the speed is zero by inspection.
    let s_lo = touch.iter().map(|&(_, s)| s).fold(f64::INFINITY, f64::min);
    let s_hi = touch
        .iter()
        .map(|&(_, s)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    let s_scale = 1.0 + s_lo.abs().max(s_hi.abs());
    if s_hi - s_lo <= 1e-10 * s_scale {
        return Ok(GammaEstimate {
            value: 0.0,
            outside_family: false,
        });
    }

    // The power-law fit must hold on the window before a speed is meaningful.
    fit_touch_exponent(traj, window)?;

    let x: Vec<f64> = touch.iter().map(|&(t, _)| t.cbrt()).collect();
    let y: Vec<f64> = touch.iter().map(|&(_, s)| s).collect();
    let (sigma, _, _, _) = least_squares(&x, &y).ok_or_else(|| Error::Unfittable {
        reason: "degenerate time axis".into(),
        samples: touch.len(),
        max_displacement: s_hi - s_lo,
    })?;

    // Peak offsets matched to touch samples by recording time.
    let peaks: HashMap<u64, f64> = traj
        .peak_series
        .iter()
        .map(|&(t, pos, _)| (t.to_bits(), pos))
        .collect();
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for &(t, s0) in &touch {
        if let Some(&pos) = peaks.get(&t.to_bits()) {
            let offset = pos - s0;
            if offset > 0.0 {
                let xt = t.cbrt();
                sxy += xt * offset;
                sxx += xt * xt;
            }
        }
    }
    if sxx <= 0.0 {
        return Err(Error::Unfittable {
            reason: "no usable peak offsets in the window".into(),
            samples: 0,
            max_displacement: 0.0,
        });
    }
    let d0 = sxy / sxx;
    if !(d0 > 0.0) {
        return Err(Error::Unfittable {
            reason: "peak-offset growth rate is not positive".into(),
            samples: touch.len(),
            max_displacement: d0,
        });
    }

    let raw = sigma / d0;
    if sigma > 0.0 {
        // Retreating touch: no member of the family moves that way.
        let value = -sigma * family_s_peak(0.0)? / d0;
        return Ok(GammaEstimate {
            value,
            outside_family: true,
        });
    }
    let ratio = -raw;
    if ratio >= RATIO_MAX {
        return Ok(GammaEstimate {
            value: raw,
            outside_family: true,
        });
    }

    let mut g = ratio * family_s_peak(0.0)?;
    for _ in 0..40 {
        let next = ratio * family_s_peak(g)?;
        if next > GAMMA_SEARCH_MAX {
            return Ok(GammaEstimate {
                value: raw,
                outside_family: true,
            });
        }
        if (next - g).abs() <= 1e-9 * (1.0 + g.abs()) {
            return Ok(GammaEstimate {
                value: next,
                outside_family: false,
            });
        }
        g = next;
    }
    Ok(GammaEstimate {
        value: raw,
        outside_family: true,
    })
}

/// Relative L2 distance from the profile to the nearest member of the steady
/// square-root family carrying the same mass on the grid.
///
/// For each candidate extinction price the amplitude is fixed by the mass
/// constraint (the sampled candidate holds exactly the profile's volume), so
/// the search runs over the single remaining parameter: a coarse scan
/// followed by golden-section refinement.
pub fn steady_distance(profile: &BookProfile) -> Result<f64> {
    let mass = total_mass(profile);
    if mass <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let grid = &profile.grid;
    let dx = grid.dx();
    let h = profile.depths();
    let h_norm = h.iter().map(|v| v * v).sum::<f64>().sqrt();
    let centers: Vec<f64> = grid.centers();

    let dist = |s_b: f64| -> f64 {
        let mut g_sum = 0.0;
        for &c in &centers {
            g_sum += (s_b - c).max(0.0).sqrt();
        }
        if g_sum <= 0.0 {
            return f64::INFINITY;
        }
        let a = mass / (g_sum * dx);
        let mut sq = 0.0;
        for (i, &c) in centers.iter().enumerate() {
            let d = a * (s_b - c).max(0.0).sqrt() - h[i];
            sq += d * d;
        }
        sq.sqrt() / h_norm
    };

    let span = grid.s_max() - grid.s_min();
    let lo = grid.s_min() + dx;
    let hi = grid.s_max() + 0.5 * span;
    let n_scan = 240usize;
    let mut best_i = 0usize;
    let mut best = f64::INFINITY;
    for i in 0..=n_scan {
        let s_b = lo + (hi - lo) * i as f64 / n_scan as f64;
        let d = dist(s_b);
        if d < best {
            best = d;
            best_i = i;
        }
    }
    let scan_step = (hi - lo) / n_scan as f64;
    let mut a = lo + scan_step * (best_i.saturating_sub(1)) as f64;
    let mut b = (lo + scan_step * (best_i + 1) as f64).min(hi);

    // Golden-section refinement of the bracketed minimum.
    let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = dist(c);
    let mut fd = dist(d);
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = dist(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = dist(d);
        }
    }
    Ok(best.min(fc).min(fd))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::book::{PriceGrid, Side};
    use crate::exact::{steady_profile, ParabolicCap};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn synthetic_trajectory<F, G>(times: &[f64], touch: F, peak_h: G) -> Trajectory
    where
        F: Fn(f64) -> f64,
        G: Fn(f64) -> f64,
    {
        let mut traj = Trajectory::default();
        for &t in times {
            let s0 = touch(t);
            traj.touch_series.push((t, Some(s0)));
            traj.mass_series.push((t, 1.0));
            traj.peak_series.push((t, s0 + t.cbrt(), peak_h(t)));
        }
        traj
    }

    fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
            .collect()
    }

    #[test]
    fn touch_fit_recovers_a_pure_power_law() {
        let mut times = vec![0.0];
        times.extend(log_spaced(0.05, 10.0, 40));
        let traj = synthetic_trajectory(&times, |t| 5.0 - 2.0 * t.cbrt(), |_| 1.0);
        let fit = fit_touch_exponent(&traj, (0.0, 10.0)).unwrap();
        assert_abs_diff_eq!(fit.exponent, 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(fit.prefactor, 2.0, max_relative = 1e-12);
        assert_abs_diff_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn touch_fit_uses_the_event_sample_as_reference() {
        // The reference is the last sample at or before the window start, not
        // the first sample inside the window.
        let mut times = vec![0.0];
        times.extend(log_spaced(0.5, 8.0, 20));
        let traj = synthetic_trajectory(&times, |t| 1.0 - 0.7 * t.cbrt(), |_| 1.0);
        let fit = fit_touch_exponent(&traj, (0.0, 8.0)).unwrap();
        assert_abs_diff_eq!(fit.exponent, 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn touch_fit_rejects_thin_or_wiggly_data() {
        let times: Vec<f64> = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let traj = synthetic_trajectory(&times, |t| 5.0 - t.cbrt(), |_| 1.0);
        assert!(matches!(
            fit_touch_exponent(&traj, (0.0, 4.0)),
            Err(Error::Unfittable { .. })
        ));

        let mut times = vec![0.0];
        times.extend(log_spaced(0.1, 10.0, 30));
        let mut traj = synthetic_trajectory(&times, |t| 5.0 - t.cbrt(), |_| 1.0);
        // Corrupt one sample so the displacement dips.
        let k = traj.touch_series.len() / 2;
        let (t, s) = traj.touch_series[k];
        traj.touch_series[k] = (t, Some(s.unwrap() + 0.5));
        match fit_touch_exponent(&traj, (0.0, 10.0)) {
            Err(Error::Unfittable { reason, .. }) => {
                assert!(reason.contains("monotone"), "got: {reason}")
            }
            other => panic!("expected monotonicity rejection, got {other:?}"),
        }
    }

    #[test]
    fn height_fit_recovers_decay_and_constant_series() {
        let times = log_spaced(1.0, 30.0, 25);
        let traj = synthetic_trajectory(&times, |_| 0.0, |t| 3.0 * t.powf(-1.0 / 3.0));
        let fit = fit_height_exponent(&traj, (1.0, 30.0)).unwrap();
        assert_abs_diff_eq!(fit.exponent, -1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(fit.prefactor, 3.0, max_relative = 1e-12);

        let flat = synthetic_trajectory(&times, |_| 0.0, |_| 0.8);
        let fit = fit_height_exponent(&flat, (1.0, 30.0)).unwrap();
        assert_abs_diff_eq!(fit.exponent, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn collapse_of_an_exact_self_similar_solution_is_tight() {
        let cap = ParabolicCap::new(1.0, 0.0).unwrap();
        let grid = PriceGrid::new(-12.0, 12.0, 1200).unwrap();
        let mut traj = Trajectory::default();
        for t in [1.0, 2.0, 4.0] {
            traj.snapshots.push((t, cap.sample(grid, t).unwrap()));
        }
        let report = collapse(&traj, &[1.0, 2.0, 4.0], 0.0).unwrap();
        assert!(
            report.max_distance < 0.01,
            "self-similar snapshots must collapse, got {}",
            report.max_distance
        );
        assert_eq!(report.profiles.len(), 3);
        assert_eq!(report.s_grid.len(), report.profiles[0].len());
        // Distances are symmetric with a zero diagonal.
        for i in 0..3 {
            assert_eq!(report.pairwise_distance[i][i], 0.0);
            for j in 0..3 {
                assert_eq!(
                    report.pairwise_distance[i][j],
                    report.pairwise_distance[j][i]
                );
            }
        }
    }

    #[test]
    fn collapse_validates_its_inputs() {
        let cap = ParabolicCap::new(1.0, 0.0).unwrap();
        let grid = PriceGrid::new(-12.0, 12.0, 600).unwrap();
        let mut traj = Trajectory::default();
        for t in [1.0, 2.0, 4.0] {
            traj.snapshots.push((t, cap.sample(grid, t).unwrap()));
        }
        assert!(matches!(
            collapse(&traj, &[1.0, 2.0], 0.0),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            collapse(&traj, &[1.0, 2.0, 3.5], 0.0),
            Err(Error::SnapshotLookup { .. })
        ));
    }

    #[test]
    fn stationary_touch_estimates_zero_speed() {
        let times = log_spaced(0.5, 10.0, 20);
        let traj = synthetic_trajectory(&times, |_| 3.0, |t| t.powf(-1.0 / 3.0));
        let est = estimate_gamma(&traj, (0.5, 10.0)).unwrap();
        assert_eq!(est.value, 0.0);
        assert!(!est.outside_family);
    }

    #[test]
    fn steady_distance_vanishes_on_the_family_itself() {
        let grid = PriceGrid::new(0.0, 4.0, 400).unwrap();
        let p = steady_profile(1.2, 3.0, grid).unwrap();
        let d = steady_distance(&p).unwrap();
        assert!(d < 1e-10, "exact family member must measure zero, got {d}");

        // A perturbed profile sits measurably away.
        let mut h = p.depths().to_vec();
        for (i, v) in h.iter_mut().enumerate() {
            *v += 0.05 * ((i as f64) * 0.3).sin().abs();
        }
        let q = BookProfile::new(grid, Side::Ask, h, 0.0).unwrap();
        let dq = steady_distance(&q).unwrap();
        assert!(dq > 10.0 * d.max(1e-12));

        let empty = BookProfile::empty(grid, Side::Ask);
        assert!(matches!(steady_distance(&empty), Err(Error::ZeroMass)));
    }
}
