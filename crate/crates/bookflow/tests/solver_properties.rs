//! Long-horizon structural properties of the explicit book solver:
//! conservation, stationarity, symmetry, ordering, and the exact
//! compact-support reference solution.

use approx::assert_abs_diff_eq;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bookflow::book::{BookProfile, PhysicalParams, PriceGrid, Side, SourceTerm};
use bookflow::exact;
use bookflow::pde::{self, BcKind, BoundaryConditions, Mode, SolverConfig, Trajectory};

fn grid(s_min: f64, s_max: f64, n: usize) -> PriceGrid {
    PriceGrid::new(s_min, s_max, n).unwrap()
}

/// Smooth compact bump `peak * (1 - ((s - center)/half)^2)_+`.
fn bump(g: &PriceGrid, center: f64, half: f64, peak: f64) -> Vec<f64> {
    (0..g.n_cells())
        .map(|i| {
            let x = (g.cell_center(i) - center) / half;
            (peak * (1.0 - x * x)).max(0.0)
        })
        .collect()
}

fn closed_run(initial: &BookProfile, t_end: f64) -> Trajectory {
    let cfg = SolverConfig {
        t_end,
        output_times: vec![t_end],
        record_every: 10,
        ..SolverConfig::default()
    };
    pde::run(
        initial,
        &PhysicalParams::default(),
        &BoundaryConditions::closed(),
        &cfg,
    )
    .unwrap()
}

#[test]
fn mass_is_conserved_over_twenty_thousand_steps() {
    let g = grid(0.0, 4.0, 200);
    let h = bump(&g, 2.0, 1.0, 1.0);
    let initial = BookProfile::new(g, Side::Ask, h, 0.0).unwrap();
    let m0 = bookflow::total_mass(&initial);

    let traj = closed_run(&initial, 1.0);
    let (_, m_end) = *traj.mass_series.last().unwrap();

    assert!(
        traj.steps >= 20_000,
        "run too short to stress conservation: {} steps",
        traj.steps
    );
    assert!(
        ((m_end - m0) / m0).abs() < 1e-10,
        "relative mass drift {:e}",
        (m_end - m0) / m0
    );
    assert!(
        traj.clipped_mass / m0 < 1e-9,
        "clipping created {:e} relative mass",
        traj.clipped_mass / m0
    );
}

#[test]
fn square_root_profile_is_stationary_when_pinned() {
    // h^2 linear in S has zero curvature flux divergence; pinning both end
    // cells closes the constant throughput and the profile must not move.
    let g = grid(0.0, 3.2, 160);
    let profile = exact::steady_profile(1.0, 4.0, g).unwrap();
    let h0 = profile.depths().to_vec();
    let bc =
        BoundaryConditions::from_kinds(BcKind::Depth(h0[0]), BcKind::Depth(h0[g.n_cells() - 1]))
            .unwrap();
    let params = PhysicalParams::default();
    let cfg = SolverConfig::default();

    let dt = pde::stable_dt(&profile, &params, &cfg);
    let mut state = profile;
    for _ in 0..1000 {
        state = pde::step(&state, &params, &bc, &cfg, dt).unwrap();
    }

    let drift = state
        .depths()
        .iter()
        .zip(&h0)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    assert!(drift < 1e-8, "stationary profile moved by {drift:e}");
}

#[test]
fn evolution_commutes_with_price_translation() {
    let g = grid(0.0, 8.0, 400);
    let shift_cells = 100; // 2.0 price units
    let a = BookProfile::new(g, Side::Ask, bump(&g, 2.5, 0.8, 1.0), 0.0).unwrap();
    let b = BookProfile::new(g, Side::Ask, bump(&g, 4.5, 0.8, 1.0), 0.0).unwrap();

    let ta = closed_run(&a, 0.05);
    let tb = closed_run(&b, 0.05);
    let ha = ta.snapshots.last().unwrap().1.depths().to_vec();
    let hb = tb.snapshots.last().unwrap().1.depths().to_vec();

    // Supports stay far from both walls, so the shifted run sees the same
    // stencil arithmetic cell for cell.
    for i in 0..g.n_cells() - shift_cells {
        assert_abs_diff_eq!(ha[i], hb[i + shift_cells], epsilon = 1e-13);
    }
}

#[test]
fn evolution_commutes_with_mirroring_when_drift_free() {
    let g = grid(0.0, 6.0, 300);
    // Deliberately lopsided data: a tall narrow bump leaning on a low wide one.
    let h: Vec<f64> = bump(&g, 2.0, 0.5, 1.5)
        .iter()
        .zip(bump(&g, 3.0, 1.2, 0.6))
        .map(|(a, b)| a + b)
        .collect();
    let p = BookProfile::new(g, Side::Ask, h, 0.0).unwrap();

    let direct = closed_run(&p, 0.1);
    let mirrored = closed_run(&p.mirrored(), 0.1);

    let hd = direct.snapshots.last().unwrap().1.depths().to_vec();
    let hm = mirrored.snapshots.last().unwrap().1.depths().to_vec();
    let n = hd.len();
    for i in 0..n {
        assert_abs_diff_eq!(hd[i], hm[n - 1 - i], epsilon = 1e-13);
    }
}

#[test]
fn ordered_books_stay_ordered_under_common_steps() {
    // The explicit update is monotone below the stability limit: h_i' depends
    // increasingly on every input depth. Order between two books is preserved.
    let g = grid(0.0, 4.0, 100);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let params = PhysicalParams {
        u0: 0.4,
        ..PhysicalParams::default()
    };
    let cfg = SolverConfig::default();

    for _case in 0..3 {
        let base = bump(&g, 2.0, 1.5, 1.0);
        let lo: Vec<f64> = base.iter().map(|h| h * rng.gen::<f64>()).collect();
        let hi: Vec<f64> = lo.iter().map(|h| h + 0.5 * rng.gen::<f64>()).collect();
        let mut a = BookProfile::new(g, Side::Ask, lo, 0.0).unwrap();
        let mut b = BookProfile::new(g, Side::Ask, hi, 0.0).unwrap();

        let dt = 0.45 * pde::stable_dt(&a, &params, &cfg).min(pde::stable_dt(&b, &params, &cfg));
        let bc = BoundaryConditions::closed();
        for _ in 0..400 {
            a = pde::step(&a, &params, &bc, &cfg, dt).unwrap();
            b = pde::step(&b, &params, &bc, &cfg, dt).unwrap();
        }
        for (x, y) in a.depths().iter().zip(b.depths()) {
            assert!(x <= &(y + 1e-12), "ordering violated: {x} > {y}");
        }
    }
}

#[test]
fn relaxation_source_restores_depth_at_the_configured_rate() {
    let g = grid(0.0, 1.0, 16);
    let n = g.n_cells();
    let kappa = 3.0;
    let params = PhysicalParams {
        source: SourceTerm::Relaxation {
            kappa,
            target: vec![2.0; n],
        },
        ..PhysicalParams::default()
    };
    let initial = BookProfile::new(g, Side::Ask, vec![5.0; n], 0.0).unwrap();
    let cfg = SolverConfig {
        t_end: 0.3,
        output_times: vec![0.3],
        mode: Mode::SourceOnly,
        ..SolverConfig::default()
    };
    let traj = pde::run(&initial, &params, &BoundaryConditions::closed(), &cfg).unwrap();

    // Unit-width domain: total mass equals mean depth and obeys the same
    // linear relaxation as each cell.
    let m_target = 2.0;
    let (t0, m0) = traj.mass_series[0];
    let (t1, m1) = *traj.mass_series.last().unwrap();
    let m0 = m0 - m_target;
    let m1 = m1 - m_target;
    let rate = (m0 / m1).ln() / (t1 - t0);
    assert!(
        (rate / kappa - 1.0).abs() < 0.02,
        "measured rate {rate}, configured {kappa}"
    );
}

#[test]
fn taking_liquidity_then_healing_advances_the_touch() {
    let g = grid(0.0, 4.0, 400);
    let h: Vec<f64> = (0..g.n_cells())
        .map(|i| {
            let s = g.cell_center(i);
            if (1.0..3.0).contains(&s) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let book = BookProfile::new(g, Side::Ask, h, 0.0).unwrap();
    let m0 = bookflow::total_mass(&book);

    let (after, fills) = pde::take_liquidity(&book, 0.5).unwrap();
    let filled: f64 = fills.iter().map(|f| f.quantity).sum();
    assert_abs_diff_eq!(filled, 0.5, epsilon = 1e-12);

    let cfg = SolverConfig::default();
    let touch_after = pde::find_touch(&after, &cfg).unwrap();
    assert_abs_diff_eq!(touch_after, 1.5, epsilon = g.dx());

    let traj = closed_run(&after, 0.3);
    let (_, final_touch) = *traj.touch_series.last().unwrap();
    let final_touch = final_touch.unwrap();
    assert!(
        final_touch < 1.2,
        "book failed to heal toward the taken range: touch at {final_touch}"
    );
    let (_, m_end) = *traj.mass_series.last().unwrap();
    assert!(((m_end - (m0 - 0.5)) / m0).abs() < 1e-10);
}

#[test]
fn compact_cap_run_matches_the_closed_form() {
    // Single-resolution check against the exact spreading cap; the full
    // refinement study lives with the scenario runner.
    let g = grid(-10.0, 10.0, 200);
    let cap = exact::ParabolicCap::new(1.0, 0.0).unwrap();
    let initial = cap.sample(g, 1.0).unwrap();

    let cfg = SolverConfig {
        t_end: 2.0,
        output_times: vec![2.0],
        ..SolverConfig::default()
    };
    let traj = pde::run(
        &initial,
        &PhysicalParams::default(),
        &BoundaryConditions::closed(),
        &cfg,
    )
    .unwrap();
    let end = &traj.snapshots.last().unwrap().1;

    let l1: f64 = (0..g.n_cells())
        .map(|i| (end.depths()[i] - cap.eval(g.cell_center(i), 2.0)).abs() * g.dx())
        .sum();
    assert!(l1 < 2.4e-3, "L1 error {l1:e} at n = 200");
}
