//! Scenario execution: build the configured book, run it, measure what was
//! asked for, and emit deterministic CSV files plus a run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use bookflow::analysis;
use bookflow::book::{BookProfile, PriceGrid, Side};
use bookflow::error::{Error, Result};
use bookflow::exact::{self, ParabolicCap};
use bookflow::pde::{self, ExecutedLevel, SolverConfig, Trajectory};
use bookflow::similarity::{self, ShootingConfig};

use crate::config::{InitSpec, ScenarioConfig};

/// Shipped scenario files, also usable by name instead of a path.
const BUILTINS: &[(&str, &str)] = &[
    (
        "fig5_unlimited",
        include_str!("../../../configs/fig5_unlimited.cfg"),
    ),
    (
        "fig6_limited",
        include_str!("../../../configs/fig6_limited.cfg"),
    ),
    (
        "barenblatt_golden",
        include_str!("../../../configs/barenblatt_golden.cfg"),
    ),
];

const GOLDEN_THRESHOLDS: &str = include_str!("../../../data/golden_thresholds.csv");

pub fn builtin(name: &str) -> Option<&'static str> {
    BUILTINS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

pub fn builtin_names() -> Vec<&'static str> {
    BUILTINS.iter().map(|(n, _)| *n).collect()
}

/// L1 acceptance threshold for the refinement study at `n` cells, from the
/// table shipped with the repository.
pub fn golden_threshold(n: usize) -> Option<f64> {
    for line in GOLDEN_THRESHOLDS.lines().skip(1) {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let cells: usize = parts.next()?.trim().parse().ok()?;
        let thr: f64 = parts.next()?.trim().parse().ok()?;
        if cells == n {
            return Some(thr);
        }
    }
    None
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Domain(format!("{}: {e}", path.display()))
}

/// Formats a value for CSV output, refusing to ever emit NaN or infinity.
fn fnum(x: f64, context: &str) -> Result<String> {
    if x.is_finite() {
        Ok(format!("{x}"))
    } else {
        Err(Error::Domain(format!("non-finite value in {context}")))
    }
}

// ---------------------------------------------------------------------------
// Initial conditions
// ---------------------------------------------------------------------------

fn load_table(path: &Path, grid: PriceGrid) -> Result<BookProfile> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut points: Vec<(f64, f64)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split_once('#').map_or(raw, |(head, _)| head).trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',').map(str::trim);
        let (Some(a), Some(b)) = (parts.next(), parts.next()) else {
            return Err(Error::InvalidInput(format!(
                "{} line {}: expected `S,h`",
                path.display(),
                idx + 1
            )));
        };
        let (Ok(s), Ok(h)) = (a.parse::<f64>(), b.parse::<f64>()) else {
            if points.is_empty() {
                continue; // header row
            }
            return Err(Error::InvalidInput(format!(
                "{} line {}: `{line}` is not numeric",
                path.display(),
                idx + 1
            )));
        };
        if !(s.is_finite() && h.is_finite() && h >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "{} line {}: depth values must be finite and nonnegative",
                path.display(),
                idx + 1
            )));
        }
        if let Some(&(prev, _)) = points.last() {
            if s <= prev {
                return Err(Error::InvalidInput(format!(
                    "{} line {}: prices must be strictly increasing",
                    path.display(),
                    idx + 1
                )));
            }
        }
        points.push((s, h));
    }
    if points.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "{}: need at least two table rows",
            path.display()
        )));
    }
    let h = (0..grid.n_cells())
        .map(|i| {
            let s = grid.cell_center(i);
            match points.iter().position(|&(x, _)| x >= s) {
                None | Some(0) if s < points[0].0 || s > points[points.len() - 1].0 => 0.0,
                None => 0.0,
                Some(0) => points[0].1,
                Some(j) => {
                    let (x0, y0) = points[j - 1];
                    let (x1, y1) = points[j];
                    y0 + (y1 - y0) * (s - x0) / (x1 - x0)
                }
            }
        })
        .collect();
    BookProfile::new(grid, Side::Ask, h, 0.0)
}

/// Populates the book described by the config; tabulated files resolve
/// relative to `base_dir`.
pub fn build_initial(cfg: &ScenarioConfig, base_dir: &Path) -> Result<BookProfile> {
    let grid = PriceGrid::new(cfg.grid.s_min, cfg.grid.s_max, cfg.grid.n_cells)?;
    match &cfg.init {
        InitSpec::Uniform {
            depth,
            cutoff,
            fill_upper,
        } => {
            let hi = fill_upper.unwrap_or(cfg.grid.s_max);
            let dx = grid.dx();
            let h = (0..grid.n_cells())
                .map(|i| {
                    let left = grid.cell_left(i);
                    let cover = ((left + dx).min(hi) - left.max(*cutoff)).max(0.0);
                    depth * cover / dx
                })
                .collect();
            BookProfile::new(grid, Side::Ask, h, 0.0)
        }
        InitSpec::Steady { a, s_b } => exact::steady_profile(*a, *s_b, grid),
        InitSpec::Cap { c, center, t0 } => ParabolicCap::new(*c, *center)?.sample(grid, *t0),
        InitSpec::Tabulated { path } => load_table(&base_dir.join(path), grid),
    }
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

pub struct SimulationOutcome {
    /// State at the start of the clock, after any liquidity take.
    pub initial: BookProfile,
    pub fills: Vec<ExecutedLevel>,
    pub traj: Trajectory,
}

pub fn solver_config(cfg: &ScenarioConfig) -> SolverConfig {
    SolverConfig {
        cfl_safety: cfg.cfl_safety,
        t_end: cfg.t_end,
        output_times: cfg.output_times.clone(),
        mode: cfg.mode,
        record_every: cfg.record_every,
        record_start: cfg.record_start,
        ..SolverConfig::default()
    }
}

/// Builds the initial book, applies the configured take, and runs the solver.
/// Identical configs produce identical trajectories.
pub fn simulate(cfg: &ScenarioConfig, base_dir: &Path) -> Result<SimulationOutcome> {
    let built = build_initial(cfg, base_dir)?;
    let (initial, fills) = match cfg.take_quantity {
        Some(q) => pde::take_liquidity(&built, q)?,
        None => (built, Vec::new()),
    };
    let traj = pde::run(&initial, &cfg.params, &cfg.bc, &solver_config(cfg))?;
    Ok(SimulationOutcome {
        initial,
        fills,
        traj,
    })
}

// ---------------------------------------------------------------------------
// Output files
// ---------------------------------------------------------------------------

/// What a run left on disk. Data files are byte-identical across repeated
/// runs of the same config; only the wall-clock line here varies.
pub struct RunManifest {
    pub scenario: String,
    pub tool: String,
    pub header: Vec<(String, String)>,
    /// `(file name, role)`, sorted by name; includes the manifest itself.
    pub files: Vec<(String, String)>,
    pub out_dir: PathBuf,
    pub config_echo: String,
}

impl RunManifest {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario: {}", self.scenario);
        let _ = writeln!(s, "tool: {}", self.tool);
        for (k, v) in &self.header {
            let _ = writeln!(s, "{k}: {v}");
        }
        let _ = writeln!(s, "files:");
        for (name, role) in &self.files {
            let _ = writeln!(s, "  {name}: {role}");
        }
        if !self.config_echo.is_empty() {
            let _ = writeln!(s, "config:");
            for line in self.config_echo.lines() {
                let _ = writeln!(s, "| {line}");
            }
        }
        s
    }
}

fn tool_version() -> String {
    format!("bookflow {}", env!("CARGO_PKG_VERSION"))
}

/// Collects files as they are written so the manifest can list exactly what
/// the run produced.
struct Emitter {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl Emitter {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, role: &str, content: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, content).map_err(|e| io_err(&path, e))?;
        if !self.files.iter().any(|(n, _)| n == name) {
            self.files.push((name.to_string(), role.to_string()));
        }
        Ok(())
    }

    fn finish(
        mut self,
        scenario: &str,
        header: Vec<(String, String)>,
        config_echo: String,
    ) -> Result<RunManifest> {
        self.files
            .push(("manifest.txt".into(), "this manifest".into()));
        self.files.sort();
        let manifest = RunManifest {
            scenario: scenario.to_string(),
            tool: tool_version(),
            header,
            files: self.files,
            out_dir: self.dir,
            config_echo,
        };
        let path = manifest.out_dir.join("manifest.txt");
        fs::write(&path, manifest.render()).map_err(|e| io_err(&path, e))?;
        Ok(manifest)
    }
}

fn render_snapshot(t: f64, profile: &BookProfile, theta: f64) -> Result<String> {
    let mut s = String::new();
    let _ = writeln!(s, "# t={}", fnum(t, "snapshot header")?);
    let _ = writeln!(s, "S,h,p");
    let grid = &profile.grid;
    for (i, &h) in profile.depths().iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{}",
            fnum(grid.cell_center(i), "snapshot S column")?,
            fnum(h, "snapshot h column")?,
            fnum(theta * h, "snapshot p column")?
        );
    }
    Ok(s)
}

fn render_touch_series(traj: &Trajectory) -> Result<String> {
    let mut s = String::new();
    let _ = writeln!(s, "t,S0,mass,peak_h");
    let mut peaks = traj.peak_series.iter().peekable();
    for (i, &(t, touch)) in traj.touch_series.iter().enumerate() {
        let (mt, mass) = traj.mass_series[i];
        debug_assert_eq!(t, mt, "series recorded out of lockstep");
        while peaks.peek().is_some_and(|&&(pt, _, _)| pt < t) {
            peaks.next();
        }
        let peak = peaks
            .peek()
            .filter(|&&&(pt, _, _)| pt == t)
            .map(|&&(_, _, h)| h);
        // Rows with an empty book have no touch or peak and are skipped
        // rather than filled with sentinels.
        if let (Some(s0), Some(peak_h)) = (touch, peak) {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                fnum(t, "touch series t")?,
                fnum(s0, "touch series S0")?,
                fnum(mass, "touch series mass")?,
                fnum(peak_h, "touch series peak_h")?
            );
        }
    }
    Ok(s)
}

fn snapshot_name(t: f64) -> String {
    format!("snapshot_{t}.csv")
}

fn emit_trajectory(em: &mut Emitter, cfg: &ScenarioConfig, traj: &Trajectory) -> Result<()> {
    for (t, profile) in &traj.snapshots {
        em.write(
            &snapshot_name(*t),
            &format!("book profile at t = {t}"),
            &render_snapshot(*t, profile, cfg.params.theta)?,
        )?;
    }
    em.write(
        "touch.csv",
        "touch, mass, and peak series",
        &render_touch_series(traj)?,
    )?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Analyses
// ---------------------------------------------------------------------------

/// Runs every requested analysis; rows keep the request order.
pub fn run_analyses(cfg: &ScenarioConfig, traj: &Trajectory) -> Result<Vec<(String, f64)>> {
    let mut rows: Vec<(String, f64)> = Vec::new();
    let req = &cfg.analysis;
    if let Some(window) = req.touch_fit {
        let fit = analysis::fit_touch_exponent(traj, window)?;
        rows.push(("touch_exponent".into(), fit.exponent));
        rows.push(("touch_prefactor".into(), fit.prefactor));
        rows.push(("touch_r_squared".into(), fit.r_squared));
    }
    if let Some(window) = req.height_fit {
        let fit = analysis::fit_height_exponent(traj, window)?;
        rows.push(("height_exponent".into(), fit.exponent));
        rows.push(("height_prefactor".into(), fit.prefactor));
        rows.push(("height_r_squared".into(), fit.r_squared));
    }
    if let Some(times) = &req.collapse {
        let report = analysis::collapse(traj, times, req.collapse_gamma_hint)?;
        rows.push(("collapse_max_distance".into(), report.max_distance));
    }
    if let Some(window) = req.gamma_window {
        let est = analysis::estimate_gamma(traj, window)?;
        rows.push(("gamma_estimate".into(), est.value));
        rows.push((
            "gamma_outside_family".into(),
            if est.outside_family { 1.0 } else { 0.0 },
        ));
    }
    if req.steady_distance {
        let tail = traj.snapshots.iter().rev().take(3).collect::<Vec<_>>();
        for (t, profile) in tail.into_iter().rev() {
            let d = analysis::steady_distance(profile)?;
            rows.push((format!("steady_distance(t={t})"), d));
        }
    }
    Ok(rows)
}

fn render_analysis(rows: &[(String, f64)]) -> Result<String> {
    let mut s = String::new();
    let _ = writeln!(s, "quantity,value");
    for (name, value) in rows {
        let _ = writeln!(s, "{name},{}", fnum(*value, name)?);
    }
    Ok(s)
}

// ---------------------------------------------------------------------------
// Scenario entry points
// ---------------------------------------------------------------------------

fn grid_header(cfg: &ScenarioConfig, n_cells: usize) -> String {
    let dx = (cfg.grid.s_max - cfg.grid.s_min) / n_cells as f64;
    format!(
        "[{}, {}] x {} cells (dx = {})",
        cfg.grid.s_min, cfg.grid.s_max, n_cells, dx
    )
}

/// Runs one configured scenario end to end and reports what was written.
/// On solver blow-up, whatever was recorded up to the failure is still
/// written before the error is returned.
pub fn run_scenario(cfg: &ScenarioConfig, base_dir: &Path, quiet: bool) -> Result<RunManifest> {
    let start = Instant::now();
    if !cfg.golden_resolutions.is_empty() {
        return run_refinement(cfg, start, quiet);
    }
    let mut em = Emitter::new(&cfg.out_dir)?;

    let outcome = match simulate(cfg, base_dir) {
        Ok(out) => out,
        Err(Error::Blowup { cell, t, partial }) => {
            if let Some(partial) = &partial {
                emit_trajectory(&mut em, cfg, partial)?;
                let header = vec![
                    ("status".into(), format!("blow-up at cell {cell}, t = {t}")),
                    ("grid".into(), grid_header(cfg, cfg.grid.n_cells)),
                ];
                em.finish(&cfg.scenario, header, cfg.raw.clone())?;
            }
            return Err(Error::Blowup { cell, t, partial });
        }
        Err(e) => return Err(e),
    };
    emit_trajectory(&mut em, cfg, &outcome.traj)?;

    let analysis_rows = run_analyses(cfg, &outcome.traj);
    if let Ok(rows) = &analysis_rows {
        if !rows.is_empty() {
            em.write(
                "analysis.csv",
                "requested analyses",
                &render_analysis(rows)?,
            )?;
        }
    }

    let taken: f64 = outcome.fills.iter().map(|f| f.quantity).sum();
    let mut header = vec![("grid".into(), grid_header(cfg, cfg.grid.n_cells))];
    header.push(("cfl_safety".into(), format!("{}", cfg.cfl_safety)));
    if cfg.take_quantity.is_some() {
        header.push(("taken".into(), format!("{taken}")));
    }
    header.push(("steps".into(), format!("{}", outcome.traj.steps)));
    header.push((
        "wall_clock_s".into(),
        format!("{:.3}", start.elapsed().as_secs_f64()),
    ));
    let manifest = em.finish(&cfg.scenario, header, cfg.raw.clone())?;

    if !quiet {
        println!(
            "{}: {} steps, {} files in {}",
            cfg.scenario,
            outcome.traj.steps,
            manifest.files.len(),
            manifest.out_dir.display()
        );
    }
    // A requested analysis that cannot be computed is a numerical failure,
    // surfaced only after the data files are safely on disk.
    analysis_rows?;
    Ok(manifest)
}

// ---------------------------------------------------------------------------
// Refinement study against the exact cap
// ---------------------------------------------------------------------------

pub struct StudyRow {
    pub n_cells: usize,
    pub dx: f64,
    pub l1_error: f64,
    pub threshold: f64,
}

/// Runs the configured cap scenario at each requested resolution and
/// measures the L1 distance to the closed form at the end time.
pub fn refinement_study(cfg: &ScenarioConfig) -> Result<Vec<StudyRow>> {
    let InitSpec::Cap { c, center, t0 } = cfg.init else {
        return Err(Error::InvalidInput(
            "the refinement study needs init.kind = parabolic_cap".into(),
        ));
    };
    let cap = ParabolicCap::new(c, center)?;
    let mut rows = Vec::new();
    for &n in &cfg.golden_resolutions {
        let threshold = golden_threshold(n).ok_or_else(|| {
            Error::Domain(format!(
                "no shipped L1 threshold for n_cells = {n}; the table covers {:?}",
                threshold_table_cells()
            ))
        })?;
        let grid = PriceGrid::new(cfg.grid.s_min, cfg.grid.s_max, n)?;
        let dx = grid.dx();
        let initial = cap.sample(grid, t0)?;
        let scfg = SolverConfig {
            cfl_safety: cfg.cfl_safety,
            t_end: cfg.t_end,
            output_times: vec![cfg.t_end],
            record_every: cfg.record_every,
            ..SolverConfig::default()
        };
        let traj = pde::run(&initial, &cfg.params, &cfg.bc, &scfg)?;
        let end = &traj.snapshots.last().expect("final snapshot").1;
        let l1_error = end
            .depths()
            .iter()
            .enumerate()
            .map(|(i, &h)| (h - cap.eval(grid.cell_center(i), cfg.t_end)).abs() * dx)
            .sum();
        rows.push(StudyRow {
            n_cells: n,
            dx,
            l1_error,
            threshold,
        });
    }
    Ok(rows)
}

fn threshold_table_cells() -> Vec<usize> {
    GOLDEN_THRESHOLDS
        .lines()
        .skip(1)
        .filter_map(|l| l.split(',').next()?.trim().parse().ok())
        .collect()
}

/// Observed convergence orders between consecutive study rows.
pub fn study_orders(rows: &[StudyRow]) -> Vec<f64> {
    rows.windows(2)
        .map(|w| (w[0].l1_error / w[1].l1_error).log2() / (w[0].dx / w[1].dx).log2())
        .collect()
}

fn run_refinement(cfg: &ScenarioConfig, start: Instant, quiet: bool) -> Result<RunManifest> {
    let mut em = Emitter::new(&cfg.out_dir)?;
    let rows = refinement_study(cfg)?;
    let orders = study_orders(&rows);

    let mut table = String::from("n_cells,dx,l1_error,threshold,order,pass\n");
    let mut all_pass = true;
    for (i, row) in rows.iter().enumerate() {
        let pass = row.l1_error <= row.threshold;
        all_pass &= pass;
        let order = if i == 0 {
            String::new()
        } else {
            fnum(orders[i - 1], "study order")?
        };
        let _ = writeln!(
            table,
            "{},{},{},{},{},{}",
            row.n_cells,
            fnum(row.dx, "study dx")?,
            fnum(row.l1_error, "study l1")?,
            fnum(row.threshold, "study threshold")?,
            order,
            u8::from(pass)
        );
        if !quiet {
            println!(
                "n = {:>5}: L1 = {:>12.6e} (threshold {:e}) {}",
                row.n_cells,
                row.l1_error,
                row.threshold,
                if pass { "ok" } else { "EXCEEDED" }
            );
        }
    }
    em.write(
        "error_table.csv",
        "refinement study vs the exact cap",
        &table,
    )?;

    let header = vec![
        (
            "resolutions".into(),
            format!("{:?}", cfg.golden_resolutions),
        ),
        (
            "wall_clock_s".into(),
            format!("{:.3}", start.elapsed().as_secs_f64()),
        ),
    ];
    let manifest = em.finish(&cfg.scenario, header, cfg.raw.clone())?;
    if all_pass {
        Ok(manifest)
    } else {
        Err(Error::Domain(
            "refinement study exceeded at least one shipped threshold".into(),
        ))
    }
}

// ---------------------------------------------------------------------------
// Similarity sweep
// ---------------------------------------------------------------------------

/// Solves the shape problem for each speed in input order; individual
/// failures become summary rows instead of aborting the sweep.
pub fn run_similarity_sweep(
    gammas: &[f64],
    shoot: &ShootingConfig,
    out_dir: &Path,
    quiet: bool,
) -> Result<RunManifest> {
    let start = Instant::now();
    let mut em = Emitter::new(out_dir)?;
    let mut summary = String::from("gamma,v_inf,s_peak,residual,status\n");

    for &gamma in gammas {
        match similarity::solve_similarity(gamma, shoot) {
            Ok(profile) => {
                let resid = similarity::residual(&profile);
                let mut body = String::from("s,v,v_prime\n");
                for i in 0..profile.s.len() {
                    let _ = writeln!(
                        body,
                        "{},{},{}",
                        fnum(profile.s[i], "similarity s")?,
                        fnum(profile.v[i], "similarity v")?,
                        fnum(profile.v_prime[i], "similarity v_prime")?
                    );
                }
                em.write(
                    &format!("gamma_{gamma}.csv"),
                    &format!("similarity profile at speed {gamma}"),
                    &body,
                )?;
                let _ = writeln!(
                    summary,
                    "{},{},{},{},ok",
                    fnum(gamma, "summary gamma")?,
                    fnum(profile.v_inf, "summary v_inf")?,
                    fnum(profile.s_peak, "summary s_peak")?,
                    fnum(resid, "summary residual")?
                );
                if !quiet {
                    println!(
                        "gamma = {gamma}: peak at {}, residual {resid:e}",
                        profile.s_peak
                    );
                }
            }
            Err(e) => {
                let _ = writeln!(summary, "{},,,,failed: {e}", fnum(gamma, "summary gamma")?);
                if !quiet {
                    println!("gamma = {gamma}: failed: {e}");
                }
            }
        }
    }
    em.write("summary.csv", "per-speed solve summary", &summary)?;

    let header = vec![
        (
            "gammas".into(),
            gammas
                .iter()
                .map(|g| format!("{g}"))
                .collect::<Vec<_>>()
                .join(", "),
        ),
        (
            "wall_clock_s".into(),
            format!("{:.3}", start.elapsed().as_secs_f64()),
        ),
    ];
    em.finish("similarity_sweep", header, String::new())
}
