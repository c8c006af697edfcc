//! Flat `key = value` scenario configuration.
//!
//! Grammar: one assignment per line, `#` starts a comment, dotted keys group
//! related settings (`grid.n_cells = 800`). Parsing collects every problem
//! it can find, each tagged with its source line, instead of stopping at the
//! first; a config is only built once the whole file is clean.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;

use bookflow::book::{PhysicalParams, SourceTerm};
use bookflow::pde::{BcKind, BoundaryConditions, Mode};

/// One configuration problem, tagged with its source line when it has one
/// (missing-key errors refer to the file as a whole).
#[derive(Debug, Clone)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "line {n}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridSpec {
    pub s_min: f64,
    pub s_max: f64,
    pub n_cells: usize,
}

/// How the book is populated before the run starts.
#[derive(Debug, Clone)]
pub enum InitSpec {
    /// Constant depth on `[cutoff, fill_upper]`; `fill_upper` defaults to the
    /// top of the grid. Partially covered cells get the proportional share.
    Uniform {
        depth: f64,
        cutoff: f64,
        fill_upper: Option<f64>,
    },
    /// `a * sqrt(s_b - S)` above the touch, zero beyond `s_b`.
    Steady { a: f64, s_b: f64 },
    /// Compact self-spreading cap with amplitude constant `c`, sampled at
    /// `t0`, which also starts the run clock.
    Cap { c: f64, center: f64, t0: f64 },
    /// Two-column CSV (`S,h`) interpolated onto the grid; the path resolves
    /// relative to the config file.
    Tabulated { path: PathBuf },
}

/// Post-run computations to include in `analysis.csv`.
#[derive(Debug, Clone, Default)]
pub struct AnalysisRequests {
    pub touch_fit: Option<(f64, f64)>,
    pub height_fit: Option<(f64, f64)>,
    pub collapse: Option<Vec<f64>>,
    pub collapse_gamma_hint: f64,
    pub gamma_window: Option<(f64, f64)>,
    pub steady_distance: bool,
}

impl AnalysisRequests {
    pub fn any(&self) -> bool {
        self.touch_fit.is_some()
            || self.height_fit.is_some()
            || self.collapse.is_some()
            || self.gamma_window.is_some()
            || self.steady_distance
    }
}

/// A fully validated scenario description.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub scenario: String,
    pub grid: GridSpec,
    pub init: InitSpec,
    /// Quantity lifted from the touch before the clock starts.
    pub take_quantity: Option<f64>,
    pub params: PhysicalParams,
    pub bc: BoundaryConditions,
    pub t_end: f64,
    pub cfl_safety: f64,
    pub record_every: usize,
    pub record_start: f64,
    pub mode: Mode,
    pub output_times: Vec<f64>,
    pub out_dir: PathBuf,
    pub analysis: AnalysisRequests,
    /// Cell counts for a refinement study against the exact cap; when
    /// non-empty the run loops over these instead of `grid.n_cells`.
    pub golden_resolutions: Vec<usize>,
    /// Reserved for stochastic extensions; deterministic runs ignore it.
    pub seed: u64,
    /// Original file text, echoed into the run manifest.
    pub raw: String,
}

impl ScenarioConfig {
    /// Time at which the run clock starts (cap scenarios begin at their
    /// sampling time, everything else at zero).
    pub fn t_start(&self) -> f64 {
        match self.init {
            InitSpec::Cap { t0, .. } => t0,
            _ => 0.0,
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "scenario",
    "grid.s_min",
    "grid.s_max",
    "grid.n_cells",
    "init.kind",
    "init.depth",
    "init.cutoff",
    "init.fill_upper",
    "init.a",
    "init.s_b",
    "init.c",
    "init.center",
    "init.t0",
    "init.file",
    "take.quantity",
    "params.theta",
    "params.rho",
    "params.beta",
    "params.u0",
    "source.kind",
    "source.kappa",
    "source.target_depth",
    "bc.touch",
    "bc.deep",
    "firm_stop.price",
    "t_end",
    "cfl_safety",
    "record_every",
    "record_start",
    "mode",
    "output.times",
    "output.dir",
    "analysis.touch_fit",
    "analysis.height_fit",
    "analysis.collapse",
    "analysis.collapse_gamma_hint",
    "analysis.gamma_window",
    "analysis.steady_distance",
    "golden.resolutions",
    "seed",
];

struct Raw {
    line: usize,
    value: String,
}

struct Parser {
    entries: BTreeMap<String, Raw>,
    used: BTreeSet<String>,
    errors: Vec<ConfigError>,
}

impl Parser {
    fn lex(text: &str) -> Self {
        let mut entries: BTreeMap<String, Raw> = BTreeMap::new();
        let mut errors = Vec::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line
                .split_once('#')
                .map_or(raw_line, |(head, _)| head)
                .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                errors.push(ConfigError {
                    line: Some(line_no),
                    message: format!("expected `key = value`, got `{line}`"),
                });
                continue;
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                errors.push(ConfigError {
                    line: Some(line_no),
                    message: "assignment with an empty key".into(),
                });
                continue;
            }
            if value.is_empty() {
                errors.push(ConfigError {
                    line: Some(line_no),
                    message: format!("key `{key}` has an empty value"),
                });
                continue;
            }
            if let Some(prev) = entries.get(&key) {
                errors.push(ConfigError {
                    line: Some(line_no),
                    message: format!("duplicate key `{key}` (first set on line {})", prev.line),
                });
                continue;
            }
            entries.insert(
                key,
                Raw {
                    line: line_no,
                    value,
                },
            );
        }
        Parser {
            entries,
            used: BTreeSet::new(),
            errors,
        }
    }

    fn push(&mut self, line: Option<usize>, message: String) {
        self.errors.push(ConfigError { line, message });
    }

    fn missing(&mut self, key: &str) {
        self.used.insert(key.to_string());
        self.push(None, format!("missing required key `{key}`"));
    }

    fn raw(&mut self, key: &str) -> Option<(usize, String)> {
        self.used.insert(key.to_string());
        self.entries.get(key).map(|r| (r.line, r.value.clone()))
    }

    fn string_opt(&mut self, key: &str) -> Option<(usize, String)> {
        self.raw(key)
    }

    fn f64_opt(&mut self, key: &str) -> Option<(usize, f64)> {
        let (line, v) = self.raw(key)?;
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Some((line, x)),
            _ => {
                self.push(
                    Some(line),
                    format!("key `{key}` needs a finite number, got `{v}`"),
                );
                None
            }
        }
    }

    fn f64_req(&mut self, key: &str) -> Option<(usize, f64)> {
        if self.entries.contains_key(key) {
            self.f64_opt(key)
        } else {
            self.missing(key);
            None
        }
    }

    fn usize_opt(&mut self, key: &str) -> Option<(usize, usize)> {
        let (line, v) = self.raw(key)?;
        match v.parse::<usize>() {
            Ok(x) => Some((line, x)),
            Err(_) => {
                self.push(
                    Some(line),
                    format!("key `{key}` needs a nonnegative integer, got `{v}`"),
                );
                None
            }
        }
    }

    fn usize_req(&mut self, key: &str) -> Option<(usize, usize)> {
        if self.entries.contains_key(key) {
            self.usize_opt(key)
        } else {
            self.missing(key);
            None
        }
    }

    fn list_f64(&mut self, key: &str) -> Option<(usize, Vec<f64>)> {
        let (line, v) = self.raw(key)?;
        let mut out = Vec::new();
        for part in v.split(',') {
            let part = part.trim();
            match part.parse::<f64>() {
                Ok(x) if x.is_finite() => out.push(x),
                _ => {
                    self.push(
                        Some(line),
                        format!("key `{key}`: `{part}` is not a finite number"),
                    );
                    return None;
                }
            }
        }
        Some((line, out))
    }

    fn list_usize(&mut self, key: &str) -> Option<(usize, Vec<usize>)> {
        let (line, v) = self.raw(key)?;
        let mut out = Vec::new();
        for part in v.split(',') {
            let part = part.trim();
            match part.parse::<usize>() {
                Ok(x) => out.push(x),
                Err(_) => {
                    self.push(
                        Some(line),
                        format!("key `{key}`: `{part}` is not a nonnegative integer"),
                    );
                    return None;
                }
            }
        }
        Some((line, out))
    }

    fn window(&mut self, key: &str) -> Option<(usize, (f64, f64))> {
        let (line, list) = self.list_f64(key)?;
        if list.len() != 2 || list[0] >= list[1] {
            self.push(
                Some(line),
                format!("key `{key}` needs an increasing pair `lo, hi`"),
            );
            return None;
        }
        Some((line, (list[0], list[1])))
    }

    fn onoff(&mut self, key: &str) -> Option<(usize, bool)> {
        let (line, v) = self.raw(key)?;
        match v.as_str() {
            "on" | "true" => Some((line, true)),
            "off" | "false" => Some((line, false)),
            _ => {
                self.push(
                    Some(line),
                    format!("key `{key}` must be on or off, got `{v}`"),
                );
                None
            }
        }
    }

    /// Flags every assignment nothing consumed: misspellings, and known keys
    /// that do not apply to the chosen kinds.
    fn report_leftovers(&mut self) {
        let leftovers: Vec<(String, usize)> = self
            .entries
            .iter()
            .filter(|(k, _)| !self.used.contains(*k))
            .map(|(k, r)| (k.clone(), r.line))
            .collect();
        for (key, line) in leftovers {
            let message = if KNOWN_KEYS.contains(&key.as_str()) {
                format!("key `{key}` does not apply to this configuration")
            } else {
                format!("unknown key `{key}`")
            };
            self.push(Some(line), message);
        }
    }
}

fn parse_bc_value(value: &str) -> Result<BcKind, String> {
    match value {
        "zero_flux" => return Ok(BcKind::ZeroFlux),
        "firm_stop" => return Ok(BcKind::FirmStop),
        _ => {}
    }
    for (prefix, build) in [
        ("depth:", BcKind::Depth as fn(f64) -> BcKind),
        ("slope:", BcKind::Slope as fn(f64) -> BcKind),
        ("flux:", BcKind::Flux as fn(f64) -> BcKind),
    ] {
        if let Some(rest) = value.strip_prefix(prefix) {
            return match rest.trim().parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(build(x)),
                _ => Err(format!("`{rest}` is not a finite number")),
            };
        }
    }
    Err(format!(
        "expected zero_flux | firm_stop | depth:<v> | slope:<v> | flux:<v>, got `{value}`"
    ))
}

/// Parses and validates a scenario file, accumulating every problem found.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, Vec<ConfigError>> {
    let mut p = Parser::lex(text);

    let scenario = p
        .string_opt("scenario")
        .map(|(_, s)| s)
        .unwrap_or_else(|| "unnamed".into());

    // Grid.
    let s_min = p.f64_req("grid.s_min");
    let s_max = p.f64_req("grid.s_max");
    let n_cells = p.usize_req("grid.n_cells");
    if let (Some((_, lo)), Some((line, hi))) = (s_min, s_max) {
        if hi <= lo {
            p.push(
                Some(line),
                format!("grid.s_max (= {hi}) must exceed grid.s_min (= {lo})"),
            );
        }
    }
    if let Some((line, n)) = n_cells {
        if n < 4 {
            p.push(
                Some(line),
                format!("grid.n_cells must be at least 4, got {n}"),
            );
        }
    }
    let grid = match (s_min, s_max, n_cells) {
        (Some((_, lo)), Some((_, hi)), Some((_, n))) => Some(GridSpec {
            s_min: lo,
            s_max: hi,
            n_cells: n,
        }),
        _ => None,
    };

    // Initial condition.
    let init = match p.string_opt("init.kind") {
        Some((line, kind)) => match kind.as_str() {
            "uniform" => {
                let depth = p.f64_req("init.depth");
                let cutoff = p.f64_req("init.cutoff");
                let fill_upper = p.f64_opt("init.fill_upper");
                if let Some((l, d)) = depth {
                    if d < 0.0 {
                        p.push(Some(l), format!("init.depth must be nonnegative, got {d}"));
                    }
                }
                if let (Some((l, c)), Some(g)) = (cutoff, grid.as_ref()) {
                    if c < g.s_min || c > g.s_max {
                        p.push(
                            Some(l),
                            format!(
                                "init.cutoff (= {c}) lies outside the grid [{}, {}]",
                                g.s_min, g.s_max
                            ),
                        );
                    }
                }
                if let (Some((l, u)), Some((_, c))) = (fill_upper, cutoff) {
                    if u <= c {
                        p.push(
                            Some(l),
                            format!("init.fill_upper (= {u}) must exceed init.cutoff (= {c})"),
                        );
                    }
                }
                match (depth, cutoff) {
                    (Some((_, depth)), Some((_, cutoff))) => Some(InitSpec::Uniform {
                        depth,
                        cutoff,
                        fill_upper: fill_upper.map(|(_, u)| u),
                    }),
                    _ => None,
                }
            }
            "steady" => {
                let a = p.f64_req("init.a");
                let s_b = p.f64_req("init.s_b");
                if let Some((l, a)) = a {
                    if a <= 0.0 {
                        p.push(Some(l), format!("init.a must be positive, got {a}"));
                    }
                }
                match (a, s_b) {
                    (Some((_, a)), Some((_, s_b))) => Some(InitSpec::Steady { a, s_b }),
                    _ => None,
                }
            }
            "parabolic_cap" => {
                let c = p.f64_req("init.c");
                let center = p.f64_opt("init.center").map(|(_, x)| x).unwrap_or(0.0);
                let t0 = p.f64_opt("init.t0").map_or(1.0, |(_, x)| x);
                if let Some((l, c)) = c {
                    if c <= 0.0 {
                        p.push(Some(l), format!("init.c must be positive, got {c}"));
                    }
                }
                if t0 <= 0.0 {
                    p.push(None, format!("init.t0 must be positive, got {t0}"));
                }
                c.map(|(_, c)| InitSpec::Cap { c, center, t0 })
            }
            "tabulated" => {
                if let Some((_, file)) = p.string_opt("init.file") {
                    Some(InitSpec::Tabulated {
                        path: PathBuf::from(file),
                    })
                } else {
                    p.missing("init.file");
                    None
                }
            }
            other => {
                p.push(
                    Some(line),
                    format!(
                        "init.kind must be uniform | steady | parabolic_cap | tabulated, got `{other}`"
                    ),
                );
                None
            }
        },
        None => {
            p.missing("init.kind");
            None
        }
    };

    // Liquidity take at the time origin.
    let take_quantity = p.f64_opt("take.quantity").and_then(|(l, q)| {
        if q < 0.0 {
            p.push(
                Some(l),
                format!("take.quantity must be nonnegative, got {q}"),
            );
            None
        } else {
            Some(q)
        }
    });

    // Physical parameters.
    let theta = p.f64_opt("params.theta").map_or(1.0, |(_, x)| x);
    let rho = p.f64_opt("params.rho").map_or(1.0, |(_, x)| x);
    let beta = p.f64_opt("params.beta").map_or(1.0, |(_, x)| x);
    let u0 = p.f64_opt("params.u0").map_or(0.0, |(_, x)| x);
    for (name, v) in [
        ("params.theta", theta),
        ("params.rho", rho),
        ("params.beta", beta),
    ] {
        if v <= 0.0 {
            let line = p.entries.get(name).map(|r| r.line);
            p.push(line, format!("{name} must be positive, got {v}"));
        }
    }

    // Source term.
    let source = match p.string_opt("source.kind") {
        None => Some(SourceTerm::Zero),
        Some((_, kind)) if kind == "zero" => Some(SourceTerm::Zero),
        Some((_, kind)) if kind == "relaxation" => {
            let kappa = p.f64_req("source.kappa");
            let target = p.f64_req("source.target_depth");
            if let Some((l, k)) = kappa {
                if k <= 0.0 {
                    p.push(Some(l), format!("source.kappa must be positive, got {k}"));
                }
            }
            if let Some((l, d)) = target {
                if d < 0.0 {
                    p.push(
                        Some(l),
                        format!("source.target_depth must be nonnegative, got {d}"),
                    );
                }
            }
            match (kappa, target, grid.as_ref()) {
                (Some((_, kappa)), Some((_, depth)), Some(g)) => Some(SourceTerm::Relaxation {
                    kappa,
                    target: vec![depth; g.n_cells],
                }),
                _ => None,
            }
        }
        Some((line, other)) => {
            p.push(
                Some(line),
                format!("source.kind must be zero or relaxation, got `{other}`"),
            );
            None
        }
    };

    // Boundary conditions.
    let mut touch_kind = BcKind::ZeroFlux;
    let mut deep_kind = BcKind::ZeroFlux;
    if let Some((line, v)) = p.string_opt("bc.touch") {
        match parse_bc_value(&v) {
            Ok(k) => touch_kind = k,
            Err(e) => p.push(Some(line), format!("bc.touch: {e}")),
        }
    }
    if let Some((line, v)) = p.string_opt("bc.deep") {
        match parse_bc_value(&v) {
            Ok(k) => deep_kind = k,
            Err(e) => p.push(Some(line), format!("bc.deep: {e}")),
        }
    }
    let stop_price = p.f64_opt("firm_stop.price");
    if touch_kind == BcKind::FirmStop {
        match (stop_price, grid.as_ref()) {
            (Some((l, price)), Some(g)) => {
                if price != g.s_min {
                    p.push(
                        Some(l),
                        format!(
                            "firm_stop.price (= {price}) must equal grid.s_min (= {}): the stop is the wall at the touch edge",
                            g.s_min
                        ),
                    );
                }
            }
            (None, _) => p.missing("firm_stop.price"),
            _ => {}
        }
    } else if stop_price.is_some() {
        p.push(
            stop_price.map(|(l, _)| l),
            "firm_stop.price is set but bc.touch is not firm_stop".into(),
        );
    }
    let bc = match BoundaryConditions::from_kinds(touch_kind, deep_kind) {
        Ok(bc) => Some(bc),
        Err(e) => {
            p.push(None, format!("boundary conditions: {e}"));
            None
        }
    };

    // Run controls.
    let t_end = p.f64_req("t_end").map(|(_, x)| x);
    let cfl_safety = p.f64_opt("cfl_safety").map_or(0.25, |(_, x)| x);
    if !(cfl_safety > 0.0 && cfl_safety <= 1.0) {
        let line = p.entries.get("cfl_safety").map(|r| r.line);
        p.push(
            line,
            format!("cfl_safety must lie in (0, 1], got {cfl_safety}"),
        );
    }
    let record_every = p.usize_opt("record_every").map_or(1, |(_, x)| x);
    if record_every == 0 {
        let line = p.entries.get("record_every").map(|r| r.line);
        p.push(line, "record_every must be at least 1".into());
    }
    let record_start = p.f64_opt("record_start").map_or(0.0, |(_, x)| x);
    if record_start < 0.0 {
        let line = p.entries.get("record_start").map(|r| r.line);
        p.push(
            line,
            format!("record_start must be nonnegative, got {record_start}"),
        );
    }
    let mode = match p.string_opt("mode") {
        None => Mode::Full,
        Some((_, v)) if v == "full" => Mode::Full,
        Some((_, v)) if v == "source_only" => Mode::SourceOnly,
        Some((line, v)) => {
            p.push(
                Some(line),
                format!("mode must be full or source_only, got `{v}`"),
            );
            Mode::Full
        }
    };

    let t_start = match init {
        Some(InitSpec::Cap { t0, .. }) => t0,
        _ => 0.0,
    };
    if let Some(te) = t_end {
        if te <= t_start {
            let line = p.entries.get("t_end").map(|r| r.line);
            p.push(
                line,
                format!("t_end (= {te}) must exceed the start time (= {t_start})"),
            );
        }
    }

    // Output schedule.
    let output_times = match p.list_f64("output.times") {
        Some((line, times)) => {
            let mut ok = true;
            if times.windows(2).any(|w| w[0] >= w[1]) {
                p.push(
                    Some(line),
                    "output.times must be strictly increasing".into(),
                );
                ok = false;
            }
            if let Some(te) = t_end {
                let tol = 1e-12 * te.abs().max(1.0);
                if times.iter().any(|&t| t <= t_start || t > te + tol) {
                    p.push(
                        Some(line),
                        format!("output.times must lie in ({t_start}, {te}]"),
                    );
                    ok = false;
                }
            }
            ok.then_some(times)
        }
        None => t_end.map(|te| vec![te]),
    };
    let out_dir = p
        .string_opt("output.dir")
        .map(|(_, d)| PathBuf::from(d))
        .unwrap_or_else(|| PathBuf::from("out").join(&scenario));

    // Analyses.
    let mut analysis = AnalysisRequests {
        touch_fit: p.window("analysis.touch_fit").map(|(_, w)| w),
        height_fit: p.window("analysis.height_fit").map(|(_, w)| w),
        ..AnalysisRequests::default()
    };
    if let Some((line, times)) = p.list_f64("analysis.collapse") {
        if times.len() < 2 {
            p.push(
                Some(line),
                "analysis.collapse needs at least two times".into(),
            );
        } else if let Some(out) = &output_times {
            let missing: Vec<f64> = times
                .iter()
                .copied()
                .filter(|t| !out.iter().any(|o| (o - t).abs() <= 1e-9 * t.abs().max(1.0)))
                .collect();
            if missing.is_empty() {
                analysis.collapse = Some(times);
            } else {
                p.push(
                    Some(line),
                    format!(
                        "analysis.collapse time {} is not an output time",
                        missing[0]
                    ),
                );
            }
        }
    }
    analysis.collapse_gamma_hint = p
        .f64_opt("analysis.collapse_gamma_hint")
        .map_or(0.0, |(_, x)| x);
    if analysis.collapse_gamma_hint < 0.0 {
        let line = p
            .entries
            .get("analysis.collapse_gamma_hint")
            .map(|r| r.line);
        p.push(
            line,
            "analysis.collapse_gamma_hint must be nonnegative".into(),
        );
    }
    analysis.gamma_window = p.window("analysis.gamma_window").map(|(_, w)| w);
    analysis.steady_distance = p.onoff("analysis.steady_distance").is_some_and(|(_, b)| b);

    // Refinement study. The comparison target solves the drift-free,
    // source-free equation, so the study refuses configs that deviate.
    let golden_resolutions = match p.list_usize("golden.resolutions") {
        Some((line, ns)) => {
            let mut ok = true;
            if ns.iter().any(|&n| n < 8) {
                p.push(
                    Some(line),
                    "golden.resolutions entries must be at least 8".into(),
                );
                ok = false;
            }
            if init.is_some() && !matches!(init, Some(InitSpec::Cap { .. })) {
                p.push(
                    Some(line),
                    "golden.resolutions requires init.kind = parabolic_cap".into(),
                );
                ok = false;
            }
            if u0 != 0.0 {
                p.push(
                    Some(line),
                    "golden.resolutions requires params.u0 = 0 to match the closed form".into(),
                );
                ok = false;
            }
            if !matches!(source, Some(SourceTerm::Zero) | None) {
                p.push(
                    Some(line),
                    "golden.resolutions requires source.kind = zero".into(),
                );
                ok = false;
            }
            if ok {
                ns
            } else {
                Vec::new()
            }
        }
        None => Vec::new(),
    };

    let seed = p.usize_opt("seed").map_or(0, |(_, x)| x as u64);

    // Anything assigned but never consumed is a mistake worth naming.
    p.report_leftovers();

    if !p.errors.is_empty() {
        return Err(p.errors);
    }
    let (Some(grid), Some(init), Some(source), Some(bc), Some(t_end), Some(output_times)) =
        (grid, init, source, bc, t_end, output_times)
    else {
        // Unreachable when the error list is empty; guard instead of panic.
        return Err(vec![ConfigError {
            line: None,
            message: "internal: configuration incomplete without a recorded error".into(),
        }]);
    };
    let params = match PhysicalParams::new(theta, rho, beta, u0, source) {
        Ok(p) => p,
        Err(e) => {
            return Err(vec![ConfigError {
                line: None,
                message: format!("parameters: {e}"),
            }]);
        }
    };

    Ok(ScenarioConfig {
        scenario,
        grid,
        init,
        take_quantity,
        params,
        bc,
        t_end,
        cfl_safety,
        record_every,
        record_start,
        mode,
        output_times,
        out_dir,
        analysis,
        golden_resolutions,
        seed,
        raw: text.to_string(),
    })
}
