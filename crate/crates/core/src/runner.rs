//! Configuration-driven experiments and their on-disk reports.
//!
//! Each run writes `report.json` (config echo plus the full result record),
//! one CSV per table, and `timing.json` with the wall-clock time. The first
//! two depend only on the configuration and seed.

use crate::corpus::ProfileSpec;
use crate::error::{Error, Result};
use crate::exponents::Exponents;
use crate::extension::ParaboloidShift;
use crate::grids::{FrequencyGrid, FrequencyProfile, SpacetimeGrid};
use crate::norms::{quotient_pair, quotient_single, sharp_holder, QuotientResult};
use crate::search::{maximize_quotient_pair, SearchOptions};
use crate::sequences::{
    a_p_estimate, build_separating_testfn, check_sequence_conditions, convergence_study, default_bumps,
    dilation_diagnostics, pairing_duality, separation_report, shifted_limit_test, BumpTest, TrendThresholds,
};
use crate::symmetry::{pushthrough_shift, verify_intertwining, Symmetry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Quotient,
    Sequence,
    Search,
    VerifySymmetry,
    Separation,
    ShiftedLimit,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Quotient,
        ExperimentKind::Sequence,
        ExperimentKind::Search,
        ExperimentKind::VerifySymmetry,
        ExperimentKind::Separation,
        ExperimentKind::ShiftedLimit,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Quotient => "quotient",
            ExperimentKind::Sequence => "sequence",
            ExperimentKind::Search => "search",
            ExperimentKind::VerifySymmetry => "verify-symmetry",
            ExperimentKind::Separation => "separation",
            ExperimentKind::ShiftedLimit => "shifted-limit",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment kind `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentsSpec {
    pub d: usize,
    pub p: f64,
}

/// Paraboloid vertex; `xi0` defaults to the origin.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftSpec {
    #[serde(default)]
    pub tau0: f64,
    #[serde(default)]
    pub xi0: Vec<f64>,
}

impl ShiftSpec {
    fn build(&self, d: usize, what: &str) -> Result<ParaboloidShift> {
        let xi0 = match self.xi0.len() {
            0 => vec![0.0; d],
            n if n == d => self.xi0.clone(),
            n => return Err(Error::Config(format!("{what}.xi0 has {n} entries, expected {d}"))),
        };
        if !self.tau0.is_finite() || xi0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(format!("{what} must be finite")));
        }
        Ok(ParaboloidShift::new(self.tau0, xi0))
    }
}

/// Frequency window `[-half_width, half_width]^d` with `points` samples per
/// axis, and the spacetime box `[-t_half_width, t_half_width] x [-x_half_width, x_half_width]^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub half_width: f64,
    pub points: usize,
    pub t_half_width: f64,
    pub x_half_width: f64,
    pub t_points: usize,
    pub x_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { half_width: 10.0, points: 512, t_half_width: 40.0, x_half_width: 40.0, t_points: 2048, x_points: 4096 }
    }
}

impl GridSpec {
    fn frequency(&self, d: usize) -> Result<FrequencyGrid> {
        FrequencyGrid::new(d, self.half_width, self.points).map_err(|e| Error::Config(format!("grid: {e}")))
    }

    fn spacetime(&self, d: usize) -> Result<SpacetimeGrid> {
        SpacetimeGrid::new(d, self.t_half_width, self.x_half_width, self.t_points, self.x_points)
            .map_err(|e| Error::Config(format!("grid: {e}")))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuotientSpec {
    /// Evaluate `‖E f + E_shift g‖_q / (‖f‖_p^p + ‖g‖_p^p)^{1/p}` instead of `‖E f‖_q / ‖f‖_p`.
    pub pair: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SequenceSpec {
    /// Test bumps for the weak pairings; three bumps in `|xi| <= 1` by default.
    pub bumps: Option<Vec<BumpTest>>,
    pub trend: TrendThresholds,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparationSpec {
    pub shift_n: ShiftSpec,
    pub s: f64,
    pub r: f64,
    /// Cutoff distance of the test function; defaults to `s`.
    #[serde(default)]
    pub s0: Option<f64>,
    /// Also check the pairing duality inequality with `g_n = f`.
    #[serde(default)]
    pub duality: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftPattern {
    /// `xi0_1 + 2^{-n}`.
    Converging,
    /// `xi0_1 + (-1)^n`.
    Oscillating,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftedLimitSpec {
    /// Explicit shift list. Mutually exclusive with `pattern`.
    #[serde(default)]
    pub shifts: Vec<ShiftSpec>,
    #[serde(default)]
    pub pattern: Option<ShiftPattern>,
    /// Number of generated shifts, `n = 1..=count`.
    #[serde(default = "ten")]
    pub count: usize,
}

fn ten() -> usize {
    10
}

/// Random draws `lambda = 2^u` with `|u| <= log2_lambda`, `|xi~| <= xi_tilde`,
/// `|t0| <= t0`, `|x0| <= x0`, each uniform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SymmetryBox {
    pub draws: usize,
    pub log2_lambda: f64,
    pub xi_tilde: f64,
    pub t0: f64,
    pub x0: f64,
    /// Shifts to test against; defaults to the top-level shift.
    pub shifts: Vec<ShiftSpec>,
    /// Random norm pairs for the sharp Hölder check.
    pub holder_pairs: usize,
}

impl Default for SymmetryBox {
    fn default() -> Self {
        Self { draws: 100, log2_lambda: 3.0, xi_tilde: 4.0, t0: 4.0, x0: 4.0, shifts: Vec::new(), holder_pairs: 1000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must agree with the kind given on the command line when both are present.
    #[serde(default)]
    pub kind: Option<ExperimentKind>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub exponents: ExponentsSpec,
    #[serde(default)]
    pub shift: ShiftSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_profile")]
    pub profile: ProfileSpec,
    /// Second profile for pair quotients and searches; defaults to `profile`.
    #[serde(default)]
    pub profile_g: Option<ProfileSpec>,
    #[serde(default)]
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub symmetries: Vec<Symmetry>,
    #[serde(default)]
    pub quotient: QuotientSpec,
    #[serde(default)]
    pub sequence: SequenceSpec,
    #[serde(default)]
    pub search: SearchOptions,
    #[serde(default)]
    pub separation: Option<SeparationSpec>,
    #[serde(default)]
    pub shifted_limit: Option<ShiftedLimitSpec>,
    #[serde(default)]
    pub symmetry_box: SymmetryBox,
}

fn default_profile() -> ProfileSpec {
    ProfileSpec::gaussian(1.0)
}

impl ExperimentConfig {
    /// Strict TOML parsing: unknown keys are errors.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    fn exponents(&self) -> Result<Exponents> {
        if !(1..=3).contains(&self.exponents.d) {
            return Err(Error::Config(format!("exponents.d = {} must be 1, 2 or 3", self.exponents.d)));
        }
        Exponents::new(self.exponents.d, self.exponents.p).map_err(|e| Error::Config(format!("exponents: {e}")))
    }
}

/// A CSV table with a fixed header.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => format_num(*x),
        }
    }
}

/// Scientific notation with 12 significant digits.
pub fn format_num(x: f64) -> String {
    format!("{x:.11e}")
}

impl Table {
    fn new(name: &str, header: Vec<String>) -> Self {
        Self { name: name.into(), header, rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let internal = |e: csv::Error| Error::Internal(format!("csv: {e}"));
        w.write_record(&self.header).map_err(internal)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(internal)?;
        }
        w.into_inner().map_err(|e| Error::Internal(format!("csv: {e}")))
    }
}

fn cols(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn axis_cols(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).map(|a| format!("{prefix}_{a}")).collect()
}

fn nums(v: &[f64]) -> Vec<Cell> {
    v.iter().map(|&x| Cell::Num(x)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub config: ExperimentConfig,
    /// False outside `p = 2, d <= 2`, where the Gaussian constant is not known to be sharp.
    pub acceptance_set: bool,
    /// `‖E G‖_q / ‖G‖_p` for the unit Gaussian, when the experiment needs it.
    pub a_p_estimate: Option<f64>,
    pub a_p_error: Option<f64>,
    /// `2^{1/p'} A_p`.
    pub target: Option<f64>,
    pub tables: Vec<String>,
    pub results: Value,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub csv: Vec<Table>,
    #[serde(skip)]
    pub wall_clock_seconds: f64,
}

struct Outcome {
    results: Value,
    tables: Vec<Table>,
    a_p: Option<(f64, f64)>,
    warnings: Vec<String>,
}

struct Setup {
    e: Exponents,
    shift: ParaboloidShift,
    grid: FrequencyGrid,
    stg: SpacetimeGrid,
    f: FrequencyProfile,
}

fn setup(cfg: &ExperimentConfig) -> Result<Setup> {
    let e = cfg.exponents()?;
    let d = e.d;
    let grid = cfg.grid.frequency(d)?;
    let f = cfg.profile.build(&grid)?;
    Ok(Setup { e, shift: cfg.shift.build(d, "shift")?, stg: cfg.grid.spacetime(d)?, grid, f })
}

fn profile_g(cfg: &ExperimentConfig, s: &Setup) -> Result<FrequencyProfile> {
    match &cfg.profile_g {
        Some(spec) => spec.build(&s.grid),
        None => Ok(s.f.clone()),
    }
}

fn a_p(s: &Setup) -> Result<QuotientResult> {
    a_p_estimate(&s.e, &s.grid, &s.stg)
}

fn quotient_cells(r: &QuotientResult) -> Vec<Cell> {
    nums(&[
        r.quotient,
        r.truncated,
        r.numerator.tail_bound / r.denominator,
        r.numerator.quadrature_estimate / r.denominator,
        r.certified_error(),
    ])
}

const QUOTIENT_COLS: [&str; 5] = ["quotient", "truncated", "tail_bound", "quadrature_estimate", "certified_error"];

fn run_quotient(cfg: &ExperimentConfig, s: &Setup) -> Result<Outcome> {
    let reference = a_p(s)?;
    let r = if cfg.quotient.pair {
        quotient_pair(&s.f, &profile_g(cfg, s)?, &s.shift, &s.e, &s.stg)?
    } else {
        if s.shift.is_nonzero() || cfg.profile_g.is_some() {
            return Err(Error::Config("shift and profile_g only apply with quotient.pair = true".into()));
        }
        quotient_single(&s.f, &s.e, &s.stg)?
    };
    let d = s.e.d;
    let mut header = cols(&["d", "p", "q", "tau0"]);
    header.extend(axis_cols("xi0", d));
    header.extend(cols(&QUOTIENT_COLS));
    header.extend(cols(&["unresolved_slices"]));
    let mut t = Table::new("quotient", header);
    let mut row = vec![Cell::Int(d as i64), Cell::Num(s.e.p), Cell::Num(s.e.q), Cell::Num(s.shift.tau0)];
    row.extend(nums(&s.shift.xi0));
    row.extend(quotient_cells(&r));
    row.push(Cell::Int(r.numerator.unresolved_slices as i64));
    t.push(row);
    let mut warnings = s.f.warnings.clone();
    if r.numerator.unresolved_slices > 0 {
        warnings.push(format!("{} slices needed a looser support cut", r.numerator.unresolved_slices));
    }
    Ok(Outcome {
        results: json!({ "quotient": r, "certified_error": r.certified_error() }),
        tables: vec![t],
        a_p: Some((reference.quotient, reference.certified_error())),
        warnings,
    })
}

fn run_sequence(cfg: &ExperimentConfig, s: &Setup) -> Result<Outcome> {
    if cfg.lambdas.is_empty() || cfg.lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::Config("lambdas must be a non-empty list of positive numbers".into()));
    }
    let study = convergence_study(&s.f, &s.shift, &cfg.lambdas, &s.e, &s.stg)?;
    let bumps = cfg.sequence.bumps.clone().unwrap_or_else(|| default_bumps(s.e.d));
    if bumps.iter().any(|b| b.center.len() != s.e.d + 1) {
        return Err(Error::Config(format!("sequence.bumps centers need d + 1 = {} entries", s.e.d + 1)));
    }
    let diags = dilation_diagnostics(&s.f, &s.shift, &cfg.lambdas, &s.e, &s.stg, &bumps, study.a_p_estimate)?;

    let mut conv = Table::new("convergence", cols(&["lambda"]));
    conv.header.extend(cols(&QUOTIENT_COLS));
    conv.header.extend(cols(&["gap"]));
    for r in &study.rows {
        conv.push(nums(&[
            r.lambda,
            r.quotient,
            r.truncated,
            r.tail_bound,
            r.quadrature_estimate,
            r.certified_error,
            r.gap,
        ]));
    }
    let mut header = cols(&[
        "n",
        "lambda",
        "quotient",
        "certified_error",
        "ratio_first",
        "ratio_second",
        "ratio_third",
        "norm_gap",
        "field_difference",
        "field_norm_f",
        "field_norm_g",
    ]);
    for b in &bumps {
        header.push(format!("pairing_f_{}", b.id));
        header.push(format!("pairing_g_{}", b.id));
    }
    let mut diag = Table::new("diagnostics", header);
    for r in &diags {
        let mut row = vec![Cell::Int(r.index as i64)];
        row.extend(nums(&[
            r.lambda.unwrap_or(f64::NAN),
            r.quotient,
            r.certified_error,
            r.ratio_first,
            r.ratio_second,
            r.ratio_third,
            r.norm_gap,
            r.field_difference,
            r.field_norm_f,
            r.field_norm_g,
        ]));
        for w in &r.weak_pairings {
            row.extend(nums(&[w.f, w.g]));
        }
        diag.push(row);
    }
    let mut tables = vec![conv, diag];
    let mut results = json!({ "convergence": study, "diagnostics": diags });
    if !cfg.symmetries.is_empty() {
        let c = check_sequence_conditions(&cfg.symmetries, &s.shift, cfg.sequence.trend)?;
        let mut t = Table::new("conditions", cols(&["n", "lambda", "frequency_term", "time_term"]));
        for r in &c.rows {
            let mut row = vec![Cell::Int(r.index as i64)];
            row.extend(nums(&[r.lambda, r.frequency_term, r.time_term]));
            t.push(row);
        }
        tables.push(t);
        results["conditions"] = serde_json::to_value(&c).map_err(internal)?;
    }
    Ok(Outcome { a_p: Some((study.a_p_estimate, study.a_p_error)), warnings: study.warnings.clone(), results, tables })
}

fn run_search(cfg: &ExperimentConfig, s: &Setup) -> Result<Outcome> {
    let reference = a_p(s)?;
    let g = profile_g(cfg, s)?;
    let traj = maximize_quotient_pair(&s.f, &g, &s.shift, &s.e, &s.stg, &cfg.search)?;
    let d = s.e.d;
    let mut header = cols(&["step", "quotient", "lambda"]);
    header.extend(axis_cols("xi_tilde", d));
    header.push("t0".into());
    header.extend(axis_cols("x0", d));
    header.extend(cols(&["phase", "norm_f", "norm_g", "radius", "scale", "reframed"]));
    let mut t = Table::new("trajectory", header);
    for it in &traj.iterates {
        let mut row = vec![Cell::Int(it.step as i64), Cell::Num(it.quotient), Cell::Num(it.symmetry.lambda)];
        row.extend(nums(&it.symmetry.xi_tilde));
        row.push(Cell::Num(it.symmetry.t0));
        row.extend(nums(&it.symmetry.x0));
        row.extend(nums(&[it.symmetry.phase, it.norm_f, it.norm_g, it.radius, it.scale]));
        row.push(Cell::Int(it.reframed as i64));
        t.push(row);
    }
    let mut fin = Table::new("final", cols(&QUOTIENT_COLS));
    fin.header.extend(cols(&["imbalance", "steps"]));
    let mut row = quotient_cells(&traj.final_quotient);
    row.push(Cell::Num(traj.imbalance));
    row.push(Cell::Int(traj.iterates.len().saturating_sub(1) as i64));
    fin.push(row);
    Ok(Outcome {
        a_p: Some((reference.quotient, reference.certified_error())),
        warnings: traj.warnings.clone(),
        results: json!({
            "terminated_reason": traj.terminated_reason,
            "best_quotient": traj.best_quotient(),
            "trajectory": traj,
        }),
        tables: vec![t, fin],
    })
}

fn draw_symmetry(rng: &mut ChaCha8Rng, b: &SymmetryBox, d: usize) -> Result<Symmetry> {
    let mut sym = |w: f64| if w > 0.0 { rng.gen_range(-w..=w) } else { 0.0 };
    let lambda = 2f64.powf(sym(b.log2_lambda));
    let xi_tilde = (0..d).map(|_| sym(b.xi_tilde)).collect();
    let t0 = sym(b.t0);
    let x0 = (0..d).map(|_| sym(b.x0)).collect();
    Symmetry::new(lambda, xi_tilde, t0, x0)
}

fn run_verify_symmetry(cfg: &ExperimentConfig, s: &Setup) -> Result<Outcome> {
    let b = &cfg.symmetry_box;
    if !(b.log2_lambda >= 0.0 && b.xi_tilde >= 0.0 && b.t0 >= 0.0 && b.x0 >= 0.0) {
        return Err(Error::Config("symmetry_box ranges must be non-negative".into()));
    }
    let d = s.e.d;
    let shifts: Vec<ParaboloidShift> = if b.shifts.is_empty() {
        vec![s.shift.clone()]
    } else {
        b.shifts.iter().map(|x| x.build(d, "symmetry_box.shifts")).collect::<Result<_>>()?
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut syms: Vec<Symmetry> = cfg.symmetries.clone();
    for _ in 0..b.draws {
        syms.push(draw_symmetry(&mut rng, b, d)?);
    }

    let mut header = cols(&["draw", "lambda"]);
    header.extend(axis_cols("xi_tilde", d));
    header.push("t0".into());
    header.extend(axis_cols("x0", d));
    header.push("tau0".into());
    header.extend(axis_cols("xi0", d));
    let mut inter_header = header.clone();
    inter_header.push("discrepancy".into());
    let mut push_header = header;
    push_header.push("new_tau0".into());
    push_header.extend(axis_cols("new_xi0", d));
    push_header.push("formula_difference".into());
    let mut inter = Table::new("intertwining", inter_header);
    let mut push = Table::new("pushthrough", push_header);
    let mut worst: f64 = 0.0;
    let mut worst_push: f64 = 0.0;
    for (i, sym) in syms.iter().enumerate() {
        if sym.d() != d {
            return Err(Error::Config(format!("symmetry {i} has dimension {}, expected {d}", sym.d())));
        }
        sym.validate().map_err(|e| Error::Config(format!("symmetry {i}: {e}")))?;
        for shift in &shifts {
            let mut lead = vec![Cell::Int(i as i64), Cell::Num(sym.lambda)];
            lead.extend(nums(&sym.xi_tilde));
            lead.push(Cell::Num(sym.t0));
            lead.extend(nums(&sym.x0));
            lead.push(Cell::Num(shift.tau0));
            lead.extend(nums(&shift.xi0));

            let disc = verify_intertwining(sym, &s.f, shift, &s.e, &s.stg)?;
            worst = worst.max(disc);
            let mut row = lead.clone();
            row.push(Cell::Num(disc));
            inter.push(row);

            let new = pushthrough_shift(sym, shift, s.e.p).new_shift;
            let l2 = sym.lambda * sym.lambda;
            let dot: f64 = shift.xi0.iter().zip(&sym.xi_tilde).map(|(a, b)| a * b).sum();
            let mut diff = (new.tau0 - (shift.tau0 + 2.0 * dot) / l2).abs();
            for (n, x) in new.xi0.iter().zip(&shift.xi0) {
                diff = diff.max((n - x / sym.lambda).abs());
            }
            worst_push = worst_push.max(diff);
            let mut row = lead;
            row.push(Cell::Num(new.tau0));
            row.extend(nums(&new.xi0));
            row.push(Cell::Num(diff));
            push.push(row);
        }
    }

    let mut holder = Table::new("holder", cols(&["pair", "a", "b", "lhs", "rhs", "relative_slack"]));
    let mut holder_ok = true;
    for k in 0..b.holder_pairs {
        let a: f64 = rng.gen_range(0.0..10.0);
        let bb: f64 = if k % 10 == 0 { a } else { rng.gen_range(0.0..10.0) };
        let (lhs, rhs) = sharp_holder(a, bb, &s.e);
        let slack = if rhs > 0.0 { (rhs - lhs) / rhs } else { 0.0 };
        let equal = a == bb;
        holder_ok &= if equal { slack.abs() <= 1e-12 } else { slack >= -1e-12 };
        let mut row = vec![Cell::Int(k as i64)];
        row.extend(nums(&[a, bb, lhs, rhs, slack]));
        holder.push(row);
    }
    Ok(Outcome {
        results: json!({
            "draws": syms.len(),
            "shifts": shifts,
            "symmetries": syms,
            "max_discrepancy": worst,
            "max_pushthrough_difference": worst_push,
            "holder_pairs": b.holder_pairs,
            "holder_holds": holder_ok,
        }),
        tables: vec![inter, push, holder],
        a_p: None,
        warnings: s.f.warnings.clone(),
    })
}

fn run_separation(cfg: &ExperimentConfig, s: &Setup) -> Result<Outcome> {
    let spec = cfg.separation.as_ref().ok_or_else(|| Error::Config("missing [separation] section".into()))?;
    let d = s.e.d;
    let shift_n = spec.shift_n.build(d, "separation.shift_n")?;
    let rep = separation_report(&s.shift, &shift_n, spec.s, spec.r, &s.grid)?;
    let mut h = Table::new("h_samples", axis_cols("xi", d));
    h.header.push("h".into());
    for (p, v) in rep.points.iter().zip(&rep.h_samples) {
        let mut row = nums(p);
        row.push(Cell::Num(*v));
        h.push(row);
    }
    let mut summary = Table::new(
        "separation",
        cols(&["s", "r", "zero_set_offset", "c_estimate", "degenerate", "m1", "m2", "shrink_steps"]),
    );
    let mut results = json!({ "report": rep });
    let mut row = nums(&[spec.s, spec.r, rep.zero_set_offset.unwrap_or(f64::NAN), rep.c_estimate]);
    row.push(Cell::Int(rep.degenerate as i64));
    let mut warnings = Vec::new();
    if rep.degenerate {
        warnings.push("shift_n equals shift: the paraboloids coincide and nothing separates them".into());
        row.extend(nums(&[f64::NAN, f64::NAN]));
        row.push(Cell::Int(0));
    } else {
        let tf = build_separating_testfn(&s.shift, &shift_n, &s.f, s.e.p, spec.s0.unwrap_or(spec.s), spec.r)?;
        row.extend(nums(&[tf.m1, tf.m2]));
        row.push(Cell::Int(tf.shrink_steps as i64));
        results["test_function"] = json!({
            "s0": tf.s0,
            "c": tf.c,
            "shrink_steps": tf.shrink_steps,
            "phi_pairing": tf.phi_pairing,
            "m1": tf.m1,
            "m2": tf.m2,
        });
        if spec.duality {
            let dual = pairing_duality(&tf, &tf.profile, &s.e, &s.stg)?;
            warnings.extend(dual.warnings.iter().cloned());
            results["duality"] = serde_json::to_value(&dual).map_err(internal)?;
        }
    }
    summary.push(row);
    Ok(Outcome { results, tables: vec![summary, h], a_p: None, warnings })
}

fn run_shifted_limit(cfg: &ExperimentConfig, s: &Setup) -> Result<Outcome> {
    let spec = cfg.shifted_limit.as_ref().ok_or_else(|| Error::Config("missing [shifted_limit] section".into()))?;
    let d = s.e.d;
    let shifts: Vec<ParaboloidShift> = match (spec.pattern, spec.shifts.is_empty()) {
        (Some(_), false) => return Err(Error::Config("shifted_limit: give either shifts or pattern, not both".into())),
        (None, true) => return Err(Error::Config("shifted_limit: give shifts or pattern".into())),
        (None, false) => spec.shifts.iter().map(|x| x.build(d, "shifted_limit.shifts")).collect::<Result<_>>()?,
        (Some(pattern), true) => (1..=spec.count)
            .map(|n| {
                let mut sh = s.shift.clone();
                sh.xi0[0] += match pattern {
                    ShiftPattern::Converging => 2f64.powi(-(n as i32)),
                    ShiftPattern::Oscillating => {
                        if n % 2 == 0 {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                };
                sh
            })
            .collect(),
    };
    let lim = shifted_limit_test(&s.f, &s.shift, &shifts, &s.e, &s.stg)?;
    let mut header = cols(&["n", "tau"]);
    header.extend(axis_cols("xi", d));
    header.extend(cols(&["residual", "relative", "tail_bound"]));
    let mut t = Table::new("residuals", header);
    for r in &lim.rows {
        let mut row = vec![Cell::Int(r.index as i64), Cell::Num(r.shift.tau0)];
        row.extend(nums(&r.shift.xi0));
        row.extend(nums(&[r.residual, r.relative, r.tail_bound]));
        t.push(row);
    }
    Ok(Outcome { results: json!({ "shifted_limit": lim }), tables: vec![t], a_p: None, warnings: s.f.warnings.clone() })
}

fn internal(e: serde_json::Error) -> Error {
    Error::Internal(format!("json: {e}"))
}

/// Runs the experiment without touching the disk.
pub fn run(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<ExperimentReport> {
    if let Some(k) = cfg.kind {
        if k != kind {
            return Err(Error::Config(format!("config declares kind `{k}` but `{kind}` was requested")));
        }
    }
    let start = Instant::now();
    let s = setup(cfg)?;
    let out = match kind {
        ExperimentKind::Quotient => run_quotient(cfg, &s)?,
        ExperimentKind::Sequence => run_sequence(cfg, &s)?,
        ExperimentKind::Search => run_search(cfg, &s)?,
        ExperimentKind::VerifySymmetry => run_verify_symmetry(cfg, &s)?,
        ExperimentKind::Separation => run_separation(cfg, &s)?,
        ExperimentKind::ShiftedLimit => run_shifted_limit(cfg, &s)?,
    };
    let mut warnings = out.warnings;
    if !s.e.is_acceptance_set() {
        warnings.push("exploratory: the Gaussian is only known to be extremal for p = 2, d <= 2".into());
    }
    let mut config = cfg.clone();
    config.kind = Some(kind);
    Ok(ExperimentReport {
        tool: "parext",
        version: env!("CARGO_PKG_VERSION"),
        kind,
        seed: cfg.seed,
        config,
        acceptance_set: s.e.is_acceptance_set(),
        a_p_estimate: out.a_p.map(|a| a.0),
        a_p_error: out.a_p.map(|a| a.1),
        target: out.a_p.map(|a| a.0 * s.e.pair_factor()),
        tables: out.tables.iter().map(|t| t.name.clone()).collect(),
        results: out.results,
        warnings,
        csv: out.tables,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, dir.join(name))?;
    Ok(())
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<Vec<u8>> {
        let mut v = serde_json::to_vec_pretty(self).map_err(internal)?;
        v.push(b'\n');
        Ok(v)
    }

    /// Writes `report.json`, one CSV per table and `timing.json` into `dir`.
    pub fn persist(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for t in &self.csv {
            write_atomic(dir, &format!("{}.csv", t.name), &t.to_csv()?)?;
        }
        let timing = json!({ "wall_clock_seconds": self.wall_clock_seconds });
        write_atomic(dir, "timing.json", &serde_json::to_vec_pretty(&timing).map_err(internal)?)?;
        write_atomic(dir, "report.json", &self.to_json()?)
    }
}

/// Runs `kind` and persists the report into `out`, the config's `output_dir`,
/// or the current directory, in that order of preference.
pub fn run_experiment(cfg: &ExperimentConfig, kind: ExperimentKind, out: Option<&Path>) -> Result<ExperimentReport> {
    let report = run(cfg, kind)?;
    let dir = out.map(Path::to_path_buf).or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    report.persist(&dir)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
        [exponents]
        d = 1
        p = 2.0
        [grid]
        half_width = 10.0
        points = 256
        t_half_width = 10.0
        x_half_width = 20.0
        t_points = 128
        x_points = 256
    "#;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_toml(&format!("{SMALL}\nbogus = 1\n")).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("bogus")), "{err}");
        let err = ExperimentConfig::from_toml(&SMALL.replace("points = 256", "point = 256")).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("point")), "{err}");
        let err =
            ExperimentConfig::from_toml("[exponents]\nd = 1\np = 2.0\n[profile]\nkind = \"gaussian\"\nwdth = 2\n")
                .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn numbers_use_twelve_significant_digits() {
        assert_eq!(format_num(2.0377784), "2.03777840000e0");
        assert_eq!(format_num(-1.5e-7), "-1.50000000000e-7");
        assert_eq!(format_num(0.0), "0.00000000000e0");
    }

    #[test]
    fn kind_mismatch_and_bad_values_are_config_errors() {
        let mut cfg = ExperimentConfig::from_toml(SMALL).unwrap();
        cfg.kind = Some(ExperimentKind::Search);
        assert!(matches!(run(&cfg, ExperimentKind::Quotient), Err(Error::Config(_))));
        let cfg = ExperimentConfig::from_toml(&SMALL.replace("p = 2.0", "p = 0.5")).unwrap();
        assert!(matches!(run(&cfg, ExperimentKind::Quotient), Err(Error::Config(_))));
        let cfg = ExperimentConfig::from_toml(SMALL).unwrap();
        assert!(matches!(run(&cfg, ExperimentKind::Sequence), Err(Error::Config(_))));
        assert!(matches!(run(&cfg, ExperimentKind::Separation), Err(Error::Config(_))));
        assert!("nonsense".parse::<ExperimentKind>().is_err());
        assert_eq!("shifted-limit".parse::<ExperimentKind>().unwrap(), ExperimentKind::ShiftedLimit);
    }

    #[test]
    fn quotient_report_round_trip() {
        let cfg = ExperimentConfig::from_toml(SMALL).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let rep = run_experiment(&cfg, ExperimentKind::Quotient, Some(dir.path())).unwrap();
        let csv = fs::read_to_string(dir.path().join("quotient.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "d,p,q,tau0,xi0_1,quotient,truncated,tail_bound,quadrature_estimate,certified_error,unresolved_slices"
        );
        assert_eq!(lines.count(), 1);
        let json: Value = serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(json["kind"], "quotient");
        assert_eq!(json["tables"][0], "quotient");
        assert!(json["config"]["grid"]["points"] == 256);
        assert!(dir.path().join("timing.json").exists());
        assert!(!dir.path().join(".report.json.tmp").exists());
        assert!(rep.a_p_estimate.is_some());
    }

    #[test]
    fn separation_degenerate_is_flagged() {
        let text = format!("shift = {{ tau0 = 0.0, xi0 = [1.0] }}\n{SMALL}\n[separation]\nshift_n = {{ tau0 = 0.0, xi0 = [1.0] }}\ns = 0.1\nr = 2.0\n");
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        let rep = run(&cfg, ExperimentKind::Separation).unwrap();
        assert_eq!(rep.results["report"]["degenerate"], true);
    }
}
