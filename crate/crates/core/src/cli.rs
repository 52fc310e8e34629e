//! Command-line front end.
//!
//! Exit codes: 0 ok, 1 bad input, 2 solver failure, 3 oracle check failed
//! (`verify` only).

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::equilibrium_pc::{solve_pc_model, PcSolution};
use crate::equilibrium_ue::{solve_ue_model, UeSolution};
use crate::error::{Error, Result};
use crate::experiments::{
    base_case_profiles, profile_csv, regime_map, sample_profiles, sweep_csv, sweep_with_step, table1,
    table2, CaseLabel, SweepRow, REGIME_MAP_HEADER,
};
use crate::format::num;
use crate::oracle::{verify, Thresholds, DEFAULT_STEP};
use crate::scenario::{Model, ScenarioParams};
use crate::solution::Equilibrium;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_ORACLE: i32 = 3;

/// Default profile sampling step, hours.
pub const DEFAULT_SAMPLE_STEP: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(name = "bathtub", version, about = "Car/transit bathtub equilibria with and without perimeter control")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Scenario file (`key = value` lines). Defaults to the built-in reference scenario.
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Output file, or directory for `profiles` and `tables`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Grid step in hours: profile sampling (default 1e-3) or oracle grid (default 1e-4).
    #[arg(long, global = true)]
    pub step: Option<f64>,
    /// Base case I (F_F = 2) or II (F_F = 1); overrides --scenario.
    #[arg(long, global = true)]
    pub case: Option<String>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Solve the uncontrolled equilibrium.
    Solve,
    /// Solve the equilibrium under perimeter control.
    SolvePc,
    /// Solve both equilibria and check them with the numeric oracle.
    Verify,
    /// One-parameter sensitivity sweep.
    Sweep {
        #[arg(long)]
        key: String,
        /// Comma list, or `lo:hi:n` for n evenly spaced values.
        #[arg(long)]
        values: String,
    },
    /// Regime classification over a two-parameter grid.
    RegimeMap {
        #[arg(long)]
        x_key: String,
        #[arg(long)]
        x_grid: String,
        #[arg(long)]
        y_key: String,
        #[arg(long)]
        y_grid: String,
    },
    /// Sampled time profiles of both equilibria.
    Profiles,
    /// The fleet-size and fixed-cost sensitivity tables.
    Tables,
}

/// Parses `a,b,c` or `lo:hi:n`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = |what: &str| Error::InvalidScenario(format!("grid `{s}`: {what}"));
    let s = s.trim();
    if s.is_empty() {
        return Err(bad("empty"));
    }
    let values = if let Some((lo, rest)) = s.split_once(':') {
        let (hi, n) = rest.split_once(':').ok_or_else(|| bad("expected lo:hi:n"))?;
        let lo: f64 = lo.trim().parse().map_err(|_| bad("lo is not a number"))?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad("hi is not a number"))?;
        let n: usize = n.trim().parse().map_err(|_| bad("n is not a positive integer"))?;
        match n {
            0 => return Err(bad("n must be >= 1")),
            1 => vec![lo],
            _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
        }
    } else {
        s.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad(&format!("`{}` is not a number", v.trim()))))
            .collect::<Result<Vec<_>>>()?
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(bad("values must be finite"));
    }
    Ok(values)
}

fn load_scenario(c: &CommonArgs) -> Result<ScenarioParams> {
    if let Some(case) = &c.case {
        return Ok(CaseLabel::parse(case)?.scenario());
    }
    match &c.scenario {
        Some(path) => {
            if !path.exists() {
                return Err(Error::InvalidScenario(format!("scenario file {} does not exist", path.display())));
            }
            ScenarioParams::from_file(path)
        }
        None => Ok(ScenarioParams::reference()),
    }
}

fn step_or(c: &CommonArgs, default: f64) -> Result<f64> {
    let step = c.step.unwrap_or(default);
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidScenario(format!("--step must be a positive number, got {step}")));
    }
    Ok(step)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn breakpoint_lines(sol: &dyn Equilibrium, t_star: f64, s: &mut String) {
    for (name, t) in sol.breakpoints().named() {
        let _ = writeln!(s, "{name}={} (t_rel={})", num(t), num(t - t_star));
    }
}

/// Human-readable summary of the uncontrolled equilibrium.
pub fn ue_summary(sol: &UeSolution, m: &Model) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "model=ue");
    let _ = writeln!(s, "regime={}", sol.regime);
    let _ = writeln!(s, "c_star={}", num(sol.c_star));
    let _ = writeln!(s, "theta={}", num(sol.theta));
    let _ = writeln!(s, "N_c={}", num(sol.n_car));
    let _ = writeln!(s, "N_F={}", num(sol.n_frt));
    let _ = writeln!(s, "frt_share_pct={}", num(sol.frt_share()));
    breakpoint_lines(sol, m.p.t_star, &mut s);
    s
}

/// Human-readable summary of the controlled equilibrium.
pub fn pc_summary(sol: &PcSolution, m: &Model) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "model=pc");
    let _ = writeln!(s, "regime={}", sol.regime);
    let _ = writeln!(s, "c_pstar={}", num(sol.c_p_star));
    let _ = writeln!(s, "theta_p={}", num(sol.theta_p));
    let _ = writeln!(s, "N_c={}", num(sol.split.cars()));
    let _ = writeln!(s, "N_F={}", num(sol.split.frt()));
    let sp = &sol.split;
    for (k, v) in [("N_c_p", sp.n_c_p), ("N_c_op", sp.n_c_op), ("N_F_p", sp.n_f_p), ("N_F_oc", sp.n_f_oc), ("N_F_op", sp.n_f_op)] {
        let _ = writeln!(s, "{k}={}", num(v));
    }
    let _ = writeln!(s, "frt_share_pct={}", num(sol.frt_share()));
    let _ = writeln!(s, "ue_regime={}", sol.ue.regime);
    let _ = writeln!(s, "c_star={}", num(sol.ue.c_star));
    let _ = writeln!(s, "ratio={}", num(sol.c_p_star / sol.ue.c_star));
    breakpoint_lines(sol, m.p.t_star, &mut s);
    s
}

fn report_sweep_errors(rows: &[SweepRow], err: &mut dyn Write) {
    for r in rows {
        if let Some(e) = &r.error {
            let _ = writeln!(err, "warning: value {}: {e}", num(r.value));
        }
    }
}

fn emit(text: &str, out_path: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    match out_path {
        Some(p) => write_file(p, text),
        None => out.write_all(text.as_bytes()).map_err(Error::from),
    }
}

fn execute(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let c = &cfg.common;
    let out_path = c.out.as_deref();
    match &cfg.command {
        Command::Solve => {
            let step = step_or(c, DEFAULT_SAMPLE_STEP)?;
            let m = Model::new(&load_scenario(c)?)?;
            let sol = solve_ue_model(&m)?;
            write!(out, "{}", ue_summary(&sol, &m))?;
            if let Some(p) = out_path {
                write_file(p, &profile_csv(&sample_profiles(&sol, &m, step)?))?;
            }
        }
        Command::SolvePc => {
            let step = step_or(c, DEFAULT_SAMPLE_STEP)?;
            let m = Model::new(&load_scenario(c)?)?;
            let sol = solve_pc_model(&m)?;
            write!(out, "{}", pc_summary(&sol, &m))?;
            if let Some(p) = out_path {
                write_file(p, &profile_csv(&sample_profiles(&sol, &m, step)?))?;
            }
        }
        Command::Verify => {
            let step = step_or(c, DEFAULT_STEP)?;
            let m = Model::new(&load_scenario(c)?)?;
            let pc = solve_pc_model(&m)?;
            let th = Thresholds::default();
            let mut ok = true;
            let mut text = String::new();
            for (name, sol) in [("ue", &pc.ue as &dyn Equilibrium), ("pc", &pc as &dyn Equilibrium)] {
                let r = verify(sol, &m, step);
                let pass = r.passes_equilibrium(&th);
                ok &= pass;
                let _ = writeln!(text, "[{name}] regime={}", sol.regime_label());
                text.push_str(&r.to_key_value());
                let _ = writeln!(text, "equilibrium={}", if pass { "pass" } else { "FAIL" });
                let _ = writeln!(
                    text,
                    "departure_rates={}",
                    if r.passes_departure_rates(&th) { "nonnegative" } else { "negative" }
                );
            }
            emit(&text, out_path, out)?;
            if !ok {
                writeln!(err, "oracle thresholds exceeded")?;
                return Ok(EXIT_ORACLE);
            }
        }
        Command::Sweep { key, values } => {
            let step = step_or(c, DEFAULT_STEP)?;
            let p = load_scenario(c)?;
            p.get(key)?;
            let rows = sweep_with_step(&p, key, &parse_grid(values)?, step);
            report_sweep_errors(&rows, err);
            emit(&sweep_csv(&rows), out_path, out)?;
        }
        Command::RegimeMap { x_key, x_grid, y_key, y_grid } => {
            let p = load_scenario(c)?;
            p.get(x_key)?;
            p.get(y_key)?;
            let cells = regime_map(&p, x_key, &parse_grid(x_grid)?, y_key, &parse_grid(y_grid)?);
            let mut text = String::from(REGIME_MAP_HEADER);
            text.push('\n');
            for cell in &cells {
                if let Some(e) = &cell.error {
                    writeln!(err, "warning: cell ({}, {}): {e}", num(cell.x), num(cell.y))?;
                }
                text.push_str(&cell.to_csv());
                text.push('\n');
            }
            emit(&text, out_path, out)?;
        }
        Command::Profiles => {
            let step = step_or(c, DEFAULT_SAMPLE_STEP)?;
            let dir = out_path.unwrap_or(Path::new("."));
            let (tag, ue, pc) = match &c.case {
                Some(case) => {
                    let b = base_case_profiles(CaseLabel::parse(case)?, step)?;
                    (format!("case{}_", b.label.name()), b.ue, b.pc)
                }
                None => {
                    let m = Model::new(&load_scenario(c)?)?;
                    let sol = solve_pc_model(&m)?;
                    (String::new(), sample_profiles(&sol.ue, &m, step)?, sample_profiles(&sol, &m, step)?)
                }
            };
            for (name, rows) in [("ue", &ue), ("pc", &pc)] {
                let path = dir.join(format!("profiles_{tag}{name}.csv"));
                write_file(&path, &profile_csv(rows))?;
                writeln!(out, "wrote {}", path.display())?;
            }
        }
        Command::Tables => {
            let dir = out_path.unwrap_or(Path::new("."));
            for (file, rows) in [("table1_ff1.csv", table1(1.0)), ("table1_ff2.csv", table1(2.0)), ("table2.csv", table2())] {
                report_sweep_errors(&rows, err);
                let path = dir.join(file);
                write_file(&path, &sweep_csv(&rows))?;
                writeln!(out, "wrote {}", path.display())?;
            }
        }
    }
    Ok(EXIT_OK)
}

fn exit_code(e: &Error) -> i32 {
    if e.is_validation() || matches!(e, Error::Io(_)) {
        EXIT_VALIDATION
    } else {
        EXIT_SOLVER
    }
}

/// Runs one command, writing results to `out` and diagnostics to `err`.
pub fn run(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match execute(cfg, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Parses `args` (program name first) and runs. Usage errors exit 1.
pub fn run_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match RunConfig::try_parse_from(args) {
        Ok(cfg) => run(&cfg, out, err),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = err.write_all(rendered.as_bytes());
            } else {
                let _ = out.write_all(rendered.as_bytes());
            }
            code
        }
    }
}
