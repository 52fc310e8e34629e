//! Sensitivity sweeps, regime maps and base-case profile tables.

use rayon::prelude::*;

use crate::dynamics::{travel_time, trip_cost, ModeTag};
use crate::equilibrium_pc::{solve_pc_model, PcSolution};
use crate::error::{Error, Result};
use crate::format::num;
use crate::oracle::{verify, Thresholds, DEFAULT_STEP};
use crate::scenario::{Model, ScenarioParams};
use crate::solution::Equilibrium;

pub const SWEEP_HEADER: &str =
    "value,c_star,frt_share_ue,c_pstar,frt_share_pc,ratio,ue_regime,pc_regime,max_residual";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub c_star: f64,
    /// Percent.
    pub frt_share_ue: f64,
    pub c_p_star: f64,
    /// Percent.
    pub frt_share_pc: f64,
    pub ratio: f64,
    pub ue_regime: String,
    pub pc_regime: String,
    /// Largest oracle residual over both solutions, as a multiple of its
    /// threshold. Above 1 flags a failed check.
    pub max_residual: f64,
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(value: f64, err: &Error) -> Self {
        SweepRow {
            value,
            c_star: f64::NAN,
            frt_share_ue: f64::NAN,
            c_p_star: f64::NAN,
            frt_share_pc: f64::NAN,
            ratio: f64::NAN,
            ue_regime: "error".into(),
            pc_regime: "error".into(),
            max_residual: f64::NAN,
            error: Some(err.to_string()),
        }
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            num(self.value),
            num(self.c_star),
            num(self.frt_share_ue),
            num(self.c_p_star),
            num(self.frt_share_pc),
            num(self.ratio),
            self.ue_regime,
            self.pc_regime,
            num(self.max_residual)
        )
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

fn solve_row(p: &ScenarioParams, key: &str, value: f64, step: f64) -> Result<SweepRow> {
    let m = Model::new(&p.with_field(key, value)?)?;
    let pc = solve_pc_model(&m)?;
    let th = Thresholds::default();
    let residual = verify(&pc.ue, &m, step)
        .max_normalized_residual(&th)
        .max(verify(&pc, &m, step).max_normalized_residual(&th));
    Ok(SweepRow {
        value,
        c_star: pc.ue.c_star,
        frt_share_ue: pc.ue.frt_share(),
        c_p_star: pc.c_p_star,
        frt_share_pc: pc.frt_share(),
        ratio: pc.c_p_star / pc.ue.c_star,
        ue_regime: pc.ue.regime.label().into(),
        pc_regime: pc.regime.label().into(),
        max_residual: residual,
        error: None,
    })
}

/// One row per value of `key`, each solved independently and checked by the
/// oracle at `step`. Rows come back in input order.
pub fn sweep_with_step(p: &ScenarioParams, key: &str, values: &[f64], step: f64) -> Vec<SweepRow> {
    values
        .par_iter()
        .map(|&v| solve_row(p, key, v, step).unwrap_or_else(|e| SweepRow::failed(v, &e)))
        .collect()
}

pub fn sweep(p: &ScenarioParams, key: &str, values: &[f64]) -> Vec<SweepRow> {
    sweep_with_step(p, key, values, DEFAULT_STEP)
}

pub const TABLE1_FLEETS: [f64; 5] = [1.0, 5.0, 10.0, 15.0, 20.0];
pub const TABLE2_FIXED_COSTS: [f64; 6] = [3.0, 5.0, 8.0, 10.0, 15.0, 20.0];

/// CBD fleet-size sensitivity on the reference scenario at transit fixed cost `f_f`.
pub fn table1(f_f: f64) -> Vec<SweepRow> {
    let p = ScenarioParams { f_f, ..ScenarioParams::reference() };
    sweep(&p, "n_f_cbd", &TABLE1_FLEETS)
}

/// Transit fixed-cost sensitivity.
pub fn table2() -> Vec<SweepRow> {
    sweep(&ScenarioParams::fixed_cost_study(), "f_f", &TABLE2_FIXED_COSTS)
}

/// Transit fixed costs at which ΔF = αΔT_f and ΔF = 2αΔT_f for `p`.
pub fn frt_boundary_fixed_costs(p: &ScenarioParams) -> Result<(f64, f64)> {
    let m = Model::new(p)?;
    Ok((p.f_c - m.alpha_dtf(), p.f_c - 2.0 * m.alpha_dtf()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeCell {
    pub x: f64,
    pub y: f64,
    pub c_star: f64,
    pub c_p_star: f64,
    pub theta_ue: f64,
    pub ue_regime: String,
    pub pc_regime: String,
    pub theta_le_1: bool,
    pub theta_le_2: bool,
    pub error: Option<String>,
}

pub const REGIME_MAP_HEADER: &str = "x,y,c_star,c_pstar,theta_ue,ue_regime,pc_regime,theta_le_1,theta_le_2";

impl RegimeCell {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            num(self.x),
            num(self.y),
            num(self.c_star),
            num(self.c_p_star),
            num(self.theta_ue),
            self.ue_regime,
            self.pc_regime,
            self.theta_le_1 as u8,
            self.theta_le_2 as u8
        )
    }
}

fn solve_cell(p: &ScenarioParams, x_key: &str, x: f64, y_key: &str, y: f64) -> Result<RegimeCell> {
    let q = p.with_field(x_key, x)?.with_field(y_key, y)?;
    let pc = solve_pc_model(&Model::new(&q)?)?;
    Ok(RegimeCell {
        x,
        y,
        c_star: pc.ue.c_star,
        c_p_star: pc.c_p_star,
        theta_ue: pc.ue.theta,
        ue_regime: pc.ue.regime.label().into(),
        pc_regime: pc.regime.label().into(),
        theta_le_1: pc.ue.theta <= 1.0,
        theta_le_2: pc.ue.theta <= 2.0,
        error: None,
    })
}

/// Solves every (x, y) cell, row-major in `y` then `x`.
pub fn regime_map(
    p: &ScenarioParams,
    x_key: &str,
    x_grid: &[f64],
    y_key: &str,
    y_grid: &[f64],
) -> Vec<RegimeCell> {
    let cells: Vec<(f64, f64)> = y_grid.iter().flat_map(|&y| x_grid.iter().map(move |&x| (x, y))).collect();
    cells
        .par_iter()
        .map(|&(x, y)| {
            solve_cell(p, x_key, x, y_key, y).unwrap_or_else(|e| RegimeCell {
                x,
                y,
                c_star: f64::NAN,
                c_p_star: f64::NAN,
                theta_ue: f64::NAN,
                ue_regime: "error".into(),
                pc_regime: "error".into(),
                theta_le_1: false,
                theta_le_2: false,
                error: Some(e.to_string()),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseLabel {
    /// F_F = 2.
    CaseI,
    /// F_F = 1.
    CaseII,
}

impl CaseLabel {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "i" | "1" | "casei" | "case1" => Ok(CaseLabel::CaseI),
            "ii" | "2" | "caseii" | "case2" => Ok(CaseLabel::CaseII),
            _ => Err(Error::InvalidScenario(format!("unknown case `{s}`, expected I or II"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CaseLabel::CaseI => "I",
            CaseLabel::CaseII => "II",
        }
    }

    pub fn scenario(&self) -> ScenarioParams {
        let f_f = match self {
            CaseLabel::CaseI => 2.0,
            CaseLabel::CaseII => 1.0,
        };
        ScenarioParams { f_f, ..ScenarioParams::reference() }
    }
}

pub const PROFILE_HEADER: &str = "t_abs,t_rel,n_c,v_c,v_F,O_F,G_c,G_Fp,q,T_b,C_c,C_F";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSample {
    pub t_abs: f64,
    pub t_rel: f64,
    pub n_c: f64,
    pub v_c: f64,
    pub v_frt: f64,
    pub o_frt: f64,
    pub g_c: f64,
    pub g_frt: f64,
    pub q: f64,
    pub t_b: f64,
    pub cost_car: f64,
    pub cost_frt: f64,
}

impl ProfileSample {
    pub fn to_csv(&self) -> String {
        [
            self.t_abs,
            self.t_rel,
            self.n_c,
            self.v_c,
            self.v_frt,
            self.o_frt,
            self.g_c,
            self.g_frt,
            self.q,
            self.t_b,
            self.cost_car,
            self.cost_frt,
        ]
        .iter()
        .map(|v| num(*v))
        .collect::<Vec<_>>()
        .join(",")
    }
}

/// Samples every profile of `sol` from the first to the last breakpoint,
/// both included, at spacing `step`.
pub fn sample_profiles(sol: &dyn Equilibrium, m: &Model, step: f64) -> Result<Vec<ProfileSample>> {
    if !(step > 0.0) {
        return Err(Error::InvalidScenario(format!("step must be > 0, got {step}")));
    }
    let pr = sol.profiles();
    let Some((lo, hi)) = pr.support() else {
        return Ok(Vec::new());
    };
    let (p, d) = (&m.p, &m.d);
    let n = ((hi - lo) / step).ceil() as usize;
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = if k == n { hi } else { lo + step * k as f64 };
        let n_c = pr.n_c.eval(t);
        let o = pr.o_frt.eval(t);
        let wait = pr.wait.eval(t);
        let tt_c = travel_time(ModeTag::Car, n_c, d)?;
        let tt_f = travel_time(ModeTag::Frt, n_c, d)?;
        out.push(ProfileSample {
            t_abs: t,
            t_rel: t - p.t_star,
            n_c,
            v_c: pr.v_c.eval(t),
            v_frt: pr.v_frt.eval(t),
            o_frt: o,
            g_c: pr.g_c.eval(t),
            g_frt: pr.g_frt.eval(t),
            q: pr.queue.eval(t),
            t_b: wait,
            cost_car: trip_cost(ModeTag::Car, t, tt_c, 0.0, wait.max(0.0), p)?,
            cost_frt: trip_cost(ModeTag::Frt, t, tt_f, o.max(0.0), 0.0, p)?,
        });
    }
    Ok(out)
}

pub fn profile_csv(samples: &[ProfileSample]) -> String {
    let mut out = String::from(PROFILE_HEADER);
    out.push('\n');
    for s in samples {
        out.push_str(&s.to_csv());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone)]
pub struct BaseCase {
    pub label: CaseLabel,
    pub solution: PcSolution,
    pub ue: Vec<ProfileSample>,
    pub pc: Vec<ProfileSample>,
}

/// Solves one of the two base cases and samples both equilibria.
pub fn base_case_profiles(label: CaseLabel, step: f64) -> Result<BaseCase> {
    let m = Model::new(&label.scenario())?;
    let solution = solve_pc_model(&m)?;
    let ue = sample_profiles(&solution.ue, &m, step)?;
    let pc = sample_profiles(&solution, &m, step)?;
    Ok(BaseCase { label, solution, ue, pc })
}
