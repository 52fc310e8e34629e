//! Equilibrium under perimeter control with transit priority.
//!
//! While control is active the controller holds car accumulation at n_j'/2,
//! admits cars at I_p and queues the rest at the boundary; transit bypasses
//! the queue. θ_p = (c_p − F_c)/(αT_f^c) as in the uncontrolled case.

use crate::equilibrium_ue::{solve_ue_model, UeRegime, UeSolution};
use crate::error::{Error, Result};
use crate::root::{solve_increasing, Domain};
use crate::scenario::{Model, ScenarioParams};
use crate::solution::{Breakpoints, Equilibrium};
use crate::timeline::{CarState, ProfileSet, Shape, Timeline};

/// Lower end of every θ_p bracket above 2.
pub const THETA_P_FLOOR: f64 = 2.0 + 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PcRegime {
    /// The uncontrolled equilibrium never reaches hypercongestion.
    Inactive,
    /// ΔF ≥ 2αΔT_f: transit carries passengers through the whole rush.
    FullFrt,
    /// αΔT_f < ΔF < 2αΔT_f: transit idles in the car rush and resumes
    /// around t* during control.
    PartialFrt,
    /// αΔT_f < ΔF < 2αΔT_f but θ_p too low for transit to resume during
    /// control: transit is used only before and after its idle window.
    FrtOutsideControl,
    /// ΔF ≤ αΔT_f: transit is used only during control.
    FrtOnlyDuringPc,
    /// ΔF ≤ αΔT_f and θ_p too low: nobody takes transit.
    NoFrtDuringPc,
}

impl PcRegime {
    /// Order in which boundary ties are resolved (weak inequalities first).
    pub const CONTROLLED: [PcRegime; 5] = [
        PcRegime::FullFrt,
        PcRegime::FrtOutsideControl,
        PcRegime::PartialFrt,
        PcRegime::NoFrtDuringPc,
        PcRegime::FrtOnlyDuringPc,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            PcRegime::Inactive => "Inactive",
            PcRegime::FullFrt => "FullFrt",
            PcRegime::PartialFrt => "PartialFrt",
            PcRegime::FrtOutsideControl => "FrtOutsideControl",
            PcRegime::FrtOnlyDuringPc => "FrtOnlyDuringPc",
            PcRegime::NoFrtDuringPc => "NoFrtDuringPc",
        }
    }
}

impl std::fmt::Display for PcRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Who arrives when, in passengers.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DemandSplit {
    /// Cars arriving during control.
    pub n_c_p: f64,
    /// Cars arriving in the car rush outside control.
    pub n_c_op: f64,
    /// Transit passengers arriving during control.
    pub n_f_p: f64,
    /// Transit passengers arriving outside the car rush.
    pub n_f_oc: f64,
    /// Transit passengers arriving in the car rush outside control.
    pub n_f_op: f64,
}

impl DemandSplit {
    pub fn cars(&self) -> f64 {
        self.n_c_p + self.n_c_op
    }

    pub fn frt(&self) -> f64 {
        self.n_f_p + self.n_f_oc + self.n_f_op
    }

    pub fn total(&self) -> f64 {
        self.cars() + self.frt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcSolution {
    pub regime: PcRegime,
    pub c_p_star: f64,
    pub theta_p: f64,
    pub breakpoints: Breakpoints,
    pub profiles: ProfileSet,
    pub split: DemandSplit,
    /// The uncontrolled equilibrium of the same scenario.
    pub ue: UeSolution,
}

impl Equilibrium for PcSolution {
    fn cost(&self) -> f64 {
        self.c_p_star
    }
    fn theta(&self) -> f64 {
        self.theta_p
    }
    fn regime_label(&self) -> &'static str {
        self.regime.label()
    }
    fn breakpoints(&self) -> &Breakpoints {
        &self.breakpoints
    }
    fn profiles(&self) -> &ProfileSet {
        &self.profiles
    }
    fn car_demand(&self) -> f64 {
        self.split.cars()
    }
    fn frt_demand(&self) -> f64 {
        self.split.frt()
    }
}

fn check_controlled(theta_p: f64) -> Result<()> {
    if !(theta_p >= 2.0) {
        return Err(Error::Domain(format!("control needs theta_p >= 2, got {theta_p}")));
    }
    Ok(())
}

fn check_threshold(theta_p: f64, m: &Model) -> Result<()> {
    let tau = m.pc_frt_threshold();
    if theta_p < tau {
        return Err(Error::Domain(format!(
            "transit during control needs theta_p >= {tau}, got {theta_p}"
        )));
    }
    Ok(())
}

fn check_attractive(m: &Model, want: bool) -> Result<()> {
    let r = m.frt_advantage();
    if (r > 1.0) != want {
        let rel = if want { ">" } else { "<=" };
        return Err(Error::Domain(format!("regime needs dF {rel} alpha*dTf, got ratio {r}")));
    }
    Ok(())
}

/// Car demand with the control window, before the 1/β + 1/γ factor.
fn car_terms(theta_p: f64, m: &Model) -> (f64, f64) {
    let an = m.p.alpha * m.d.n_j_eff;
    (0.25 * an * (theta_p - 2.0), an * (std::f64::consts::LN_2 - 0.5))
}

/// Transit demand outside the car rush, as without control.
fn frt_outside(m: &Model) -> f64 {
    let gap = m.d.delta_f - m.alpha_dtf();
    0.5 * m.frt_weight() * gap * gap
}

/// Transit demand in the car rush before transit goes idle.
fn frt_rush_before_idle(m: &Model) -> f64 {
    let (df, adt) = (m.d.delta_f, m.alpha_dtf());
    m.frt_rush_weight() * (df * (df / adt).ln() - (df - adt))
}

/// Triangle of transit use around t* during control.
fn frt_control_triangle(theta_p: f64, m: &Model) -> f64 {
    let y = m.alpha_tfc() * (theta_p - m.pc_frt_threshold());
    0.25 * m.frt_weight() * y * y
}

/// Demand split of a controlled regime at θ_p. No domain checks.
fn split_at(regime: PcRegime, theta_p: f64, m: &Model) -> DemandSplit {
    let s = m.schedule_weight();
    let (cp, cop) = car_terms(theta_p, m);
    let mut out = DemandSplit { n_c_p: s * cp, n_c_op: s * cop, ..Default::default() };
    match regime {
        PcRegime::FullFrt => {
            let (df, adt, atc) = (m.d.delta_f, m.alpha_dtf(), m.alpha_tfc());
            let x = atc * (theta_p - 2.0);
            let d0 = df - 2.0 * adt;
            out.n_f_p = s * m.frt_weight() * 0.5 * x * (d0 + 0.5 * x);
            out.n_f_oc = s * frt_outside(m);
            out.n_f_op = s * m.frt_rush_weight() * (df * std::f64::consts::LN_2 - adt);
        }
        PcRegime::PartialFrt | PcRegime::FrtOutsideControl => {
            out.n_f_oc = s * frt_outside(m);
            out.n_f_op = s * frt_rush_before_idle(m);
            if regime == PcRegime::PartialFrt {
                out.n_f_p = s * frt_control_triangle(theta_p, m);
            }
        }
        PcRegime::FrtOnlyDuringPc => out.n_f_p = s * frt_control_triangle(theta_p, m),
        PcRegime::NoFrtDuringPc | PcRegime::Inactive => {}
    }
    out
}

pub fn demand_pc_full(theta_p: f64, m: &Model) -> Result<f64> {
    check_controlled(theta_p)?;
    Ok(split_at(PcRegime::FullFrt, theta_p, m).total())
}

pub fn demand_pc_partial(theta_p: f64, m: &Model) -> Result<f64> {
    check_controlled(theta_p)?;
    check_threshold(theta_p, m)?;
    check_attractive(m, true)?;
    Ok(split_at(PcRegime::PartialFrt, theta_p, m).total())
}

/// Demand when transit is used before and after its idle window but not
/// during control.
pub fn demand_pc_outside_control(theta_p: f64, m: &Model) -> Result<f64> {
    check_controlled(theta_p)?;
    check_attractive(m, true)?;
    Ok(split_at(PcRegime::FrtOutsideControl, theta_p, m).total())
}

pub fn demand_pc_frt_only(theta_p: f64, m: &Model) -> Result<f64> {
    check_controlled(theta_p)?;
    check_threshold(theta_p, m)?;
    check_attractive(m, false)?;
    Ok(split_at(PcRegime::FrtOnlyDuringPc, theta_p, m).total())
}

pub fn demand_pc_nofrt(theta_p: f64, m: &Model) -> Result<f64> {
    check_controlled(theta_p)?;
    Ok(split_at(PcRegime::NoFrtDuringPc, theta_p, m).total())
}

/// Demand function of a controlled regime.
pub fn demand_pc(regime: PcRegime, theta_p: f64, m: &Model) -> Result<f64> {
    match regime {
        PcRegime::FullFrt => demand_pc_full(theta_p, m),
        PcRegime::PartialFrt => demand_pc_partial(theta_p, m),
        PcRegime::FrtOutsideControl => demand_pc_outside_control(theta_p, m),
        PcRegime::FrtOnlyDuringPc => demand_pc_frt_only(theta_p, m),
        PcRegime::NoFrtDuringPc => demand_pc_nofrt(theta_p, m),
        PcRegime::Inactive => Err(Error::Contract("Inactive has no demand equation".into())),
    }
}

/// Interval of θ_p searched for each controlled regime, or `None` when the
/// regime cannot arise for this scenario's parameters.
pub fn pc_domain(regime: PcRegime, m: &Model) -> Option<Domain> {
    let r = m.frt_advantage();
    let full = m.d.delta_f >= 2.0 * m.alpha_dtf();
    let tau = m.pc_frt_threshold();
    let above_tau = Domain::Unbounded(tau.max(2.0) + 1e-12);
    match regime {
        PcRegime::FullFrt => full.then_some(Domain::Unbounded(THETA_P_FLOOR)),
        PcRegime::PartialFrt => (r > 1.0 && !full).then_some(above_tau),
        PcRegime::FrtOutsideControl => (r > 1.0 && !full).then_some(Domain::Bounded(THETA_P_FLOOR, tau)),
        PcRegime::FrtOnlyDuringPc => (r <= 1.0).then_some(above_tau),
        PcRegime::NoFrtDuringPc => (r <= 1.0).then_some(Domain::Bounded(THETA_P_FLOOR, tau)),
        PcRegime::Inactive => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcCandidate {
    pub regime: PcRegime,
    pub theta_p: Option<f64>,
    pub consistent: bool,
}

fn consistent(regime: PcRegime, theta_p: f64, m: &Model) -> bool {
    let r = m.frt_advantage();
    let full = m.d.delta_f >= 2.0 * m.alpha_dtf();
    let tau = m.pc_frt_threshold();
    theta_p > 2.0
        && match regime {
            PcRegime::FullFrt => full,
            PcRegime::PartialFrt => r > 1.0 && !full && theta_p > tau,
            PcRegime::FrtOutsideControl => r > 1.0 && !full && theta_p <= tau,
            PcRegime::FrtOnlyDuringPc => r <= 1.0 && theta_p > tau,
            PcRegime::NoFrtDuringPc => r <= 1.0 && theta_p <= tau,
            PcRegime::Inactive => false,
        }
}

/// Solves every controlled regime's equation and checks consistency.
pub fn pc_candidates(m: &Model) -> Result<Vec<PcCandidate>> {
    let n = m.p.n_total;
    PcRegime::CONTROLLED
        .iter()
        .map(|&regime| {
            let theta_p = match pc_domain(regime, m) {
                Some(dom) => {
                    let f = |th: f64| demand_pc(regime, th, m).unwrap_or(f64::NAN);
                    solve_increasing(f, n, dom, regime.label())?
                }
                None => None,
            };
            let ok = theta_p.is_some_and(|th| consistent(regime, th, m));
            Ok(PcCandidate { regime, theta_p, consistent: ok })
        })
        .collect()
}

pub fn solve_pc(p: &ScenarioParams) -> Result<PcSolution> {
    solve_pc_model(&Model::new(p)?)
}

pub fn solve_pc_model(m: &Model) -> Result<PcSolution> {
    let ue = solve_ue_model(m)?;
    if ue.regime == UeRegime::AllFrt || ue.theta <= 2.0 {
        return Ok(inactive(ue));
    }
    let candidates = pc_candidates(m)?;
    let chosen = candidates.iter().find(|c| c.consistent).ok_or_else(|| {
        Error::NoConsistentRegime(format!(
            "perimeter control with theta_ue={}, candidates {candidates:?}",
            ue.theta
        ))
    })?;
    build_pc(m, chosen.regime, chosen.theta_p.expect("consistent candidates carry a root"), ue)
}

fn inactive(ue: UeSolution) -> PcSolution {
    let split = DemandSplit {
        n_c_p: 0.0,
        n_c_op: ue.n_car,
        n_f_p: 0.0,
        n_f_oc: ue.n_frt_outside_rush,
        n_f_op: ue.n_frt - ue.n_frt_outside_rush,
    };
    PcSolution {
        regime: PcRegime::Inactive,
        c_p_star: ue.c_star,
        theta_p: ue.theta,
        breakpoints: ue.breakpoints,
        profiles: ue.profiles.clone(),
        split,
        ue,
    }
}

/// Builds the controlled solution of `regime` at an arbitrary θ_p > 2.
pub fn build_pc(m: &Model, regime: PcRegime, theta_p: f64, ue: UeSolution) -> Result<PcSolution> {
    if regime == PcRegime::Inactive {
        return Ok(inactive(ue));
    }
    check_controlled(theta_p)?;
    let (p, d) = (&m.p, &m.d);
    let t_star = p.t_star;
    let (alpha, beta, gamma, lambda) = (p.alpha, p.beta, p.gamma, p.lambda);
    let (k_e, k_l) = (m.k_early(), m.k_late());
    let (df, adt, atc) = (d.delta_f, m.alpha_dtf(), m.alpha_tfc());
    let r = m.frt_advantage();

    let t_s_c = t_star - (theta_p - 1.0) / k_e;
    let t_s_p = t_s_c + 1.0 / k_e;
    let t_e_p = t_star + (theta_p - 2.0) / k_l;
    let t_e_c = t_e_p + 1.0 / k_l;
    let early = CarState::Rush { origin: t_s_c, rate: k_e };
    let late = CarState::Rush { origin: t_e_c, rate: -k_l };
    let q_early = Shape::line(t_s_p, 0.0, d.i_p * beta / alpha);
    let q_late = Shape::line(t_e_p, 0.0, -d.i_p * gamma / alpha);
    let rush_occ = Shape::RushLinear { a: df / lambda, d: -adt / lambda };
    // Occupancy during control: λO_F = Y − schedule delay.
    let y = atc * (theta_p - m.pc_frt_threshold());
    let ctl_early = Shape::line(t_star, y / lambda, beta / lambda);
    let ctl_late = Shape::line(t_star, y / lambda, -gamma / lambda);

    let mut bp = Breakpoints {
        t_s_c: Some(t_s_c),
        t_s_p: Some(t_s_p),
        t_e_p: Some(t_e_p),
        t_e_c: Some(t_e_c),
        ..Default::default()
    };
    let gap = df - adt;
    let t_s_f = t_s_c - gap / beta;
    let t_e_f = t_e_c + gap / gamma;
    let t_ee_f = t_s_c + (r - 1.0) / k_e;
    let t_sl_f = t_e_c - (r - 1.0) / k_l;
    let t_sp_f = t_star - y / beta;
    let t_ep_f = t_star + y / gamma;

    let mut tl;
    match regime {
        PcRegime::FullFrt => {
            bp.t_s_f = Some(t_s_f);
            bp.t_e_f = Some(t_e_f);
            tl = Timeline::starting_at(t_s_f);
            tl.push(t_s_c, CarState::FreeFlow, Shape::line(t_s_f, 0.0, beta / lambda))
                .push(t_s_p, early, rush_occ)
                .push_queued(t_star, CarState::Control, ctl_early, q_early)
                .push_queued(t_e_p, CarState::Control, ctl_late, q_late)
                .push(t_e_c, late, rush_occ)
                .push(t_e_f, CarState::FreeFlow, Shape::line(t_e_f, 0.0, -gamma / lambda));
        }
        PcRegime::PartialFrt | PcRegime::FrtOutsideControl => {
            bp.t_s_f = Some(t_s_f);
            bp.t_ee_f = Some(t_ee_f);
            bp.t_sl_f = Some(t_sl_f);
            bp.t_e_f = Some(t_e_f);
            tl = Timeline::starting_at(t_s_f);
            tl.push(t_s_c, CarState::FreeFlow, Shape::line(t_s_f, 0.0, beta / lambda))
                .push(t_ee_f, early, rush_occ)
                .push(t_s_p, early, Shape::Zero);
            if regime == PcRegime::PartialFrt {
                bp.t_sp_f = Some(t_sp_f);
                bp.t_ep_f = Some(t_ep_f);
                tl.push_queued(t_sp_f, CarState::Control, Shape::Zero, q_early)
                    .push_queued(t_star, CarState::Control, ctl_early, q_early)
                    .push_queued(t_ep_f, CarState::Control, ctl_late, q_late)
                    .push_queued(t_e_p, CarState::Control, Shape::Zero, q_late);
            } else {
                tl.push_queued(t_star, CarState::Control, Shape::Zero, q_early)
                    .push_queued(t_e_p, CarState::Control, Shape::Zero, q_late);
            }
            tl.push(t_sl_f, late, Shape::Zero)
                .push(t_e_c, late, rush_occ)
                .push(t_e_f, CarState::FreeFlow, Shape::line(t_e_f, 0.0, -gamma / lambda));
        }
        PcRegime::FrtOnlyDuringPc | PcRegime::NoFrtDuringPc => {
            tl = Timeline::starting_at(t_s_c);
            tl.push(t_s_p, early, Shape::Zero);
            if regime == PcRegime::FrtOnlyDuringPc {
                bp.t_sp_f = Some(t_sp_f);
                bp.t_ep_f = Some(t_ep_f);
                tl.push_queued(t_sp_f, CarState::Control, Shape::Zero, q_early)
                    .push_queued(t_star, CarState::Control, ctl_early, q_early)
                    .push_queued(t_ep_f, CarState::Control, ctl_late, q_late)
                    .push_queued(t_e_p, CarState::Control, Shape::Zero, q_late);
            } else {
                tl.push_queued(t_star, CarState::Control, Shape::Zero, q_early)
                    .push_queued(t_e_p, CarState::Control, Shape::Zero, q_late);
            }
            tl.push(t_e_c, late, Shape::Zero);
        }
        PcRegime::Inactive => unreachable!("handled above"),
    }

    Ok(PcSolution {
        regime,
        c_p_star: m.cost_from_theta(theta_p),
        theta_p,
        breakpoints: bp,
        profiles: tl.build(m)?,
        split: split_at(regime, theta_p, m),
        ue,
    })
}
