//! Equilibrium without control: regime classification, the demand
//! conservation equation for each regime, and the closed-form profiles.
//!
//! Throughout, θ = (c − F_c)/(αT_f^c) is the equilibrium car cost net of the
//! fixed cost, in units of the free-flow car travel-time cost.

use crate::error::{Error, Result};
use crate::root::{solve_increasing, Domain};
use crate::scenario::{Model, ScenarioParams};
use crate::solution::{Breakpoints, Equilibrium};
use crate::timeline::{CarState, ProfileSet, Shape, Timeline};

/// Lower end of every θ bracket above 1.
pub const THETA_FLOOR: f64 = 1.0 + 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UeRegime {
    /// θ ≤ 1: nobody drives.
    AllFrt,
    /// ΔF ≤ αΔT_f: transit is never worth its discomfort.
    NoFrt,
    /// Both modes used, with a window inside the car rush where transit idles.
    BothGap,
    /// Both modes used, transit carries passengers throughout.
    BothContinuous,
}

impl UeRegime {
    /// Order in which boundary ties are resolved (weak inequalities first).
    pub const ALL: [UeRegime; 4] =
        [UeRegime::NoFrt, UeRegime::AllFrt, UeRegime::BothContinuous, UeRegime::BothGap];

    pub fn label(&self) -> &'static str {
        match self {
            UeRegime::AllFrt => "AllFrt",
            UeRegime::NoFrt => "NoFrt",
            UeRegime::BothGap => "BothGap",
            UeRegime::BothContinuous => "BothContinuous",
        }
    }
}

impl std::fmt::Display for UeRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UeSolution {
    pub regime: UeRegime,
    pub c_star: f64,
    pub theta: f64,
    pub breakpoints: Breakpoints,
    pub profiles: ProfileSet,
    pub n_car: f64,
    pub n_frt: f64,
    /// Transit passengers arriving outside the car rush hour.
    pub n_frt_outside_rush: f64,
}

impl Equilibrium for UeSolution {
    fn cost(&self) -> f64 {
        self.c_star
    }
    fn theta(&self) -> f64 {
        self.theta
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
        self.n_car
    }
    fn frt_demand(&self) -> f64 {
        self.n_frt
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0) {
        return Err(Error::Domain(format!("theta must be > 0, got {theta}")));
    }
    Ok(())
}

/// lnθ + 1/θ − 1, the normalized car rush-hour demand.
fn car_shape(theta: f64) -> f64 {
    theta.ln() + 1.0 / theta - 1.0
}

/// Car commuters in a rush hour peaking at θ, without control.
pub fn demand_no_frt(theta: f64, m: &Model) -> Result<f64> {
    check_theta(theta)?;
    Ok(m.schedule_weight() * m.p.alpha * m.d.n_j_eff * car_shape(theta))
}

/// Transit passengers arriving outside the car rush, (n_F^c/2λT_f^F)(ΔF − αΔT_f)².
fn frt_outside_rush(m: &Model) -> f64 {
    let gap = m.d.delta_f - m.alpha_dtf();
    0.5 * m.frt_weight() * gap * gap
}

/// Transit passengers during the car rush when transit idles around t*.
fn frt_rush_gap(m: &Model) -> f64 {
    let (df, adt) = (m.d.delta_f, m.alpha_dtf());
    m.frt_rush_weight() * (df * (df / adt).ln() - (df - adt))
}

/// Transit passengers during the car rush when transit never idles.
fn frt_rush_continuous(theta: f64, m: &Model) -> f64 {
    let (df, adt) = (m.d.delta_f, m.alpha_dtf());
    m.frt_rush_weight() * (df * theta.ln() - adt * (theta - 1.0))
}

pub fn demand_both_gap(theta: f64, m: &Model) -> Result<f64> {
    check_theta(theta)?;
    if m.d.delta_f <= m.alpha_dtf() {
        return Err(Error::Domain(format!(
            "transit idle-window demand needs dF > alpha*dTf, got {} <= {}",
            m.d.delta_f,
            m.alpha_dtf()
        )));
    }
    Ok(demand_no_frt(theta, m)? + m.schedule_weight() * (frt_outside_rush(m) + frt_rush_gap(m)))
}

pub fn demand_both_continuous(theta: f64, m: &Model) -> Result<f64> {
    check_theta(theta)?;
    Ok(demand_no_frt(theta, m)?
        + m.schedule_weight() * (frt_outside_rush(m) + frt_rush_continuous(theta, m)))
}

/// Lower end of the transit-only cost range, αT_f^F + F_F.
pub fn all_frt_cost_floor(m: &Model) -> f64 {
    m.p.alpha * m.d.tf_frt + m.p.f_f
}

/// Transit-only demand at cost `c`: a triangular occupancy profile rising at
/// β/λ to t* and falling at γ/λ after, at free-flow transit speed.
pub fn demand_all_frt(c: f64, m: &Model) -> Result<f64> {
    let floor = all_frt_cost_floor(m);
    if c < floor {
        return Err(Error::Domain(format!("transit-only cost {c} below alpha*T_f^F + F_F = {floor}")));
    }
    let x = c - floor;
    Ok(0.5 * m.frt_weight() * m.schedule_weight() * x * x)
}

/// Inverts [`demand_all_frt`]; `None` when no transit runs in the CBD.
pub fn all_frt_cost(n: f64, m: &Model) -> Option<f64> {
    let k = 0.5 * m.frt_weight() * m.schedule_weight();
    (k > 0.0).then(|| all_frt_cost_floor(m) + (n / k).sqrt())
}

/// Demand function of `regime` as a function of θ.
pub fn demand(regime: UeRegime, theta: f64, m: &Model) -> Result<f64> {
    match regime {
        UeRegime::NoFrt => demand_no_frt(theta, m),
        UeRegime::BothGap => demand_both_gap(theta, m),
        UeRegime::BothContinuous => demand_both_continuous(theta, m),
        UeRegime::AllFrt => demand_all_frt(m.cost_from_theta(theta), m),
    }
}

/// Outcome of solving one regime's demand equation and checking its
/// consistency conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UeCandidate {
    pub regime: UeRegime,
    /// Root of the regime's equation, if it has one in the regime's domain.
    pub theta: Option<f64>,
    pub consistent: bool,
}

fn solve_candidate(regime: UeRegime, m: &Model) -> Result<UeCandidate> {
    let n = m.p.n_total;
    let r = m.frt_advantage();
    let f = |th: f64| demand(regime, th, m).unwrap_or(f64::NAN);
    let theta = match regime {
        UeRegime::NoFrt => solve_increasing(f, n, Domain::Unbounded(THETA_FLOOR), "NoFrt")?,
        UeRegime::AllFrt => all_frt_cost(n, m).map(|c| m.theta_from_cost(c)),
        UeRegime::BothContinuous => {
            if r > 1.0 {
                solve_increasing(f, n, Domain::Bounded(THETA_FLOOR, r), "BothContinuous")?
            } else {
                None
            }
        }
        UeRegime::BothGap => {
            if r > 1.0 {
                solve_increasing(f, n, Domain::Unbounded(THETA_FLOOR), "BothGap")?
            } else {
                None
            }
        }
    };
    let consistent = match (regime, theta) {
        (_, None) => false,
        (UeRegime::NoFrt, Some(th)) => r <= 1.0 && th > 1.0,
        (UeRegime::AllFrt, Some(th)) => th <= 1.0,
        (UeRegime::BothContinuous, Some(th)) => r > 1.0 && th > 1.0 && th <= r,
        (UeRegime::BothGap, Some(th)) => r > 1.0 && th > r,
    };
    Ok(UeCandidate { regime, theta, consistent })
}

/// Solves every regime's equation and reports which are consistent.
pub fn ue_candidates(m: &Model) -> Result<Vec<UeCandidate>> {
    UeRegime::ALL.iter().map(|&r| solve_candidate(r, m)).collect()
}

pub fn solve_ue(p: &ScenarioParams) -> Result<UeSolution> {
    solve_ue_model(&Model::new(p)?)
}

pub fn solve_ue_model(m: &Model) -> Result<UeSolution> {
    let candidates = ue_candidates(m)?;
    let chosen = candidates.iter().find(|c| c.consistent).ok_or_else(|| {
        Error::NoConsistentRegime(format!("no-control equilibrium, candidates {candidates:?}"))
    })?;
    let theta = chosen.theta.expect("consistent candidates carry a root");
    build_ue(m, chosen.regime, theta)
}

/// Builds the solution of `regime` at an arbitrary θ. The demand split is
/// the regime's closed form at that θ, so it sums to N only at the root.
pub fn build_ue(m: &Model, regime: UeRegime, theta: f64) -> Result<UeSolution> {
    let (p, d) = (&m.p, &m.d);
    let t_star = p.t_star;
    let (beta, gamma, lambda) = (p.beta, p.gamma, p.lambda);
    let (k_e, k_l) = (m.k_early(), m.k_late());
    let (df, adt) = (d.delta_f, m.alpha_dtf());
    let r = m.frt_advantage();
    let c_star = m.cost_from_theta(theta);
    let s = m.schedule_weight();

    let t_s_c = t_star - (theta - 1.0) / k_e;
    let t_e_c = t_star + (theta - 1.0) / k_l;
    let early = CarState::Rush { origin: t_s_c, rate: k_e };
    let late = CarState::Rush { origin: t_e_c, rate: -k_l };
    // λO_F = ΔF − αΔT_f·u while cars are in a rush.
    let rush_occ = Shape::RushLinear { a: df / lambda, d: -adt / lambda };

    let mut bp = Breakpoints::default();
    let timeline;
    let (n_car, n_frt, n_outside);
    match regime {
        UeRegime::AllFrt => {
            let x = c_star - all_frt_cost_floor(m);
            let t_s_f = t_star - x / beta;
            let t_e_f = t_star + x / gamma;
            bp.t_s_f = Some(t_s_f);
            bp.t_e_f = Some(t_e_f);
            let mut tl = Timeline::starting_at(t_s_f);
            tl.push(t_star, CarState::FreeFlow, Shape::line(t_s_f, 0.0, beta / lambda))
                .push(t_e_f, CarState::FreeFlow, Shape::line(t_e_f, 0.0, -gamma / lambda));
            timeline = tl;
            n_car = 0.0;
            n_frt = demand_all_frt(c_star, m)?;
            n_outside = n_frt;
        }
        UeRegime::NoFrt => {
            bp.t_s_c = Some(t_s_c);
            bp.t_e_c = Some(t_e_c);
            let mut tl = Timeline::starting_at(t_s_c);
            tl.push(t_star, early, Shape::Zero).push(t_e_c, late, Shape::Zero);
            timeline = tl;
            n_car = demand_no_frt(theta, m)?;
            n_frt = 0.0;
            n_outside = 0.0;
        }
        UeRegime::BothGap | UeRegime::BothContinuous => {
            let gap = df - adt;
            let t_s_f = t_s_c - gap / beta;
            let t_e_f = t_e_c + gap / gamma;
            bp.t_s_f = Some(t_s_f);
            bp.t_s_c = Some(t_s_c);
            bp.t_e_c = Some(t_e_c);
            bp.t_e_f = Some(t_e_f);
            let mut tl = Timeline::starting_at(t_s_f);
            tl.push(t_s_c, CarState::FreeFlow, Shape::line(t_s_f, 0.0, beta / lambda));
            n_car = demand_no_frt(theta, m)?;
            n_outside = s * frt_outside_rush(m);
            if regime == UeRegime::BothGap {
                let t_ee_f = t_s_c + (r - 1.0) / k_e;
                let t_sl_f = t_e_c - (r - 1.0) / k_l;
                bp.t_ee_f = Some(t_ee_f);
                bp.t_sl_f = Some(t_sl_f);
                tl.push(t_ee_f, early, rush_occ)
                    .push(t_star, early, Shape::Zero)
                    .push(t_sl_f, late, Shape::Zero)
                    .push(t_e_c, late, rush_occ);
                n_frt = n_outside + s * frt_rush_gap(m);
            } else {
                tl.push(t_star, early, rush_occ).push(t_e_c, late, rush_occ);
                n_frt = n_outside + s * frt_rush_continuous(theta, m);
            }
            tl.push(t_e_f, CarState::FreeFlow, Shape::line(t_e_f, 0.0, -gamma / lambda));
            timeline = tl;
        }
    }

    Ok(UeSolution {
        regime,
        c_star,
        theta,
        breakpoints: bp,
        profiles: timeline.build(m)?,
        n_car,
        n_frt,
        n_frt_outside_rush: n_outside,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(p: ScenarioParams) -> Model {
        Model::new(&p).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    /// Composite Simpson of G_c + G_F between consecutive profile knots.
    fn simpson_demand(sol: &UeSolution) -> f64 {
        let knots = sol.profiles.n_c.breakpoints();
        let g = |t: f64| sol.profiles.g_c.eval(t) + sol.profiles.g_frt.eval(t);
        let gl = |t: f64| sol.profiles.g_c.eval_left(t) + sol.profiles.g_frt.eval_left(t);
        let mut total = 0.0;
        for w in knots.windows(2) {
            let n = 4000;
            let h = (w[1] - w[0]) / n as f64;
            let mut acc = g(w[0]) + gl(w[1]);
            for k in 1..n {
                acc += if k % 2 == 1 { 4.0 } else { 2.0 } * g(w[0] + h * k as f64);
            }
            total += acc * h / 3.0;
        }
        total
    }

    #[test]
    fn demand_closed_forms_at_special_points() {
        let m = model(ScenarioParams::reference());
        let s = m.schedule_weight();
        assert_eq!(demand_no_frt(1.0, &m).unwrap(), 0.0);
        let e = std::f64::consts::E;
        let at_e = demand_no_frt(e, &m).unwrap();
        assert!(rel(at_e, s * m.p.alpha * m.d.n_j_eff / e) < 1e-14);

        let frt_only = s * (frt_outside_rush(&m) + frt_rush_gap(&m));
        assert!(rel(demand_both_gap(1.0, &m).unwrap(), frt_only) < 1e-14);
        assert!(rel(demand_both_continuous(1.0, &m).unwrap(), s * frt_outside_rush(&m)) < 1e-14);

        let r = m.frt_advantage();
        let g = demand_both_gap(r, &m).unwrap();
        let c = demand_both_continuous(r, &m).unwrap();
        assert!(rel(g, c) < 1e-12, "{g} vs {c}");

        assert!(demand_no_frt(0.0, &m).is_err());
        assert!(demand_both_continuous(-1.0, &m).is_err());
    }

    #[test]
    fn car_term_is_linear_in_jam_accumulation() {
        let p = ScenarioParams::reference();
        let m1 = model(p);
        let m2 = Model { d: crate::DerivedParams { n_j_eff: 2.0 * m1.d.n_j_eff, ..m1.d }, ..m1 };
        let a = demand_no_frt(3.3, &m1).unwrap();
        assert!(rel(demand_no_frt(3.3, &m2).unwrap(), 2.0 * a) < 1e-14);
    }

    #[test]
    fn gap_demand_rejects_unattractive_transit() {
        let m = model(ScenarioParams { f_f: 20.0, ..ScenarioParams::fixed_cost_study() });
        assert!(matches!(demand_both_gap(3.0, &m), Err(Error::Domain(_))));
    }

    #[test]
    fn all_frt_square_law() {
        let m = model(ScenarioParams::reference());
        let c0 = all_frt_cost_floor(&m);
        assert_eq!(demand_all_frt(c0, &m).unwrap(), 0.0);
        let x = 0.37;
        let one = demand_all_frt(c0 + x, &m).unwrap();
        let two = demand_all_frt(c0 + 2.0 * x, &m).unwrap();
        assert!(rel(two, 4.0 * one) < 1e-13);
        assert!(demand_all_frt(c0 - 0.1, &m).is_err());
        assert!(rel(all_frt_cost(one, &m).unwrap(), c0 + x) < 1e-14);
    }

    #[test]
    fn quadrature_matches_closed_forms_away_from_root() {
        let m = model(ScenarioParams::reference());
        for (regime, theta) in [
            (UeRegime::BothGap, 8.2),
            (UeRegime::BothContinuous, 1.5),
            (UeRegime::NoFrt, 4.0),
        ] {
            let sol = build_ue(&m, regime, theta).unwrap();
            let closed = demand(regime, theta, &m).unwrap();
            assert!(rel(sol.n_car + sol.n_frt, closed) < 1e-12);
            let quad = simpson_demand(&sol);
            assert!(rel(quad, closed) < 1e-9, "{regime}: {quad} vs {closed}");
        }
        let sol = build_ue(&m, UeRegime::AllFrt, 0.95).unwrap();
        assert!(rel(simpson_demand(&sol), sol.n_frt) < 1e-9);
    }

    #[test]
    fn reference_case_is_gap_regime() {
        let sol = solve_ue(&ScenarioParams::reference()).unwrap();
        assert_eq!(sol.regime, UeRegime::BothGap);
        let m = model(ScenarioParams::reference());
        assert!((m.d.delta_f - 3.0).abs() < 1e-14);
        assert!((m.alpha_dtf() - 1.773).abs() < 1e-3);
        assert!(sol.theta > m.frt_advantage());
        assert!(rel(sol.n_car + sol.n_frt, 300.0) < 1e-10);
        let peak = sol.profiles.n_c.eval(0.0);
        assert!(rel(peak, m.d.n_j_eff * (1.0 - 1.0 / sol.theta)) < 1e-12);
        assert!(peak > 47.0);
    }

    #[test]
    fn regimes_across_fixed_cost_study() {
        let base = ScenarioParams::fixed_cost_study();
        let ue = |ff: f64| solve_ue(&ScenarioParams { f_f: ff, ..base }).unwrap();
        assert_eq!(ue(20.0).regime, UeRegime::NoFrt);
        assert_eq!(ue(20.0).n_frt, 0.0);
        assert_eq!(ue(3.0).regime, UeRegime::BothGap);

        let all = solve_ue(&ScenarioParams { f_c: 1e6, ..ScenarioParams::reference() }).unwrap();
        assert_eq!(all.regime, UeRegime::AllFrt);
        assert_eq!(all.n_car, 0.0);
        assert!(all.theta <= 1.0);
    }

    #[test]
    fn exactly_one_candidate_on_a_grid() {
        let base = ScenarioParams::reference();
        for ff in [0.1, 0.5, 1.0, 2.0, 3.0, 4.9] {
            for n in [1.0, 10.0, 60.0, 300.0, 3000.0] {
                let p = ScenarioParams { f_f: ff, n_total: n, ..base };
                let cands = ue_candidates(&model(p)).unwrap();
                let k = cands.iter().filter(|c| c.consistent).count();
                assert_eq!(k, 1, "F_F={ff} N={n}: {cands:?}");
            }
        }
    }

    #[test]
    fn gap_breakpoints_satisfy_spacing() {
        let p = ScenarioParams::reference();
        let m = model(p);
        let sol = solve_ue(&p).unwrap();
        let b = sol.breakpoints;
        let gap = m.d.delta_f - m.alpha_dtf();
        let (s_f, s_c, e_c, e_f) = (b.t_s_f.unwrap(), b.t_s_c.unwrap(), b.t_e_c.unwrap(), b.t_e_f.unwrap());
        assert!(s_f < s_c && s_c < p.t_star && p.t_star < e_c && e_c < e_f);
        assert!(rel(s_c - s_f, gap / p.beta) < 1e-12);
        assert!(rel(e_f - e_c, gap / p.gamma) < 1e-12);
        let o = &sol.profiles.o_frt;
        assert!(o.eval(b.t_ee_f.unwrap()).abs() < 1e-12);
        assert!(o.eval_left(b.t_sl_f.unwrap()).abs() < 1e-12);
        // Occupancy is continuous at the car rush boundaries.
        assert!((o.eval_left(s_c) - o.eval(s_c)).abs() < 1e-12);
        assert!((o.eval_left(e_c) - o.eval(e_c)).abs() < 1e-12);
        for prof in sol.profiles.all() {
            assert_eq!(prof.support(), Some((s_f, e_f)));
        }
    }
}
