//! Numeric verifier for solved equilibria.
//!
//! Recomputes trip costs from the accumulation profile through the dynamics
//! primitives, integrates arrival rates, and replays the transit occupancy
//! ODE forward. Nothing here reuses the closed-form demand equations.

use std::fmt::Write as _;

use crate::dynamics::{travel_time, trip_cost, ModeTag};
use crate::format::num;
use crate::profile::{knot_aligned_grid, merged_knots, PiecewiseProfile};
use crate::scenario::Model;
use crate::solution::Equilibrium;
use crate::timeline::ProfileSet;

pub const DEFAULT_STEP: f64 = 1e-4;

/// Pass/fail tolerances. Relative ones scale with c*, N or max O_F.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub cost_rel: f64,
    pub slack_rel: f64,
    pub conservation_rel: f64,
    pub ode_rel: f64,
    /// Lowest acceptable implied departure rate (per hour).
    pub departure_abs: f64,
    /// Lowest acceptable n_c, O_F or q relative to the profile's maximum.
    pub state_rel: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            cost_rel: 1e-8,
            slack_rel: 1e-8,
            conservation_rel: 1e-6,
            ode_rel: 1e-6,
            departure_abs: 1e-9,
            state_rel: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerificationReport {
    pub c_star: f64,
    pub n_total: f64,
    /// max |C_c − c*| over arrival times with cars in the CBD.
    pub max_cost_residual_car: f64,
    /// max |C_F − c*| over arrival times with passengers on board.
    pub max_cost_residual_frt: f64,
    /// min (C − c*) over unused (mode, time) pairs.
    pub min_slack: f64,
    /// |∫(G_c + G_F) − N|.
    pub conservation_error: f64,
    /// min of the two implied rates below.
    pub min_implied_departure_rate: f64,
    /// min over t of n_F·dO_F/dt + G_F.
    pub min_frt_departure_rate: f64,
    /// min over t of dn_c/dt + G_c + dq/dt.
    pub min_car_boundary_arrival: f64,
    /// sup |O_F replayed − O_F closed form|.
    pub ode_replay_error: f64,
    pub max_occupancy: f64,
    /// min of n_c, O_F, q, each divided by max(1, its own maximum).
    pub min_state: f64,
    /// Diagnostic: min of G/(1 − dT/dt), the departure rate a FIFO reading
    /// of the arrival-time travel times implies.
    pub min_fifo_departure_rate: f64,
    /// Diagnostic: max |T_exact − T_approx| (h) between the trip-length
    /// integral of speed and the arrival-instant travel time.
    pub travel_time_gap: f64,
}

impl VerificationReport {
    /// Each equilibrium check as (name, residual / allowance); ≤ 1 passes.
    pub fn normalized_residuals(&self, th: &Thresholds) -> Vec<(&'static str, f64)> {
        let cost_scale = th.cost_rel * self.c_star.abs().max(1e-300);
        let occ_scale = th.ode_rel * self.max_occupancy.max(1e-300);
        vec![
            ("cost_car", self.max_cost_residual_car / cost_scale),
            ("cost_frt", self.max_cost_residual_frt / cost_scale),
            ("slack", (-self.min_slack).max(0.0) / (th.slack_rel * self.c_star.abs().max(1e-300))),
            ("conservation", self.conservation_error / (th.conservation_rel * self.n_total)),
            (
                "ode_replay",
                if self.max_occupancy > 0.0 { self.ode_replay_error / occ_scale } else { 0.0 },
            ),
            ("state", (-self.min_state).max(0.0) / th.state_rel),
        ]
    }

    /// Largest normalized residual over the equilibrium checks.
    pub fn max_normalized_residual(&self, th: &Thresholds) -> f64 {
        self.normalized_residuals(th).into_iter().map(|(_, v)| v).fold(0.0, f64::max)
    }

    /// Cost flatness, slack, conservation, ODE replay and nonnegativity.
    pub fn passes_equilibrium(&self, th: &Thresholds) -> bool {
        self.normalized_residuals(th).iter().all(|(_, v)| *v <= 1.0)
    }

    pub fn passes_departure_rates(&self, th: &Thresholds) -> bool {
        self.min_implied_departure_rate >= -th.departure_abs
    }

    fn fields(&self) -> [(&'static str, f64); 15] {
        [
            ("c_star", self.c_star),
            ("n_total", self.n_total),
            ("max_cost_residual_car", self.max_cost_residual_car),
            ("max_cost_residual_frt", self.max_cost_residual_frt),
            ("min_slack", self.min_slack),
            ("conservation_error", self.conservation_error),
            ("min_implied_departure_rate", self.min_implied_departure_rate),
            ("min_frt_departure_rate", self.min_frt_departure_rate),
            ("min_car_boundary_arrival", self.min_car_boundary_arrival),
            ("ode_replay_error", self.ode_replay_error),
            ("max_occupancy", self.max_occupancy),
            ("min_state", self.min_state),
            ("min_fifo_departure_rate", self.min_fifo_departure_rate),
            ("travel_time_gap", self.travel_time_gap),
            ("max_normalized_residual", self.max_normalized_residual(&Thresholds::default())),
        ]
    }

    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.fields() {
            let _ = writeln!(out, "{k}={}", num(v));
        }
        out
    }

    pub fn csv_header() -> String {
        let dummy = VerificationReport {
            c_star: 0.0,
            n_total: 0.0,
            max_cost_residual_car: 0.0,
            max_cost_residual_frt: 0.0,
            min_slack: 0.0,
            conservation_error: 0.0,
            min_implied_departure_rate: 0.0,
            min_frt_departure_rate: 0.0,
            min_car_boundary_arrival: 0.0,
            ode_replay_error: 0.0,
            max_occupancy: 0.0,
            min_state: 0.0,
            min_fifo_departure_rate: 0.0,
            travel_time_gap: 0.0,
        };
        dummy.fields().iter().map(|(k, _)| *k).collect::<Vec<_>>().join(",")
    }

    pub fn to_csv_row(&self) -> String {
        self.fields().iter().map(|(_, v)| num(*v)).collect::<Vec<_>>().join(",")
    }
}

/// Knot-aligned trapezoid integral of G_c + G_F over their joint support.
pub fn quadrature_demand(g_c: &PiecewiseProfile, g_frt: &PiecewiseProfile, step: f64) -> f64 {
    let knots = merged_knots(&[g_c, g_frt]);
    let (Some(&lo), Some(&hi)) = (knots.first(), knots.last()) else {
        return 0.0;
    };
    let f = |t: f64| g_c.eval(t) + g_frt.eval(t);
    let fl = |t: f64| g_c.eval_left(t) + g_frt.eval_left(t);
    let grid = knot_aligned_grid(&knots, lo, hi, step);
    grid.windows(2).map(|w| 0.5 * (w[1] - w[0]) * (f(w[0]) + fl(w[1]))).sum()
}

/// Forward-integrates the transit occupancy balance
/// n_F dO_F/dt = d_F(t) − O_F n_F^c v_F(t)/L_F from O_F = 0 at the start of
/// the profile, with d_F taken from the closed-form profile. Returns the sup
/// gap to the closed form and the minimum of d_F on the grid.
pub fn replay_frt_ode(profiles: &ProfileSet, m: &Model, step: f64) -> (f64, f64) {
    let (p, o, v) = (&m.p, &profiles.o_frt, &profiles.v_frt);
    let Some((lo, hi)) = o.support() else {
        return (0.0, 0.0);
    };
    let n_f = p.n_f_total;
    let alight = |v_f: f64| p.n_f_cbd * v_f / p.l_f;
    // `left` selects one-sided limits at the right end of a step.
    let departures = |t: f64, left: bool| {
        if left {
            n_f * o.derivative_left(t) + o.eval_left(t) * alight(v.eval_left(t))
        } else {
            n_f * o.derivative(t) + o.eval(t) * alight(v.eval(t))
        }
    };
    let rhs = |t: f64, y: f64, left: bool| {
        let vf = if left { v.eval_left(t) } else { v.eval(t) };
        (departures(t, left) - y * alight(vf)) / n_f
    };

    let grid = knot_aligned_grid(o.breakpoints(), lo, hi, step);
    let mut y = 0.0;
    let mut err: f64 = (y - o.eval(lo)).abs();
    let mut min_d = departures(lo, false);
    for w in grid.windows(2) {
        let (t, h) = (w[0], w[1] - w[0]);
        let k1 = rhs(t, y, false);
        let k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1, false);
        let k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2, false);
        let k4 = rhs(t + h, y + h * k3, true);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        err = err.max((y - o.eval_left(t + h)).abs());
        min_d = min_d.min(departures(t + h, true)).min(departures(t, false));
    }
    (err, min_d)
}

/// Departure time of a trip of `length` arriving at `t` at speed profile `v`.
fn exact_travel_time(v: &PiecewiseProfile, t: f64, length: f64, guess: f64) -> f64 {
    let covered = |tt: f64| v.integral(t - tt, t);
    let mut hi = guess.max(1e-9);
    for _ in 0..200 {
        if covered(hi) >= length {
            break;
        }
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if covered(mid) < length {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Checks the equilibrium conditions of `sol` on a grid of spacing `step`.
pub fn verify(sol: &dyn Equilibrium, m: &Model, step: f64) -> VerificationReport {
    let (p, d) = (&m.p, &m.d);
    let pr = sol.profiles();
    let c_star = sol.cost();

    let mut rep = VerificationReport {
        c_star,
        n_total: p.n_total,
        max_cost_residual_car: 0.0,
        max_cost_residual_frt: 0.0,
        min_slack: f64::INFINITY,
        conservation_error: (quadrature_demand(&pr.g_c, &pr.g_frt, step) - p.n_total).abs(),
        min_implied_departure_rate: 0.0,
        min_frt_departure_rate: 0.0,
        min_car_boundary_arrival: f64::INFINITY,
        ode_replay_error: 0.0,
        max_occupancy: 0.0,
        min_state: f64::INFINITY,
        min_fifo_departure_rate: f64::INFINITY,
        travel_time_gap: 0.0,
    };

    let Some((lo, hi)) = pr.support() else {
        rep.min_slack = 0.0;
        rep.min_car_boundary_arrival = 0.0;
        rep.min_state = 0.0;
        rep.min_fifo_departure_rate = 0.0;
        return rep;
    };
    let pad = 0.25 * (hi - lo) + 0.1;
    let knots = pr.n_c.breakpoints();
    let grid = knot_aligned_grid(knots, lo - pad, hi + pad, step);

    let scale = |prof: &PiecewiseProfile| {
        grid.iter().map(|&t| prof.eval(t).abs()).fold(1.0, f64::max)
    };
    let state_scales = [scale(&pr.n_c), scale(&pr.o_frt), scale(&pr.queue)];
    rep.max_occupancy = grid.iter().map(|&t| pr.o_frt.eval(t)).fold(0.0, f64::max);

    for &t in &grid {
        for left in [false, true] {
            let at = |prof: &PiecewiseProfile| if left { prof.eval_left(t) } else { prof.eval(t) };
            let slope = |prof: &PiecewiseProfile| {
                if left {
                    prof.derivative_left(t)
                } else {
                    prof.derivative(t)
                }
            };
            let (n_c, o_f, q, wait) = (at(&pr.n_c), at(&pr.o_frt), at(&pr.queue), at(&pr.wait));
            for (v, s) in [n_c, o_f, q].into_iter().zip(state_scales) {
                rep.min_state = rep.min_state.min(v / s);
            }

            let tt_c = travel_time(ModeTag::Car, n_c.clamp(0.0, d.n_j_eff), d).unwrap_or(f64::INFINITY);
            let tt_f = travel_time(ModeTag::Frt, n_c.clamp(0.0, d.n_j_eff), d).unwrap_or(f64::INFINITY);
            let car = trip_cost(ModeTag::Car, t, tt_c, 0.0, wait.max(0.0), p).unwrap_or(f64::INFINITY);
            let frt = trip_cost(ModeTag::Frt, t, tt_f, o_f.max(0.0), 0.0, p).unwrap_or(f64::INFINITY);

            if n_c > 0.0 {
                rep.max_cost_residual_car = rep.max_cost_residual_car.max((car - c_star).abs());
            } else {
                rep.min_slack = rep.min_slack.min(car - c_star);
            }
            if o_f > 0.0 {
                rep.max_cost_residual_frt = rep.max_cost_residual_frt.max((frt - c_star).abs());
            } else {
                rep.min_slack = rep.min_slack.min(frt - c_star);
            }

            if t < lo || t > hi {
                continue;
            }
            let boundary = slope(&pr.n_c) + at(&pr.g_c) + slope(&pr.queue);
            rep.min_car_boundary_arrival = rep.min_car_boundary_arrival.min(boundary);

            // dT/dt for a trip whose travel time is read at arrival.
            let jam_share = 1.0 - n_c / d.n_j_eff;
            let dn = slope(&pr.n_c) / d.n_j_eff / (jam_share * jam_share);
            let g_c = at(&pr.g_c);
            if g_c > 0.0 {
                let dt = d.tf_car * dn + slope(&pr.wait);
                rep.min_fifo_departure_rate = rep.min_fifo_departure_rate.min(g_c / (1.0 - dt));
            }
            let g_f = at(&pr.g_frt);
            if g_f > 0.0 {
                let dt = d.tf_frt * dn;
                rep.min_fifo_departure_rate = rep.min_fifo_departure_rate.min(g_f / (1.0 - dt));
            }
        }
    }

    let (ode_err, min_df) = replay_frt_ode(pr, m, step);
    rep.ode_replay_error = ode_err;
    rep.min_frt_departure_rate = min_df;
    if !rep.min_car_boundary_arrival.is_finite() {
        rep.min_car_boundary_arrival = 0.0;
    }
    if !rep.min_fifo_departure_rate.is_finite() {
        rep.min_fifo_departure_rate = 0.0;
    }
    rep.min_implied_departure_rate = rep.min_frt_departure_rate.min(rep.min_car_boundary_arrival);

    // Trip-length integral versus the arrival-instant approximation.
    let samples = 200;
    for k in 0..=samples {
        let t = lo + (hi - lo) * k as f64 / samples as f64;
        let n_c = pr.n_c.eval(t);
        if n_c > 0.0 {
            let approx = p.l_c / pr.v_c.eval(t);
            let exact = exact_travel_time(&pr.v_c, t, p.l_c, approx);
            rep.travel_time_gap = rep.travel_time_gap.max((exact - approx).abs());
        }
        if pr.o_frt.eval(t) > 0.0 {
            let approx = p.l_f / pr.v_frt.eval(t);
            let exact = exact_travel_time(&pr.v_frt, t, p.l_f, approx);
            rep.travel_time_gap = rep.travel_time_gap.max((exact - approx).abs());
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium_pc::solve_pc_model;
    use crate::equilibrium_ue::{build_ue, solve_ue_model};
    use crate::profile::Segment;
    use crate::scenario::ScenarioParams;

    fn model(p: ScenarioParams) -> Model {
        Model::new(&p).unwrap()
    }

    #[test]
    fn reference_solutions_pass() {
        let th = Thresholds::default();
        for ff in [1.0, 2.0] {
            let m = model(ScenarioParams { f_f: ff, ..ScenarioParams::reference() });
            let ue = solve_ue_model(&m).unwrap();
            let rep = verify(&ue, &m, DEFAULT_STEP);
            assert!(rep.passes_equilibrium(&th), "UE F_F={ff}\n{}", rep.to_key_value());
            assert!(rep.conservation_error <= 1e-4);
            let pc = solve_pc_model(&m).unwrap();
            let rep = verify(&pc, &m, DEFAULT_STEP);
            assert!(rep.passes_equilibrium(&th), "PC F_F={ff}\n{}", rep.to_key_value());
        }
    }

    #[test]
    fn corrupted_cost_is_detected() {
        let m = model(ScenarioParams::reference());
        let mut ue = solve_ue_model(&m).unwrap();
        ue.c_star *= 1.01;
        let rep = verify(&ue, &m, DEFAULT_STEP);
        assert!(rep.max_cost_residual_car > 1e-3 * ue.c_star);
        assert!(!rep.passes_equilibrium(&Thresholds::default()));
    }

    #[test]
    fn off_root_profile_fails_conservation() {
        let m = model(ScenarioParams::reference());
        let ue = solve_ue_model(&m).unwrap();
        let off = build_ue(&m, ue.regime, ue.theta * 1.01).unwrap();
        let rep = verify(&off, &m, DEFAULT_STEP);
        assert!(rep.conservation_error > 1e-3 * m.p.n_total);
    }

    #[test]
    fn transit_only_has_no_car_residual() {
        let m = model(ScenarioParams { f_c: 1e6, ..ScenarioParams::reference() });
        let ue = solve_ue_model(&m).unwrap();
        let rep = verify(&ue, &m, DEFAULT_STEP);
        assert_eq!(rep.max_cost_residual_car, 0.0);
        assert!(rep.min_slack >= 0.0);
        assert!(rep.passes_equilibrium(&Thresholds::default()), "{}", rep.to_key_value());
        assert!(rep.ode_replay_error <= 1e-4 * rep.max_occupancy);
    }

    #[test]
    fn quadrature_basics() {
        let z = PiecewiseProfile::constant(0.0);
        assert_eq!(quadrature_demand(&z, &z, 1e-3), 0.0);

        // Trapezoid error shrinks about fourfold when the step halves.
        let curved = PiecewiseProfile::new(
            vec![0.0, 1.0],
            vec![Segment::Hyperbolic { origin: 0.0, rate: 3.0, a: 0.0, b: 1.0, c: 0.0, d: 0.0 }],
            0.0,
        )
        .unwrap();
        let exact = curved.integral(0.0, 1.0);
        let e1 = (quadrature_demand(&curved, &z, 0.02) - exact).abs();
        let e2 = (quadrature_demand(&curved, &z, 0.01) - exact).abs();
        assert!((e1 / e2 - 4.0).abs() < 0.1, "{}", e1 / e2);
    }

    #[test]
    fn ode_replay_is_tight_for_full_regime() {
        let m = model(ScenarioParams { f_f: 1.0, ..ScenarioParams::reference() });
        let pc = solve_pc_model(&m).unwrap();
        let (err, _) = replay_frt_ode(&pc.profiles, &m, DEFAULT_STEP);
        let max_o = pc.profiles.o_frt.breakpoints().iter().map(|&t| pc.profiles.o_frt.eval(t)).fold(0.0, f64::max);
        assert!(err <= 1e-6 * max_o, "{err}");
    }

    #[test]
    fn tiny_demand_gives_tiny_profiles() {
        let m = model(ScenarioParams { n_total: 1e-9, ..ScenarioParams::reference() });
        let ue = solve_ue_model(&m).unwrap();
        let rep = verify(&ue, &m, DEFAULT_STEP);
        assert!(rep.max_occupancy < 1e-3);
        assert!(rep.ode_replay_error < 1e-9);
    }

    #[test]
    fn report_serializes() {
        let m = model(ScenarioParams::reference());
        let rep = verify(&solve_ue_model(&m).unwrap(), &m, 1e-3);
        let kv = rep.to_key_value();
        assert!(kv.lines().any(|l| l.starts_with("conservation_error=")));
        assert_eq!(
            VerificationReport::csv_header().split(',').count(),
            rep.to_csv_row().split(',').count()
        );
    }
}
