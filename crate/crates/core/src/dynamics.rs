//! Speed, exit-rate, travel-time and trip-cost primitives shared by the
//! solvers and the verifier. Travel time is attached to the arrival instant.

use crate::error::{Error, Result};
use crate::scenario::{DerivedParams, ScenarioParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModeTag {
    Car,
    Frt,
}

fn check_accumulation(n_c: f64, d: &DerivedParams) -> Result<()> {
    if !(0.0..=d.n_j_eff).contains(&n_c) {
        return Err(Error::Domain(format!(
            "car accumulation {n_c} outside [0, {}]",
            d.n_j_eff
        )));
    }
    Ok(())
}

/// Greenshields speed on the reduced network.
pub fn car_speed(n_c: f64, d: &DerivedParams) -> Result<f64> {
    check_accumulation(n_c, d)?;
    Ok(d.v_f_eff * (1.0 - n_c / d.n_j_eff))
}

pub fn frt_speed(v_c: f64, m: f64) -> f64 {
    m * v_c
}

/// Car trip completions per hour, n_c v_c(n_c) / L_c.
pub fn car_exit_rate(n_c: f64, d: &DerivedParams) -> Result<f64> {
    let l_c = d.tf_car * d.v_f_eff;
    Ok(n_c * car_speed(n_c, d)? / l_c)
}

/// Transit passenger completions per hour, O_F n_F^c v_F / L_F.
pub fn frt_passenger_arrival_rate(
    occupancy: f64,
    v_frt: f64,
    p: &ScenarioParams,
) -> f64 {
    occupancy * p.n_f_cbd * v_frt / p.l_f
}

/// CBD travel time of a commuter arriving when car accumulation is `n_c`.
pub fn travel_time(mode: ModeTag, n_c: f64, d: &DerivedParams) -> Result<f64> {
    check_accumulation(n_c, d)?;
    if n_c >= d.n_j_eff {
        return Err(Error::Domain("travel time is unbounded at jam accumulation".into()));
    }
    let slowdown = 1.0 / (1.0 - n_c / d.n_j_eff);
    Ok(match mode {
        ModeTag::Car => d.tf_car * slowdown,
        ModeTag::Frt => d.tf_frt * slowdown,
    })
}

/// Earliness/lateness penalty of arriving at `t_arr`.
pub fn schedule_delay_cost(t_arr: f64, p: &ScenarioParams) -> f64 {
    if t_arr <= p.t_star {
        p.beta * (p.t_star - t_arr)
    } else {
        p.gamma * (t_arr - p.t_star)
    }
}

/// Generalized cost of one trip arriving at `t_arr`.
///
/// `wait` is the boundary queueing time and must be zero for transit, which
/// bypasses the perimeter queue.
pub fn trip_cost(
    mode: ModeTag,
    t_arr: f64,
    travel_time: f64,
    occupancy: f64,
    wait: f64,
    p: &ScenarioParams,
) -> Result<f64> {
    if travel_time < 0.0 || occupancy < 0.0 || wait < 0.0 {
        return Err(Error::Domain(format!(
            "negative trip component: travel_time={travel_time} occupancy={occupancy} wait={wait}"
        )));
    }
    let schedule = schedule_delay_cost(t_arr, p);
    match mode {
        ModeTag::Car => Ok(p.alpha * (travel_time + wait) + schedule + p.f_c),
        ModeTag::Frt => {
            if wait > 0.0 {
                return Err(Error::Contract(format!(
                    "transit has boundary priority, wait must be 0 (got {wait})"
                )));
            }
            Ok(p.alpha * travel_time + schedule + p.lambda * occupancy + p.f_f)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::derive_params;
    use proptest::prelude::*;

    fn base() -> (ScenarioParams, DerivedParams) {
        let p = ScenarioParams::reference();
        (p, derive_params(&p).unwrap())
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn speeds() {
        let (_, d) = base();
        assert!(close(car_speed(0.0, &d).unwrap(), 18.8));
        assert_eq!(car_speed(94.0, &d).unwrap(), 0.0);
        assert!(close(car_speed(47.0, &d).unwrap(), 9.4));
        assert!(car_speed(94.5, &d).is_err());
        assert!(car_speed(-0.1, &d).is_err());

        assert!(close(frt_speed(18.8, 0.9), 16.92));
        assert_eq!(frt_speed(0.0, 0.9), 0.0);
        assert_eq!(frt_speed(10.0, 0.5), 5.0);
    }

    #[test]
    fn exit_rates() {
        let (p, d) = base();
        assert!(close(car_exit_rate(47.0, &d).unwrap(), 88.36));
        assert!(close(car_exit_rate(47.0, &d).unwrap(), d.i_p));
        assert_eq!(car_exit_rate(0.0, &d).unwrap(), 0.0);
        assert_eq!(car_exit_rate(94.0, &d).unwrap(), 0.0);

        let p6 = ScenarioParams { l_f: 6.0, ..p };
        assert_eq!(frt_passenger_arrival_rate(0.0, 16.92, &p6), 0.0);
        assert!(close(frt_passenger_arrival_rate(2.0, 16.92, &p6), 28.2));
        assert!(close(
            frt_passenger_arrival_rate(4.0, 16.92, &p6),
            2.0 * frt_passenger_arrival_rate(2.0, 16.92, &p6)
        ));
    }

    #[test]
    fn travel_times() {
        let (_, d) = base();
        assert!(close(travel_time(ModeTag::Car, 0.0, &d).unwrap(), d.tf_car));
        assert!(close(travel_time(ModeTag::Frt, 0.0, &d).unwrap(), d.tf_frt));
        assert!(close(travel_time(ModeTag::Car, 47.0, &d).unwrap(), 2.0 * d.tf_car));
        assert!(matches!(travel_time(ModeTag::Car, 94.0, &d), Err(Error::Domain(_))));
    }

    #[test]
    fn trip_costs() {
        let (p, d) = base();
        let at_star = trip_cost(ModeTag::Car, 0.0, d.tf_car, 0.0, 0.0, &p).unwrap();
        assert!((at_star - 10.319).abs() < 5e-4, "{at_star}");
        assert!(close(at_star, p.alpha * d.tf_car + p.f_c));

        let frt = trip_cost(ModeTag::Frt, 0.0, d.tf_frt, 0.0, 0.0, &p).unwrap();
        assert!(close(frt, p.alpha * d.tf_frt + 2.0));

        let early = trip_cost(ModeTag::Car, -1.0, d.tf_car, 0.0, 0.0, &p).unwrap();
        assert!(close(early, at_star + p.beta));

        assert!(matches!(
            trip_cost(ModeTag::Frt, 0.0, d.tf_frt, 0.0, 0.1, &p),
            Err(Error::Contract(_))
        ));
        assert!(trip_cost(ModeTag::Car, 0.0, -1.0, 0.0, 0.0, &p).is_err());
    }

    proptest! {
        #[test]
        fn exit_rate_symmetric(frac in 0.0f64..1.0) {
            let (_, d) = base();
            let n = frac * d.n_j_eff;
            let a = car_exit_rate(n, &d).unwrap();
            let b = car_exit_rate(d.n_j_eff - n, &d).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * d.i_p);
            prop_assert!(a <= d.i_p * (1.0 + 1e-12));
        }

        #[test]
        fn schedule_delay_shape(t in -5.0f64..5.0, dt in 1e-3f64..1.0) {
            let (p, _) = base();
            prop_assert_eq!(schedule_delay_cost(p.t_star, &p), 0.0);
            let s = schedule_delay_cost(t, &p);
            prop_assert!(s >= 0.0);
            let slope = (schedule_delay_cost(t + dt, &p) - s) / dt;
            if t + dt <= p.t_star {
                prop_assert!((slope + p.beta).abs() < 1e-9 / dt);
            } else if t >= p.t_star {
                prop_assert!((slope - p.gamma).abs() < 1e-9 / dt);
            }
        }

        #[test]
        fn cost_increasing_in_components(
            t in -2.0f64..2.0, tt in 0.0f64..2.0, o in 0.0f64..50.0, w in 0.0f64..2.0, bump in 1e-6f64..1.0
        ) {
            let (p, _) = base();
            let c = trip_cost(ModeTag::Car, t, tt, 0.0, w, &p).unwrap();
            prop_assert!(trip_cost(ModeTag::Car, t, tt + bump, 0.0, w, &p).unwrap() > c);
            prop_assert!(trip_cost(ModeTag::Car, t, tt, 0.0, w + bump, &p).unwrap() > c);
            let f = trip_cost(ModeTag::Frt, t, tt, o, 0.0, &p).unwrap();
            prop_assert!(trip_cost(ModeTag::Frt, t, tt + bump, o, 0.0, &p).unwrap() > f);
            prop_assert!(trip_cost(ModeTag::Frt, t, tt, o + bump, 0.0, &p).unwrap() > f);
        }
    }
}
