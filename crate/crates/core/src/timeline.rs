//! Assembles the full profile set of an equilibrium from a list of phases.
//!
//! A phase fixes the car state (free flow, rush, or held at the critical
//! accumulation) and the transit occupancy piece; every other profile follows
//! from those two through the dynamics.

use crate::error::{Error, Result};
use crate::profile::{PiecewiseProfile, Segment};
use crate::scenario::Model;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CarState {
    /// No cars in the CBD.
    FreeFlow,
    /// Car cost flat at the equilibrium level, so 1/(1 − n_c/n_j') = u with
    /// `u = 1 + rate·(t − origin)`.
    Rush { origin: f64, rate: f64 },
    /// Accumulation held at n_j'/2 by the perimeter controller.
    Control,
}

/// Shape of the occupancy or queue profile within one phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Zero,
    /// Straight line through `(anchor, value)`.
    Line { anchor: f64, value: f64, slope: f64 },
    /// `a + d·u` on the car rush clock; only valid in a rush phase.
    RushLinear { a: f64, d: f64 },
}

impl Shape {
    pub fn line(anchor: f64, value: f64, slope: f64) -> Shape {
        Shape::Line { anchor, value, slope }
    }

    fn to_segment(self, left: f64, car: CarState) -> Result<Segment> {
        Ok(match (self, car) {
            (Shape::Zero, _) => Segment::ZERO,
            (Shape::Line { anchor, value, slope }, _) => {
                Segment::Linear { start: value + slope * (left - anchor), slope }
            }
            (Shape::RushLinear { a, d }, CarState::Rush { origin, rate }) => {
                Segment::Hyperbolic { origin, rate, a, b: 0.0, c: 0.0, d }
            }
            (Shape::RushLinear { .. }, other) => {
                return Err(Error::Contract(format!("rush-clock shape used in {other:?} phase")))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phase {
    pub end: f64,
    pub car: CarState,
    /// Average passengers per transit vehicle.
    pub occupancy: Shape,
    /// Boundary queue (veh).
    pub queue: Shape,
}

/// All time profiles of one equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSet {
    pub n_c: PiecewiseProfile,
    pub v_c: PiecewiseProfile,
    pub v_frt: PiecewiseProfile,
    pub o_frt: PiecewiseProfile,
    /// Car arrival (trip completion) rate, veh/h.
    pub g_c: PiecewiseProfile,
    /// Transit passenger arrival rate, pax/h.
    pub g_frt: PiecewiseProfile,
    pub queue: PiecewiseProfile,
    /// Boundary waiting time q/I_p, hours.
    pub wait: PiecewiseProfile,
}

impl ProfileSet {
    pub fn support(&self) -> Option<(f64, f64)> {
        self.n_c.support()
    }

    pub fn all(&self) -> [&PiecewiseProfile; 8] {
        [&self.n_c, &self.v_c, &self.v_frt, &self.o_frt, &self.g_c, &self.g_frt, &self.queue, &self.wait]
    }
}

/// Builds phases left to right, dropping any that would have zero length.
#[derive(Debug, Clone)]
pub struct Timeline {
    start: f64,
    cursor: f64,
    phases: Vec<Phase>,
}

impl Timeline {
    pub fn starting_at(start: f64) -> Self {
        Timeline { start, cursor: start, phases: Vec::new() }
    }

    pub fn push(&mut self, end: f64, car: CarState, occupancy: Shape) -> &mut Self {
        self.push_queued(end, car, occupancy, Shape::Zero)
    }

    pub fn push_queued(&mut self, end: f64, car: CarState, occupancy: Shape, queue: Shape) -> &mut Self {
        if end > self.cursor {
            self.phases.push(Phase { end, car, occupancy, queue });
            self.cursor = end;
        }
        self
    }

    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    pub fn build(&self, model: &Model) -> Result<ProfileSet> {
        let (p, d) = (&model.p, &model.d);
        let n_j = d.n_j_eff;
        let v_f = d.v_f_eff;
        let exit_scale = n_j * v_f / p.l_c;
        // Passenger arrivals per unit occupancy at free-flow transit speed.
        let frt_scale = p.n_f_cbd / d.tf_frt;

        let mut knots = vec![self.start];
        let mut n_c = Vec::new();
        let mut v_c = Vec::new();
        let mut v_frt = Vec::new();
        let mut o_frt = Vec::new();
        let mut g_c = Vec::new();
        let mut g_frt = Vec::new();
        let mut queue = Vec::new();
        let mut wait = Vec::new();

        for ph in &self.phases {
            let left = *knots.last().expect("start knot");
            knots.push(ph.end);
            let occ = ph.occupancy.to_segment(left, ph.car)?;
            let q = ph.queue.to_segment(left, ph.car)?;
            match ph.car {
                CarState::FreeFlow => {
                    n_c.push(Segment::ZERO);
                    v_c.push(Segment::Constant(v_f));
                    g_c.push(Segment::ZERO);
                    g_frt.push(occ.scaled(frt_scale));
                }
                CarState::Control => {
                    n_c.push(Segment::Constant(d.n_crit));
                    v_c.push(Segment::Constant(0.5 * v_f));
                    g_c.push(Segment::Constant(d.i_p));
                    g_frt.push(occ.scaled(0.5 * frt_scale));
                }
                CarState::Rush { origin, rate } => {
                    let hyp = |a, b, c| Segment::Hyperbolic { origin, rate, a, b, c, d: 0.0 };
                    n_c.push(hyp(n_j, -n_j, 0.0));
                    v_c.push(hyp(0.0, v_f, 0.0));
                    g_c.push(hyp(0.0, exit_scale, -exit_scale));
                    // O_F·n_F^c·v_F/L_F with v_F = m·v_f'/u.
                    g_frt.push(match occ {
                        Segment::Hyperbolic { a, d, .. } => {
                            Segment::Hyperbolic { origin, rate, a: frt_scale * d, b: frt_scale * a, c: 0.0, d: 0.0 }
                        }
                        _ => Segment::ZERO,
                    });
                }
            }
            v_frt.push(v_c.last().expect("just pushed").scaled(p.m));
            o_frt.push(occ);
            queue.push(q);
            wait.push(q.scaled(1.0 / d.i_p));
        }

        if self.phases.is_empty() {
            knots.clear();
        }
        let mk = |segs: Vec<Segment>, outside: f64| PiecewiseProfile::new(knots.clone(), segs, outside);
        Ok(ProfileSet {
            n_c: mk(n_c, 0.0)?,
            v_c: mk(v_c, v_f)?,
            v_frt: mk(v_frt, p.m * v_f)?,
            o_frt: mk(o_frt, 0.0)?,
            g_c: mk(g_c, 0.0)?,
            g_frt: mk(g_frt, 0.0)?,
            queue: mk(queue, 0.0)?,
            wait: mk(wait, 0.0)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{car_exit_rate, car_speed, frt_passenger_arrival_rate};
    use crate::scenario::ScenarioParams;

    #[test]
    fn rush_profiles_agree_with_dynamics() {
        let model = Model::new(&ScenarioParams::reference()).unwrap();
        let (p, d) = (&model.p, &model.d);
        let origin = -1.0;
        let rate = 1.7;
        let occ = Shape::RushLinear { a: 6.0, d: -1.5 };
        let mut tl = Timeline::starting_at(-2.0);
        tl.push(origin, CarState::FreeFlow, Shape::line(-2.0, 0.0, 4.5))
            .push(0.5, CarState::Rush { origin, rate }, occ)
            .push(1.0, CarState::Control, Shape::line(0.5, 1.0, 2.0));
        let set = tl.build(&model).unwrap();

        for &t in &[-1.5, -0.7, 0.0, 0.3, 0.7, 0.99] {
            let n = set.n_c.eval(t);
            let v = car_speed(n, d).unwrap();
            assert!((set.v_c.eval(t) - v).abs() < 1e-12);
            assert!((set.g_c.eval(t) - car_exit_rate(n, d).unwrap()).abs() < 1e-9);
            assert!((set.v_frt.eval(t) - p.m * v).abs() < 1e-12);
            let g = frt_passenger_arrival_rate(set.o_frt.eval(t), set.v_frt.eval(t), p);
            assert!((set.g_frt.eval(t) - g).abs() < 1e-9, "t={t}");
        }
        assert_eq!(set.v_c.eval(5.0), d.v_f_eff);
        assert_eq!(set.n_c.eval(-3.0), 0.0);
    }

    #[test]
    fn zero_length_phases_are_dropped() {
        let model = Model::new(&ScenarioParams::reference()).unwrap();
        let mut tl = Timeline::starting_at(0.0);
        tl.push(1.0, CarState::FreeFlow, Shape::Zero)
            .push(1.0, CarState::Control, Shape::Zero)
            .push(2.0, CarState::FreeFlow, Shape::line(0.0, 1.0, 1.0));
        assert_eq!(tl.phases().len(), 2);
        let set = tl.build(&model).unwrap();
        assert_eq!(set.n_c.breakpoints(), &[0.0, 1.0, 2.0]);
        // Lines are anchored in absolute time, not at the phase start.
        assert_eq!(set.o_frt.eval(1.5), 2.5);
    }

    #[test]
    fn mismatched_rush_occupancy_rejected() {
        let model = Model::new(&ScenarioParams::reference()).unwrap();
        let mut tl = Timeline::starting_at(0.0);
        tl.push(1.0, CarState::Control, Shape::RushLinear { a: 1.0, d: 1.0 });
        assert!(matches!(tl.build(&model), Err(Error::Contract(_))));
    }
}
