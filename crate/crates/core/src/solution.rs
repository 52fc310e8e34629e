//! What the verifier and the experiment harness need from any solved
//! equilibrium, with or without control.

use crate::timeline::ProfileSet;

/// Regime breakpoint times in absolute hours. A field is `None` when the
/// regime has no such event.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Breakpoints {
    /// Transit rush hour starts.
    pub t_s_f: Option<f64>,
    /// Car rush hour starts.
    pub t_s_c: Option<f64>,
    /// Transit stops being used early in the car rush.
    pub t_ee_f: Option<f64>,
    /// Perimeter control starts.
    pub t_s_p: Option<f64>,
    /// Transit resumes during control.
    pub t_sp_f: Option<f64>,
    /// Transit stops again during control.
    pub t_ep_f: Option<f64>,
    /// Perimeter control ends.
    pub t_e_p: Option<f64>,
    /// Transit resumes late in the car rush.
    pub t_sl_f: Option<f64>,
    /// Car rush hour ends.
    pub t_e_c: Option<f64>,
    /// Transit rush hour ends.
    pub t_e_f: Option<f64>,
}

impl Breakpoints {
    /// Present breakpoints in chronological order of definition.
    pub fn named(&self) -> Vec<(&'static str, f64)> {
        [
            ("t_s_F", self.t_s_f),
            ("t_s_c", self.t_s_c),
            ("t_ee_F", self.t_ee_f),
            ("t_s_p", self.t_s_p),
            ("t_sp_F", self.t_sp_f),
            ("t_ep_F", self.t_ep_f),
            ("t_e_p", self.t_e_p),
            ("t_sl_F", self.t_sl_f),
            ("t_e_c", self.t_e_c),
            ("t_e_F", self.t_e_f),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .collect()
    }
}

pub trait Equilibrium {
    /// Common generalized cost of every used (mode, arrival time).
    fn cost(&self) -> f64;
    fn theta(&self) -> f64;
    fn regime_label(&self) -> &'static str;
    fn breakpoints(&self) -> &Breakpoints;
    fn profiles(&self) -> &ProfileSet;
    fn car_demand(&self) -> f64;
    fn frt_demand(&self) -> f64;

    /// Transit share in percent.
    fn frt_share(&self) -> f64 {
        let total = self.car_demand() + self.frt_demand();
        if total > 0.0 {
            100.0 * self.frt_demand() / total
        } else {
            0.0
        }
    }
}
