//! Exogenous model constants, their validation, and the reduced-network
//! constants every equilibrium equation is written in.
//!
//! Units are hours, miles, dollars, vehicles and passengers throughout.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Exogenous constants of one commute scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioParams {
    /// Free-flow car speed (mile/h).
    pub v_f: f64,
    /// Passenger-car units of one transit vehicle.
    pub eta: f64,
    /// Total transit fleet.
    pub n_f_total: f64,
    /// Transit vehicles inside the CBD at any time.
    pub n_f_cbd: f64,
    /// Jam accumulation (veh).
    pub n_j: f64,
    /// Transit speed as a fraction of car speed, in (0, 1).
    pub m: f64,
    /// Value of travel time ($/h).
    pub alpha: f64,
    /// Earliness penalty ($/h).
    pub beta: f64,
    /// Lateness penalty ($/h).
    pub gamma: f64,
    /// Marginal discomfort per passenger on board ($/pax).
    pub lambda: f64,
    /// Combined fixed cost of a car trip ($).
    pub f_c: f64,
    /// Combined fixed cost of a transit trip ($).
    pub f_f: f64,
    /// Average CBD trip length by car (mile).
    pub l_c: f64,
    /// Average CBD trip length by transit (mile).
    pub l_f: f64,
    /// Number of commuters.
    pub n_total: f64,
    /// Desired arrival time (h).
    pub t_star: f64,
}

/// Field names accepted by scenario files, sweeps and regime maps.
pub const FIELD_NAMES: [&str; 16] = [
    "v_f", "eta", "n_f_total", "n_f_cbd", "n_j", "m", "alpha", "beta", "gamma", "lambda", "f_c",
    "f_f", "l_c", "l_f", "n_total", "t_star",
];

impl ScenarioParams {
    /// Base configuration of the numerical study (the Case I fixed cost, F_F = 2).
    ///
    /// The study does not report a total fleet; 25 vehicles are assumed so that
    /// every CBD fleet size of the sensitivity sweep stays feasible.
    pub fn reference() -> Self {
        ScenarioParams {
            v_f: 20.0,
            eta: 1.2,
            n_f_total: 25.0,
            n_f_cbd: 5.0,
            n_j: 100.0,
            m: 0.9,
            alpha: 20.0,
            beta: 10.0,
            gamma: 40.0,
            lambda: 0.4,
            f_c: 5.0,
            f_f: 2.0,
            l_c: 5.0,
            l_f: 6.0,
            n_total: 300.0,
            t_star: 0.0,
        }
    }

    /// Configuration of the transit fixed-cost sensitivity study.
    pub fn fixed_cost_study() -> Self {
        ScenarioParams {
            l_f: 7.0,
            f_c: 11.0,
            n_total: 200.0,
            ..Self::reference()
        }
    }

    pub fn get(&self, key: &str) -> Result<f64> {
        let mut copy = *self;
        copy.field_mut(key).map(|v| *v)
    }

    /// Returns a copy with one field replaced. Does not validate the result.
    pub fn with_field(mut self, key: &str, value: f64) -> Result<Self> {
        *self.field_mut(key)? = value;
        Ok(self)
    }

    fn field_mut(&mut self, key: &str) -> Result<&mut f64> {
        Ok(match key {
            "v_f" => &mut self.v_f,
            "eta" => &mut self.eta,
            "n_f_total" => &mut self.n_f_total,
            "n_f_cbd" => &mut self.n_f_cbd,
            "n_j" => &mut self.n_j,
            "m" => &mut self.m,
            "alpha" => &mut self.alpha,
            "beta" => &mut self.beta,
            "gamma" => &mut self.gamma,
            "lambda" => &mut self.lambda,
            "f_c" => &mut self.f_c,
            "f_f" => &mut self.f_f,
            "l_c" => &mut self.l_c,
            "l_f" => &mut self.l_f,
            "n_total" => &mut self.n_total,
            "t_star" => &mut self.t_star,
            other => return Err(Error::UnknownKey(other.to_string())),
        })
    }

    /// Checks every invariant, naming the first one violated.
    pub fn validate(&self) -> Result<()> {
        for key in FIELD_NAMES {
            let v = self.get(key)?;
            if !v.is_finite() {
                return Err(Error::InvalidScenario(format!("{key} must be finite, got {v}")));
            }
        }
        let positive = [
            ("v_f", self.v_f),
            ("eta", self.eta),
            ("n_f_total", self.n_f_total),
            ("n_j", self.n_j),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("lambda", self.lambda),
            ("f_c", self.f_c),
            ("f_f", self.f_f),
            ("l_c", self.l_c),
            ("l_f", self.l_f),
            ("n_total", self.n_total),
        ];
        for (key, v) in positive {
            if v <= 0.0 {
                return Err(Error::InvalidScenario(format!("{key} must be > 0, got {v}")));
            }
        }
        if self.n_f_cbd < 0.0 {
            return Err(Error::InvalidScenario(format!(
                "n_f_cbd must be >= 0, got {}",
                self.n_f_cbd
            )));
        }
        if !(self.m > 0.0 && self.m < 1.0) {
            return Err(Error::InvalidScenario(format!("m must lie in (0, 1), got {}", self.m)));
        }
        if self.beta >= self.alpha {
            return Err(Error::InvalidScenario(format!(
                "beta < alpha required, got beta={} alpha={}",
                self.beta, self.alpha
            )));
        }
        if self.l_f <= self.l_c {
            return Err(Error::InvalidScenario(format!(
                "l_f > l_c required, got l_f={} l_c={}",
                self.l_f, self.l_c
            )));
        }
        if self.eta * self.n_f_cbd >= self.n_j {
            return Err(Error::InvalidScenario(format!(
                "eta*n_f_cbd < n_j required, got {} >= {}",
                self.eta * self.n_f_cbd,
                self.n_j
            )));
        }
        if self.n_f_cbd > self.n_f_total {
            return Err(Error::InvalidScenario(format!(
                "n_f_cbd <= n_f_total required, got {} > {}",
                self.n_f_cbd, self.n_f_total
            )));
        }
        Ok(())
    }

    /// Parses the flat `key = value` scenario format. Every field is required.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values: BTreeMap<&str, f64> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            let Some(&name) = FIELD_NAMES.iter().find(|&&f| f == key) else {
                return Err(Error::UnknownKey(key.to_string()));
            };
            let value = value.trim();
            let parsed: f64 = value.parse().map_err(|_| Error::Parse {
                line: idx + 1,
                message: format!("`{key}`: cannot parse `{value}` as a number"),
            })?;
            if values.insert(name, parsed).is_some() {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("duplicate key `{key}`"),
                });
            }
        }
        let mut p = ScenarioParams::reference();
        for key in FIELD_NAMES {
            let v = values.get(key).ok_or_else(|| Error::MissingKey(key.to_string()))?;
            p = p.with_field(key, *v)?;
        }
        p.validate()?;
        Ok(p)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Serializes in the scenario file format, in canonical field order.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for key in FIELD_NAMES {
            let v = self.get(key).expect("known key");
            let _ = writeln!(out, "{key} = {v}");
        }
        out
    }
}

/// Reduced-network constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    /// Effective free-flow speed v_f' after removing transit occupancy.
    pub v_f_eff: f64,
    /// Effective jam accumulation n_j'.
    pub n_j_eff: f64,
    /// Free-flow car time in the CBD, L_c / v_f'.
    pub tf_car: f64,
    /// Free-flow transit time in the CBD, L_F / (m v_f').
    pub tf_frt: f64,
    /// Fixed-cost gap F_c − F_F.
    pub delta_f: f64,
    /// Free-flow time gap T_f^F − T_f^c (always positive).
    pub delta_tf: f64,
    /// Critical accumulation n_j'/2.
    pub n_crit: f64,
    /// Boundary inflow held during perimeter control, n_j' v_f' / (4 L_c).
    pub i_p: f64,
}

pub fn derive_params(p: &ScenarioParams) -> Result<DerivedParams> {
    p.validate()?;
    let shrink = 1.0 - p.eta * p.n_f_cbd / p.n_j;
    let v_f_eff = p.v_f * shrink;
    let n_j_eff = p.n_j * shrink;
    let tf_car = p.l_c / v_f_eff;
    let tf_frt = p.l_f / (p.m * v_f_eff);
    Ok(DerivedParams {
        v_f_eff,
        n_j_eff,
        tf_car,
        tf_frt,
        delta_f: p.f_c - p.f_f,
        delta_tf: tf_frt - tf_car,
        n_crit: n_j_eff / 2.0,
        i_p: n_j_eff * v_f_eff / (4.0 * p.l_c),
    })
}

/// A validated scenario together with its derived constants, plus the
/// composite quantities shared by both equilibrium solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model {
    pub p: ScenarioParams,
    pub d: DerivedParams,
}

impl Model {
    pub fn new(p: &ScenarioParams) -> Result<Self> {
        Ok(Model { p: *p, d: derive_params(p)? })
    }

    /// 1/β + 1/γ.
    pub fn schedule_weight(&self) -> f64 {
        1.0 / self.p.beta + 1.0 / self.p.gamma
    }

    /// αΔT_f, the free-flow travel-time cost disadvantage of transit.
    pub fn alpha_dtf(&self) -> f64 {
        self.p.alpha * self.d.delta_tf
    }

    /// αT_f^c, the cost unit in which θ is measured.
    pub fn alpha_tfc(&self) -> f64 {
        self.p.alpha * self.d.tf_car
    }

    /// ΔF / (αΔT_f); transit is attractive at free flow iff this exceeds 1.
    pub fn frt_advantage(&self) -> f64 {
        self.d.delta_f / self.alpha_dtf()
    }

    /// Threshold on θ_p above which transit is used during perimeter control.
    pub fn pc_frt_threshold(&self) -> f64 {
        (2.0 * self.p.alpha * self.d.tf_frt - self.d.delta_f) / self.alpha_tfc()
    }

    /// Accumulation growth rate during earliness, β/(αT_f^c).
    pub fn k_early(&self) -> f64 {
        self.p.beta / self.alpha_tfc()
    }

    /// Accumulation decay rate during lateness, γ/(αT_f^c).
    pub fn k_late(&self) -> f64 {
        self.p.gamma / self.alpha_tfc()
    }

    /// n_F^c α T_f^c / (λ T_f^F), the prefactor of transit demand during car rush.
    pub fn frt_rush_weight(&self) -> f64 {
        self.p.n_f_cbd * self.alpha_tfc() / (self.p.lambda * self.d.tf_frt)
    }

    /// n_F^c / (λ T_f^F).
    pub fn frt_weight(&self) -> f64 {
        self.p.n_f_cbd / (self.p.lambda * self.d.tf_frt)
    }

    pub fn cost_from_theta(&self, theta: f64) -> f64 {
        self.p.f_c + theta * self.alpha_tfc()
    }

    pub fn theta_from_cost(&self, cost: f64) -> f64 {
        (cost - self.p.f_c) / self.alpha_tfc()
    }
}
