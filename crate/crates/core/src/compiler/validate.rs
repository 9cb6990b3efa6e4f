use serde::Serialize;

use crate::infotheory::binary_entropy;
use crate::protocol::Params;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Target {
    Qot,
    Qid,
}

/// `lhs < rhs`, or `lhs > rhs` when `greater` is set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Constraint {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub greater: bool,
    pub holds: bool,
    /// Distance to the boundary; negative when violated.
    pub margin: f64,
}

impl Constraint {
    fn less(name: &str, lhs: f64, rhs: f64) -> Self {
        Self { name: name.into(), lhs, rhs, greater: false, holds: lhs < rhs, margin: rhs - lhs }
    }

    fn greater(name: &str, lhs: f64, rhs: f64) -> Self {
        Self { name: name.into(), lhs, rhs, greater: true, holds: lhs > rhs, margin: lhs - rhs }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParameterReport {
    pub target: Target,
    pub constraints: Vec<Constraint>,
    pub ok: bool,
    /// Constraint with the smallest margin.
    pub binding: Option<String>,
}

impl ParameterReport {
    pub fn get(&self, name: &str) -> Option<&Constraint> {
        self.constraints.iter().find(|c| c.name == name)
    }
}

/// Checks the security conditions of the chosen protocol against `params`.
pub fn validate_parameters(target: Target, params: &Params) -> ParameterReport {
    let mut c = Vec::new();
    if params.is_compiled() {
        c.push(Constraint::less("alpha < 1", params.alpha, 1.0));
    }
    match target {
        Target::Qot => {
            c.push(Constraint::less("beta < 1/8 - lambda/2", params.beta, 0.125 - params.lambda / 2.0));
            c.push(Constraint::less("lambda < 1/8", params.lambda, 0.125));
            c.push(Constraint::less("gamma < 1/4 - 2 lambda", params.gamma, 0.25 - 2.0 * params.lambda));
        }
        Target::Qid => {
            c.push(Constraint::greater("delta > 0", params.delta, 0.0));
            c.push(Constraint::less("beta < delta/4", params.beta, params.delta / 4.0));
            c.push(Constraint::less("gamma < delta/2 - nu", params.gamma, params.delta / 2.0 - params.nu));
        }
    }
    if params.phi > 0.0 {
        let h = binary_entropy(params.phi).unwrap_or(1.0);
        c.push(Constraint::greater("beta > h(phi)", params.beta, h));
    }
    let ok = c.iter().all(|x| x.holds);
    let binding = c.iter().min_by(|a, b| a.margin.total_cmp(&b.margin)).map(|x| x.name.clone());
    ParameterReport { target, constraints: c, ok, binding }
}
