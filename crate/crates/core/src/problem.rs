//! Reduced-space problems: a box over the input variables, networks whose
//! inputs are expressions of those variables, an objective and inequality
//! constraints `g(x) <= 0` over variables and network outputs.

use std::path::Path;

use serde_json::Value;

use crate::dual::Dual;
use crate::error::{Error, Result};
use crate::expr::{Env, Expr};
use crate::interval::Interval;
use crate::mlp::Mlp;
use crate::relax::{ActivationMode, McCormick};
use crate::scalar::Arith;

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub bounds: Interval<f64>,
}

/// A network and the expressions feeding its inputs.
#[derive(Clone, Debug)]
pub struct NetworkBinding {
    pub id: String,
    pub mlp: Mlp<f64>,
    pub inputs: Vec<Expr>,
}

#[derive(Clone, Debug)]
pub struct Problem {
    variables: Vec<Variable>,
    constants: Vec<(String, f64)>,
    networks: Vec<NetworkBinding>,
    objective: Expr,
    constraints: Vec<Expr>,
    mode: ActivationMode,
}

/// Objective and constraint values in one context.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation<V> {
    pub objective: V,
    pub constraints: Vec<V>,
}

struct ProblemEnv<'a, V> {
    problem: &'a Problem,
    vars: &'a [V],
    outputs: &'a [Vec<V>],
}

impl<V: Arith<f64>> Env<V> for ProblemEnv<'_, V> {
    fn var(&self, name: &str) -> Option<V> {
        if let Some(i) = self.problem.variables.iter().position(|v| v.name == name) {
            return Some(self.vars[i].clone());
        }
        self.problem
            .constants
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| V::constant(*c))
    }

    fn net_output(&self, net: &str, index: usize) -> Option<V> {
        let k = self.problem.networks.iter().position(|n| n.id == net)?;
        self.outputs.get(k)?.get(index).cloned()
    }
}

const RS_NOTE: &str = "only inequality constraints g(x) <= 0 are supported; network equations \
are eliminated by evaluating the networks explicitly, so no equalities remain";

impl Problem {
    pub fn new(
        variables: Vec<Variable>,
        constants: Vec<(String, f64)>,
        networks: Vec<NetworkBinding>,
        objective: Expr,
        constraints: Vec<Expr>,
        mode: ActivationMode,
    ) -> Result<Self> {
        if variables.is_empty() {
            return Err(Error::schema("variables", "at least one variable is required"));
        }
        let mut names: Vec<String> = Vec::new();
        for v in &variables {
            if !(v.bounds.lo() < v.bounds.hi()) {
                return Err(Error::schema(
                    format!("variables.{}", v.name),
                    "bounds must satisfy lo < hi",
                ));
            }
            names.push(v.name.clone());
        }
        for (c, value) in &constants {
            if !value.is_finite() {
                return Err(Error::schema(format!("constants.{c}"), "must be finite"));
            }
            names.push(c.clone());
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::schema("variables", format!("duplicate name `{n}`")));
            }
        }
        for (k, net) in networks.iter().enumerate() {
            if networks[..k].iter().any(|o| o.id == net.id) {
                return Err(Error::schema("networks", format!("duplicate id `{}`", net.id)));
            }
            if net.inputs.len() != net.mlp.n_inputs() {
                return Err(Error::Shape(format!(
                    "network `{}` has {} inputs but {} bindings",
                    net.id,
                    net.mlp.n_inputs(),
                    net.inputs.len()
                )));
            }
            for e in &net.inputs {
                if let Some((r, i)) = e.net_refs().into_iter().next() {
                    return Err(Error::schema(
                        format!("networks.{}.inputs", net.id),
                        format!("network inputs may not reference network outputs ({r}.y[{i}])"),
                    ));
                }
            }
        }
        let p = Self {
            variables,
            constants,
            networks,
            objective,
            constraints,
            mode,
        };
        let all = p
            .networks
            .iter()
            .flat_map(|n| n.inputs.iter())
            .chain(std::iter::once(&p.objective))
            .chain(p.constraints.iter());
        for e in all {
            for name in e.variables() {
                if !names.contains(&name) {
                    return Err(Error::UnresolvedName(name));
                }
            }
            for (net, index) in e.net_refs() {
                match p.networks.iter().find(|n| n.id == net) {
                    None => return Err(Error::UnresolvedName(net)),
                    Some(n) if index >= n.mlp.n_outputs() => {
                        return Err(Error::UnresolvedName(format!("{net}.y[{index}]")))
                    }
                    Some(_) => {}
                }
            }
        }
        Ok(p)
    }

    /// Load a problem file. Network files are resolved relative to it.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_json_str(&text, base)
    }

    pub fn from_json_str(text: &str, base_dir: &Path) -> Result<Self> {
        let root: Value = serde_json::from_str(text).map_err(|e| Error::schema("$", e.to_string()))?;
        let obj = root
            .as_object()
            .ok_or_else(|| Error::schema("$", "expected an object"))?;
        for key in obj.keys() {
            match key.as_str() {
                "variables" | "networks" | "objective" | "constraints" | "mode" | "constants" => {}
                "equalities" | "equality_constraints" => {
                    return Err(Error::schema(format!("$.{key}"), RS_NOTE))
                }
                _ => return Err(Error::schema(format!("$.{key}"), "unknown field")),
            }
        }

        let vars_json = obj
            .get("variables")
            .ok_or_else(|| Error::schema("$.variables", "missing field"))?
            .as_array()
            .ok_or_else(|| Error::schema("$.variables", "expected an array"))?;
        let mut variables = Vec::new();
        for (i, v) in vars_json.iter().enumerate() {
            let path = format!("$.variables[{i}]");
            let name = str_field(v, "name", &path)?;
            let lo = num_field(v, "lo", &path)?;
            let hi = num_field(v, "hi", &path)?;
            let bounds = Interval::new(lo, hi).map_err(|_| {
                Error::schema(&path, format!("invalid bounds [{lo}, {hi}]"))
            })?;
            variables.push(Variable { name, bounds });
        }

        let mut constants = Vec::new();
        if let Some(c) = obj.get("constants") {
            let co = c
                .as_object()
                .ok_or_else(|| Error::schema("$.constants", "expected an object"))?;
            for (k, v) in co {
                let value = v
                    .as_f64()
                    .ok_or_else(|| Error::schema(format!("$.constants.{k}"), "expected a number"))?;
                constants.push((k.clone(), value));
            }
        }

        let mut networks = Vec::new();
        if let Some(nets) = obj.get("networks") {
            let nets = nets
                .as_array()
                .ok_or_else(|| Error::schema("$.networks", "expected an array"))?;
            for (k, n) in nets.iter().enumerate() {
                let path = format!("$.networks[{k}]");
                let id = str_field(n, "id", &path)?;
                let mlp = match (n.get("file"), n.get("model")) {
                    (Some(Value::String(f)), None) => Mlp::load(base_dir.join(f))?,
                    (None, Some(m)) => Mlp::from_json_value(m)?,
                    _ => {
                        return Err(Error::schema(
                            &path,
                            "exactly one of `file` (string) or `model` (object) is required",
                        ))
                    }
                };
                let inputs_json = n
                    .get("inputs")
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::schema(format!("{path}.inputs"), "expected an array of expressions"))?;
                let inputs = inputs_json
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        s.as_str()
                            .ok_or_else(|| Error::schema(format!("{path}.inputs[{i}]"), "expected a string"))
                            .and_then(Expr::parse)
                    })
                    .collect::<Result<Vec<_>>>()?;
                networks.push(NetworkBinding { id, mlp, inputs });
            }
        }

        let objective = Expr::parse(
            obj.get("objective")
                .and_then(Value::as_str)
                .ok_or_else(|| Error::schema("$.objective", "expected an expression string"))?,
        )?;

        let mut constraints = Vec::new();
        if let Some(cs) = obj.get("constraints") {
            let cs = cs
                .as_array()
                .ok_or_else(|| Error::schema("$.constraints", "expected an array"))?;
            for (j, c) in cs.iter().enumerate() {
                let path = format!("$.constraints[{j}]");
                let s = c
                    .as_str()
                    .ok_or_else(|| Error::schema(&path, "expected an expression string"))?;
                if s.contains('=') {
                    return Err(Error::schema(&path, RS_NOTE));
                }
                constraints.push(Expr::parse(s)?);
            }
        }

        let mode = match obj.get("mode") {
            None => ActivationMode::Envelope,
            Some(m) => m
                .as_str()
                .ok_or_else(|| Error::schema("$.mode", "expected a string"))?
                .parse()
                .map_err(|e: String| Error::schema("$.mode", e))?,
        };

        Self::new(variables, constants, networks, objective, constraints, mode)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn networks(&self) -> &[NetworkBinding] {
        &self.networks
    }

    pub fn objective(&self) -> &Expr {
        &self.objective
    }

    pub fn constraints(&self) -> &[Expr] {
        &self.constraints
    }

    pub fn mode(&self) -> ActivationMode {
        self.mode
    }

    pub fn with_mode(mut self, mode: ActivationMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn domain(&self) -> Vec<Interval<f64>> {
        self.variables.iter().map(|v| v.bounds).collect()
    }

    /// Evaluate every network once, then the objective and constraints.
    pub fn evaluate<V: Arith<f64>>(&self, vars: &[V]) -> Result<Evaluation<V>> {
        if vars.len() != self.variables.len() {
            return Err(Error::Shape(format!(
                "problem has {} variables, got {}",
                self.variables.len(),
                vars.len()
            )));
        }
        let mut outputs: Vec<Vec<V>> = Vec::with_capacity(self.networks.len());
        for net in &self.networks {
            let env = ProblemEnv {
                problem: self,
                vars,
                outputs: &[],
            };
            let x = net
                .inputs
                .iter()
                .map(|e| e.eval(&env, self.mode))
                .collect::<Result<Vec<V>>>()?;
            outputs.push(net.mlp.eval(&x, self.mode)?);
        }
        let env = ProblemEnv {
            problem: self,
            vars,
            outputs: &outputs,
        };
        Ok(Evaluation {
            objective: self.objective.eval(&env, self.mode)?,
            constraints: self
                .constraints
                .iter()
                .map(|c| c.eval(&env, self.mode))
                .collect::<Result<Vec<V>>>()?,
        })
    }

    pub fn eval_real(&self, x: &[f64]) -> Result<Evaluation<f64>> {
        self.evaluate(x)
    }

    pub fn eval_interval(&self, bx: &[Interval<f64>]) -> Result<Evaluation<Interval<f64>>> {
        self.evaluate(bx)
    }

    pub fn eval_dual(&self, x: &[f64]) -> Result<Evaluation<Dual<f64>>> {
        let n = x.len();
        let vars: Vec<Dual<f64>> = x.iter().enumerate().map(|(i, v)| Dual::variable(i, n, *v)).collect();
        self.evaluate(&vars)
    }

    /// Relaxations over `bx`, evaluated at `point`.
    pub fn eval_mccormick(&self, bx: &[Interval<f64>], point: &[f64]) -> Result<Evaluation<McCormick<f64>>> {
        if bx.len() != point.len() {
            return Err(Error::Shape("box and point dimensions differ".into()));
        }
        let n = bx.len();
        let vars = bx
            .iter()
            .zip(point)
            .enumerate()
            .map(|(i, (b, p))| McCormick::variable(i, n, *b, *p))
            .collect::<Result<Vec<_>>>()?;
        self.evaluate(&vars)
    }

    /// Largest positive constraint value, zero when feasible.
    pub fn max_violation(&self, constraints: &[f64]) -> f64 {
        constraints.iter().fold(0.0f64, |m, g| m.max(*g))
    }
}

fn str_field(v: &Value, key: &str, path: &str) -> Result<String> {
    v.get(key)
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| Error::schema(format!("{path}.{key}"), "expected a string"))
}

fn num_field(v: &Value, key: &str, path: &str) -> Result<f64> {
    v.get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::schema(format!("{path}.{key}"), "expected a number"))
}
