//! Feed-forward networks: representation, JSON persistence and a single
//! forward pass shared by every evaluation context.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde_json::Value;

use crate::dual::Dual;
use crate::error::{Error, Result};
use crate::relax::ActivationMode;
use crate::scalar::{Arith, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Sigmoid,
    Identity,
}

impl Activation {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Tanh => "tanh",
            Self::Sigmoid => "sigmoid",
            Self::Identity => "identity",
        }
    }

    pub fn apply<T: Real, V: Arith<T>>(self, x: &V, mode: ActivationMode) -> Result<V> {
        match self {
            Self::Tanh => x.tanh(mode),
            Self::Sigmoid => x.sigmoid(mode),
            Self::Identity => Ok(x.clone()),
        }
    }
}

impl FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "tanh" => Ok(Self::Tanh),
            "sigmoid" => Ok(Self::Sigmoid),
            "identity" => Ok(Self::Identity),
            other => Err(format!("unsupported activation `{other}`")),
        }
    }
}

/// Fully connected layer. `weights[i][j]` connects input `j` to output `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer<T> {
    pub weights: Vec<Vec<T>>,
    pub bias: Vec<T>,
    pub activation: Activation,
}

impl<T: Real> Layer<T> {
    pub fn n_inputs(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn n_outputs(&self) -> usize {
        self.bias.len()
    }
}

/// Componentwise map `a * x + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Scaling<T> {
    pub a: Vec<T>,
    pub b: Vec<T>,
}

impl<T: Real> Scaling<T> {
    pub fn identity(n: usize) -> Self {
        Self {
            a: vec![T::one(); n],
            b: vec![T::zero(); n],
        }
    }

    fn apply<V: Arith<T>>(&self, x: &[V]) -> Result<Vec<V>> {
        x.iter()
            .zip(self.a.iter().zip(&self.b))
            .map(|(v, (a, b))| V::affine(&[(*a, v)], *b))
            .collect()
    }
}

/// Multilayer perceptron with optional input and output scaling.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp<T> {
    n_inputs: usize,
    layers: Vec<Layer<T>>,
    input_scale: Option<Scaling<T>>,
    output_scale: Option<Scaling<T>>,
}

impl<T: Real> Mlp<T> {
    pub fn new(
        n_inputs: usize,
        layers: Vec<Layer<T>>,
        input_scale: Option<Scaling<T>>,
        output_scale: Option<Scaling<T>>,
    ) -> Result<Self> {
        if n_inputs == 0 {
            return Err(Error::Shape("network needs at least one input".into()));
        }
        if layers.is_empty() {
            return Err(Error::Shape("network needs at least one layer".into()));
        }
        let mut width = n_inputs;
        for (k, layer) in layers.iter().enumerate() {
            if layer.weights.len() != layer.bias.len() {
                return Err(Error::Shape(format!(
                    "layers[{k}]: {} weight rows but {} biases",
                    layer.weights.len(),
                    layer.bias.len()
                )));
            }
            if layer.bias.is_empty() {
                return Err(Error::Shape(format!("layers[{k}] has no neurons")));
            }
            for (i, row) in layer.weights.iter().enumerate() {
                if row.len() != width {
                    return Err(Error::Shape(format!(
                        "layers[{k}].weights[{i}] has length {} but the previous layer has width {width}",
                        row.len()
                    )));
                }
            }
            let finite = layer.weights.iter().flatten().chain(&layer.bias).all(|v| v.is_finite());
            if !finite {
                return Err(Error::Shape(format!("layers[{k}] has non-finite entries")));
            }
            width = layer.bias.len();
        }
        let check = |s: &Option<Scaling<T>>, n: usize, name: &str| -> Result<()> {
            if let Some(s) = s {
                if s.a.len() != n || s.b.len() != n {
                    return Err(Error::Shape(format!(
                        "{name} must have {n} entries in `a` and `b`"
                    )));
                }
                if !s.a.iter().chain(&s.b).all(|v| v.is_finite()) {
                    return Err(Error::Shape(format!("{name} has non-finite entries")));
                }
            }
            Ok(())
        };
        check(&input_scale, n_inputs, "input_scale")?;
        check(&output_scale, width, "output_scale")?;
        Ok(Self {
            n_inputs,
            layers,
            input_scale,
            output_scale,
        })
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_outputs(&self) -> usize {
        self.layers.last().map_or(0, Layer::n_outputs)
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn input_scale(&self) -> Option<&Scaling<T>> {
        self.input_scale.as_ref()
    }

    pub fn output_scale(&self) -> Option<&Scaling<T>> {
        self.output_scale.as_ref()
    }

    /// Layer widths including the input layer, e.g. `[2, 47, 1]`.
    pub fn architecture(&self) -> Vec<usize> {
        std::iter::once(self.n_inputs)
            .chain(self.layers.iter().map(Layer::n_outputs))
            .collect()
    }

    /// Forward pass in any arithmetic context.
    pub fn eval<V: Arith<T>>(&self, x: &[V], mode: ActivationMode) -> Result<Vec<V>> {
        if x.len() != self.n_inputs {
            return Err(Error::Shape(format!(
                "network expects {} inputs, got {}",
                self.n_inputs,
                x.len()
            )));
        }
        let mut z = match &self.input_scale {
            Some(s) => s.apply(x)?,
            None => x.to_vec(),
        };
        for layer in &self.layers {
            let mut terms: Vec<(T, &V)> = Vec::with_capacity(z.len());
            let mut next = Vec::with_capacity(layer.n_outputs());
            for (row, b) in layer.weights.iter().zip(&layer.bias) {
                terms.clear();
                terms.extend(row.iter().copied().zip(z.iter()));
                let pre = V::affine(&terms, *b)?;
                next.push(layer.activation.apply(&pre, mode)?);
            }
            drop(terms);
            z = next;
        }
        match &self.output_scale {
            Some(s) => s.apply(&z),
            None => Ok(z),
        }
    }

    pub fn eval_real(&self, x: &[T]) -> Result<Vec<T>> {
        self.eval(x, ActivationMode::Envelope)
    }

    /// Jacobian `d outputs / d inputs`, one row per output.
    pub fn jacobian(&self, x: &[T]) -> Result<Vec<Vec<T>>> {
        let n = self.n_inputs;
        let duals: Vec<Dual<T>> = x
            .iter()
            .enumerate()
            .map(|(i, v)| Dual::variable(i, n, *v))
            .collect();
        let out = self.eval(&duals, ActivationMode::Envelope)?;
        Ok(out.iter().map(|d| d.grad_dense(n)).collect())
    }

    pub fn cast<U: Real>(&self) -> Mlp<U> {
        let c = |v: &T| U::from(*v).expect("cast");
        let cv = |v: &Vec<T>| v.iter().map(c).collect::<Vec<U>>();
        let cs = |s: &Scaling<T>| Scaling {
            a: cv(&s.a),
            b: cv(&s.b),
        };
        Mlp {
            n_inputs: self.n_inputs,
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    weights: l.weights.iter().map(cv).collect(),
                    bias: cv(&l.bias),
                    activation: l.activation,
                })
                .collect(),
            input_scale: self.input_scale.as_ref().map(cs),
            output_scale: self.output_scale.as_ref().map(cs),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let root: Value =
            serde_json::from_str(text).map_err(|e| Error::schema("$", e.to_string()))?;
        Self::from_json_value(&root)
    }

    pub fn from_json_value(root: &Value) -> Result<Self> {
        let obj = root
            .as_object()
            .ok_or_else(|| Error::schema("$", "expected an object"))?;
        for key in obj.keys() {
            if !matches!(
                key.as_str(),
                "n_inputs" | "layers" | "input_scale" | "output_scale"
            ) {
                return Err(Error::schema(format!("$.{key}"), "unknown field"));
            }
        }
        let n_inputs = obj
            .get("n_inputs")
            .ok_or_else(|| Error::schema("$.n_inputs", "missing field"))?
            .as_u64()
            .ok_or_else(|| Error::schema("$.n_inputs", "expected a non-negative integer"))?
            as usize;
        let layers_json = obj
            .get("layers")
            .ok_or_else(|| Error::schema("$.layers", "missing field"))?
            .as_array()
            .ok_or_else(|| Error::schema("$.layers", "expected an array"))?;
        let mut layers = Vec::with_capacity(layers_json.len());
        for (k, l) in layers_json.iter().enumerate() {
            let path = format!("$.layers[{k}]");
            let lo = l
                .as_object()
                .ok_or_else(|| Error::schema(&path, "expected an object"))?;
            let weights_json = lo
                .get("weights")
                .ok_or_else(|| Error::schema(format!("{path}.weights"), "missing field"))?
                .as_array()
                .ok_or_else(|| Error::schema(format!("{path}.weights"), "expected an array"))?;
            let weights = weights_json
                .iter()
                .enumerate()
                .map(|(i, row)| number_array::<T>(row, &format!("{path}.weights[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            let bias = number_array::<T>(
                lo.get("bias")
                    .ok_or_else(|| Error::schema(format!("{path}.bias"), "missing field"))?,
                &format!("{path}.bias"),
            )?;
            let act_path = format!("{path}.activation");
            let activation = lo
                .get("activation")
                .ok_or_else(|| Error::schema(&act_path, "missing field"))?
                .as_str()
                .ok_or_else(|| Error::schema(&act_path, "expected a string"))?
                .parse::<Activation>()
                .map_err(|e| Error::schema(&act_path, e))?;
            layers.push(Layer {
                weights,
                bias,
                activation,
            });
        }
        let scaling = |key: &str| -> Result<Option<Scaling<T>>> {
            match obj.get(key) {
                None | Some(Value::Null) => Ok(None),
                Some(v) => {
                    let path = format!("$.{key}");
                    let so = v
                        .as_object()
                        .ok_or_else(|| Error::schema(&path, "expected an object"))?;
                    let get = |f: &str| -> Result<Vec<T>> {
                        let p = format!("{path}.{f}");
                        number_array(so.get(f).ok_or_else(|| Error::schema(&p, "missing field"))?, &p)
                    };
                    Ok(Some(Scaling {
                        a: get("a")?,
                        b: get("b")?,
                    }))
                }
            }
        };
        let input_scale = scaling("input_scale")?;
        let output_scale = scaling("output_scale")?;
        Self::new(n_inputs, layers, input_scale, output_scale)
    }

    /// Serialize with every number written to 17 significant digits.
    pub fn to_json_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{{");
        let _ = writeln!(s, "  \"n_inputs\": {},", self.n_inputs);
        let _ = writeln!(s, "  \"layers\": [");
        for (k, l) in self.layers.iter().enumerate() {
            let _ = writeln!(s, "    {{");
            let _ = writeln!(s, "      \"weights\": [");
            for (i, row) in l.weights.iter().enumerate() {
                let sep = if i + 1 < l.weights.len() { "," } else { "" };
                let _ = writeln!(s, "        {}{sep}", fmt_array(row));
            }
            let _ = writeln!(s, "      ],");
            let _ = writeln!(s, "      \"bias\": {},", fmt_array(&l.bias));
            let _ = writeln!(s, "      \"activation\": \"{}\"", l.activation.as_str());
            let sep = if k + 1 < self.layers.len() { "," } else { "" };
            let _ = writeln!(s, "    }}{sep}");
        }
        let _ = write!(s, "  ]");
        for (key, sc) in [("input_scale", &self.input_scale), ("output_scale", &self.output_scale)] {
            if let Some(sc) = sc {
                let _ = write!(
                    s,
                    ",\n  \"{key}\": {{\"a\": {}, \"b\": {}}}",
                    fmt_array(&sc.a),
                    fmt_array(&sc.b)
                );
            }
        }
        let _ = writeln!(s, "\n}}");
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string()).map_err(|e| Error::io(path, e))
    }
}

fn number_array<T: Real>(v: &Value, path: &str) -> Result<Vec<T>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::schema(path, "expected an array of numbers"))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| {
            x.as_f64()
                .and_then(T::from_f64)
                .ok_or_else(|| Error::schema(format!("{path}[{i}]"), "expected a number"))
        })
        .collect()
}

pub(crate) fn fmt_num<T: Real>(v: T) -> String {
    format!("{:.16e}", v.to_f64_lossy())
}

fn fmt_array<T: Real>(v: &[T]) -> String {
    let parts: Vec<String> = v.iter().map(|x| fmt_num(*x)).collect();
    format!("[{}]", parts.join(", "))
}
