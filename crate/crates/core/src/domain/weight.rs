//! External fields `Q_i`.

use evalexpr::{
    build_operator_tree, ContextWithMutableFunctions, ContextWithMutableVariables,
    DefaultNumericTypes, Function, HashMapContext, Node, Value,
};
use num_complex::Complex64;

use super::geometry::{CompactSetTuple, Grid};
use crate::{Error, Result};

/// How a weight entered the problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admissibility {
    Continuous,
    /// Continuous Lipschitz envelope of an upper semicontinuous weight.
    UscUpperApproximated { level: u32 },
}

/// A parsed expression in the variables `x`, `y` (real and imaginary part)
/// and `r` (modulus).
#[derive(Clone)]
pub struct WeightExpr {
    source: String,
    tree: Node<DefaultNumericTypes>,
}

impl std::fmt::Debug for WeightExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "WeightExpr({:?})", self.source)
    }
}

impl PartialEq for WeightExpr {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
    }
}

/// Appends `.0` to bare integer literals so that `1/2` means one half.
fn floatify(source: &str) -> String {
    let chars: Vec<char> = source.chars().collect();
    let mut out = String::with_capacity(source.len() + 8);
    let mut k = 0;
    while k < chars.len() {
        let c = chars[k];
        let starts_number = c.is_ascii_digit()
            && (k == 0 || !(chars[k - 1].is_alphanumeric() || chars[k - 1] == '_' || chars[k - 1] == '.'));
        if !starts_number {
            out.push(c);
            k += 1;
            continue;
        }
        let begin = k;
        while k < chars.len() && chars[k].is_ascii_digit() {
            k += 1;
        }
        let mut is_float = false;
        if k < chars.len() && chars[k] == '.' {
            is_float = true;
            k += 1;
            while k < chars.len() && chars[k].is_ascii_digit() {
                k += 1;
            }
        }
        if k < chars.len() && (chars[k] == 'e' || chars[k] == 'E') {
            is_float = true;
            k += 1;
            if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                k += 1;
            }
            while k < chars.len() && chars[k].is_ascii_digit() {
                k += 1;
            }
        }
        out.extend(&chars[begin..k]);
        if !is_float {
            out.push_str(".0");
        }
    }
    out
}

fn unary(f: fn(f64) -> f64) -> Function<DefaultNumericTypes> {
    Function::new(move |arg: &Value<DefaultNumericTypes>| Ok(Value::Float(f(arg.as_number()?))))
}

impl WeightExpr {
    pub fn parse(source: &str) -> Result<Self> {
        let tree = build_operator_tree::<DefaultNumericTypes>(&floatify(source))
            .map_err(|e| Error::Weight(format!("cannot parse `{source}`: {e}")))?;
        let expr = Self { source: source.to_string(), tree };
        expr.evaluator().eval(Complex64::new(0.5, 0.0))?;
        Ok(expr)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    fn evaluator(&self) -> ExprEvaluator<'_> {
        let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
        for (name, f) in [
            ("abs", f64::abs as fn(f64) -> f64),
            ("sqrt", f64::sqrt),
            ("ln", f64::ln),
            ("log", f64::ln),
            ("exp", f64::exp),
            ("sin", f64::sin),
            ("cos", f64::cos),
        ] {
            ctx.set_function(name.into(), unary(f)).expect("hash map context is mutable");
        }
        ExprEvaluator { tree: &self.tree, source: &self.source, ctx }
    }
}

struct ExprEvaluator<'a> {
    tree: &'a Node<DefaultNumericTypes>,
    source: &'a str,
    ctx: HashMapContext<DefaultNumericTypes>,
}

impl ExprEvaluator<'_> {
    fn eval(&mut self, z: Complex64) -> Result<f64> {
        for (name, v) in [("x", z.re), ("y", z.im), ("r", z.norm())] {
            self.ctx.set_value(name.into(), Value::Float(v)).expect("hash map context is mutable");
        }
        self.tree
            .eval_number_with_context(&self.ctx)
            .map_err(|e| Error::Weight(format!("evaluating `{}`: {e}", self.source)))
    }
}

/// One external field `Q_i`. Values of `+inf` mark points where the field
/// forbids mass.
#[derive(Debug, Clone, PartialEq)]
pub enum Weight {
    Zero,
    Expr(WeightExpr),
    /// Values at given points; evaluation returns the value at the nearest
    /// tabulated point.
    Tabulated { points: Vec<Complex64>, values: Vec<f64> },
    /// `z -> max_w (u(w) - lipschitz |z - w|)` over tabulated `u`.
    LipschitzEnvelope { points: Vec<Complex64>, values: Vec<f64>, lipschitz: f64 },
}

impl Weight {
    pub fn expr(source: &str) -> Result<Self> {
        Ok(Weight::Expr(WeightExpr::parse(source)?))
    }

    pub fn tabulated(points: Vec<Complex64>, values: Vec<f64>) -> Result<Self> {
        if points.len() != values.len() || points.is_empty() {
            return Err(Error::Weight(format!(
                "tabulated weight needs matching non-empty tables, got {} points and {} values",
                points.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return Err(Error::Weight("tabulated values must be finite or +inf".into()));
        }
        Ok(Weight::Tabulated { points, values })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Weight::Zero)
    }

    pub fn eval(&self, z: Complex64) -> Result<f64> {
        Ok(self.eval_many(&[z])?[0])
    }

    pub fn eval_many(&self, zs: &[Complex64]) -> Result<Vec<f64>> {
        match self {
            Weight::Zero => Ok(vec![0.0; zs.len()]),
            Weight::Expr(e) => {
                let mut ev = e.evaluator();
                zs.iter().map(|&z| ev.eval(z)).collect()
            }
            Weight::Tabulated { points, values } => Ok(zs
                .iter()
                .map(|&z| {
                    let mut best = 0;
                    let mut best_d = f64::INFINITY;
                    for (k, p) in points.iter().enumerate() {
                        let d = (p - z).norm();
                        if d < best_d {
                            best = k;
                            best_d = d;
                        }
                    }
                    values[best]
                })
                .collect()),
            Weight::LipschitzEnvelope { points, values, lipschitz } => Ok(zs
                .iter()
                .map(|&z| {
                    points
                        .iter()
                        .zip(values)
                        .filter(|(_, u)| u.is_finite())
                        .map(|(p, u)| u - lipschitz * (p - z).norm())
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect()),
        }
    }

    pub fn on_grid(&self, grid: &Grid) -> Result<Vec<f64>> {
        self.eval_many(&grid.nodes)
    }
}

/// `Q = (Q_1, ..., Q_d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTuple {
    weights: Vec<Weight>,
    admissibility: Admissibility,
}

impl WeightTuple {
    pub fn new(weights: Vec<Weight>) -> Self {
        Self { weights, admissibility: Admissibility::Continuous }
    }

    pub fn zero(d: usize) -> Self {
        Self::new(vec![Weight::Zero; d])
    }

    pub fn with_admissibility(mut self, admissibility: Admissibility) -> Self {
        self.admissibility = admissibility;
        self
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn get(&self, i: usize) -> &Weight {
        &self.weights[i]
    }

    pub fn admissibility(&self) -> Admissibility {
        self.admissibility
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().all(Weight::is_zero)
    }

    /// Field values at every grid node, after checking that each `Q_i` is
    /// finite on a part of the grid carrying positive quadrature mass.
    pub fn tabulate(&self, k: &CompactSetTuple) -> Result<Vec<Vec<f64>>> {
        if self.dim() != k.dim() {
            return Err(Error::Dimension(format!(
                "{} weights for {} components",
                self.dim(),
                k.dim()
            )));
        }
        let mut out = Vec::with_capacity(self.dim());
        for (i, w) in self.weights.iter().enumerate() {
            let grid = k.grid(i);
            let values = w.on_grid(grid)?;
            if values.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
                return Err(Error::Weight(format!("Q_{} takes NaN or -inf on the grid", i + 1)));
            }
            let finite_mass: f64 =
                values.iter().zip(&grid.weights).filter(|(v, _)| v.is_finite()).map(|(_, w)| w).sum();
            if !(finite_mass > 0.0) {
                return Err(Error::Weight(format!(
                    "Q_{} is infinite on every grid node of K_{}",
                    i + 1,
                    i + 1
                )));
            }
            out.push(values);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_literals_are_read_as_floats() {
        assert_eq!(floatify("1/2*x^2"), "1.0/2.0*x^2.0");
        assert_eq!(floatify("x2 + 3.5e-1 + 1e3"), "x2 + 3.5e-1 + 1e3");
        let w = Weight::expr("1/2*x^2").unwrap();
        assert!((w.eval(Complex64::new(2.0, 0.0)).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn expression_functions_and_variables() {
        let w = Weight::expr("abs(x) + sqrt(r) + ln(exp(y))").unwrap();
        let v = w.eval(Complex64::new(-3.0, 4.0)).unwrap();
        assert!((v - (3.0 + 5f64.sqrt() + 4.0)).abs() < 1e-12);
        assert!(Weight::expr("x +* 2").is_err());
        assert!(Weight::expr("undefined_name").is_err());
    }

    #[test]
    fn tabulated_and_envelope_evaluation() {
        let pts = vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        let t = Weight::tabulated(pts.clone(), vec![0.0, 1.0]).unwrap();
        assert_eq!(t.eval(Complex64::new(0.8, 0.0)).unwrap(), 1.0);
        let env = Weight::LipschitzEnvelope { points: pts, values: vec![0.0, 1.0], lipschitz: 2.0 };
        assert!((env.eval(Complex64::new(0.25, 0.0)).unwrap() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn weight_infinite_everywhere_is_rejected() {
        let k = CompactSetTuple::intervals(&[(0.0, 1.0)], 5).unwrap();
        let nodes = k.grid(0).nodes.clone();
        let q = WeightTuple::new(vec![Weight::tabulated(nodes, vec![f64::INFINITY; 5]).unwrap()]);
        assert!(matches!(q.tabulate(&k), Err(Error::Weight(_))));
        assert!(WeightTuple::zero(2).tabulate(&k).is_err());
    }
}
