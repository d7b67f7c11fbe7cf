use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{Point2, Vector2};

use crate::error::{Error, Result};
use crate::geometry::{LevelSet, Side};
use crate::system::ProblemData;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemName {
    /// Circle of radius `r0`, `u = r³/β` inside.
    Ex1,
    /// Teardrop with a sharp tip, piecewise constant β.
    Ex2,
    /// Ellipse with variable β inside.
    Ex3,
    /// Cardioid with variable β inside.
    Ex4,
}

impl ProblemName {
    pub const ALL: [ProblemName; 4] = [ProblemName::Ex1, ProblemName::Ex2, ProblemName::Ex3, ProblemName::Ex4];
}

impl fmt::Display for ProblemName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemName::Ex1 => "ex1",
            ProblemName::Ex2 => "ex2",
            ProblemName::Ex3 => "ex3",
            ProblemName::Ex4 => "ex4",
        })
    }
}

impl FromStr for ProblemName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ex1" | "4.1" => Ok(ProblemName::Ex1),
            "ex2" | "4.2" => Ok(ProblemName::Ex2),
            "ex3" | "4.3" => Ok(ProblemName::Ex3),
            "ex4" | "4.4" => Ok(ProblemName::Ex4),
            other => Err(Error::UnknownProblem(other.to_string())),
        }
    }
}

/// Optional overrides of the default problem parameters. Coefficients can
/// only be overridden on sides where they are constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemParams {
    pub beta_minus: Option<f64>,
    pub beta_plus: Option<f64>,
    pub r0: f64,
    pub theta_degrees: f64,
}

impl Default for ProblemParams {
    fn default() -> Self {
        Self {
            beta_minus: None,
            beta_plus: None,
            r0: 0.6,
            theta_degrees: 40.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    Circle { r0: f64 },
    /// `t²(x − 1)²x − y²` with `t = tan θ`.
    Teardrop { t2: f64 },
    Ellipse,
    Cardioid,
}

impl Shape {
    fn phi(self, p: Point2<f64>) -> f64 {
        let (x, y) = (p.x, p.y);
        match self {
            Shape::Circle { r0 } => x * x + y * y - r0 * r0,
            Shape::Teardrop { t2 } => t2 * (x - 1.0).powi(2) * x - y * y,
            Shape::Ellipse => 4.0 * x * x + 16.0 * y * y - 1.0,
            Shape::Cardioid => {
                let s = 3.0 * (x * x + y * y) - x;
                s * s - x * x - y * y
            }
        }
    }

    fn gradient(self, p: Point2<f64>) -> Vector2<f64> {
        let (x, y) = (p.x, p.y);
        match self {
            Shape::Circle { .. } => Vector2::new(2.0 * x, 2.0 * y),
            Shape::Teardrop { t2 } => Vector2::new(t2 * (3.0 * x * x - 4.0 * x + 1.0), -2.0 * y),
            Shape::Ellipse => Vector2::new(8.0 * x, 32.0 * y),
            Shape::Cardioid => {
                let s = 3.0 * (x * x + y * y) - x;
                Vector2::new(2.0 * s * (6.0 * x - 1.0) - 2.0 * x, 2.0 * s * 6.0 * y - 2.0 * y)
            }
        }
    }

    fn laplacian(self, p: Point2<f64>) -> f64 {
        let (x, y) = (p.x, p.y);
        match self {
            Shape::Circle { .. } => 4.0,
            Shape::Teardrop { t2 } => t2 * (6.0 * x - 4.0) - 2.0,
            Shape::Ellipse => 40.0,
            Shape::Cardioid => {
                let s = 3.0 * (x * x + y * y) - x;
                let gs = Vector2::new(6.0 * x - 1.0, 6.0 * y);
                2.0 * gs.norm_squared() + 24.0 * s - 4.0
            }
        }
    }

    fn level_set(self) -> LevelSet {
        LevelSet::new(move |p| self.phi(p)).with_gradient(move |p| self.gradient(p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Coefficient {
    Constant(f64),
    /// `1 + (x² − xy + y²)/2`.
    Quadratic,
    /// `xy + 3`.
    Bilinear,
}

impl Coefficient {
    fn value(self, p: Point2<f64>) -> f64 {
        match self {
            Coefficient::Constant(b) => b,
            Coefficient::Quadratic => 1.0 + 0.5 * (p.x * p.x - p.x * p.y + p.y * p.y),
            Coefficient::Bilinear => p.x * p.y + 3.0,
        }
    }

    fn gradient(self, p: Point2<f64>) -> Vector2<f64> {
        match self {
            Coefficient::Constant(_) => Vector2::zeros(),
            Coefficient::Quadratic => Vector2::new(p.x - 0.5 * p.y, p.y - 0.5 * p.x),
            Coefficient::Bilinear => Vector2::new(p.y, p.x),
        }
    }

    fn laplacian(self) -> f64 {
        match self {
            Coefficient::Quadratic => 2.0,
            Coefficient::Constant(_) | Coefficient::Bilinear => 0.0,
        }
    }

    fn constant(self) -> Option<f64> {
        match self {
            Coefficient::Constant(b) => Some(b),
            _ => None,
        }
    }
}

/// A benchmark interface problem with known exact solution.
#[derive(Debug, Clone)]
pub struct BenchmarkProblem {
    pub name: ProblemName,
    pub data: ProblemData,
    pub params: ProblemParams,
    /// Coefficient on each side when it is constant there.
    pub beta_minus_constant: Option<f64>,
    pub beta_plus_constant: Option<f64>,
}

fn coefficient(default: Coefficient, overridden: Option<f64>, side: Side) -> Result<Coefficient> {
    match (default, overridden) {
        (c, None) => Ok(c),
        (Coefficient::Constant(_), Some(b)) if b > 0.0 && b.is_finite() => Ok(Coefficient::Constant(b)),
        (Coefficient::Constant(_), Some(b)) => Err(Error::InvalidArgument(format!("β on the {side:?} side must be positive, got {b}"))),
        (_, Some(_)) => Err(Error::InvalidArgument(format!("β on the {side:?} side is variable for this problem"))),
    }
}

fn by_side<T: Copy>(side: Side, minus: T, plus: T) -> T {
    match side {
        Side::Minus => minus,
        Side::Plus => plus,
    }
}

/// `u = φ/β` on each side, so `[u] = 0` and `[β∂ₙu] = 0` hold on `φ = 0`.
fn quotient(shape: Shape, minus: Coefficient, plus: Coefficient) -> ProblemData {
    ProblemData {
        level_set: shape.level_set(),
        beta_minus: Arc::new(move |p| minus.value(p)),
        beta_plus: Arc::new(move |p| plus.value(p)),
        f: Arc::new(move |p, side| {
            let beta = by_side(side, minus, plus);
            let (b, gb) = (beta.value(p), beta.gradient(p));
            let phi = shape.phi(p);
            -shape.laplacian(p) + shape.gradient(p).dot(&gb) / b + phi * (beta.laplacian() / b - gb.norm_squared() / (b * b))
        }),
        exact_u: Some(Arc::new(move |p, side| shape.phi(p) / by_side(side, minus, plus).value(p))),
        exact_grad: Some(Arc::new(move |p, side| {
            let beta = by_side(side, minus, plus);
            let b = beta.value(p);
            (shape.gradient(p) * b - beta.gradient(p) * shape.phi(p)) / (b * b)
        })),
    }
}

fn circle(r0: f64, beta_minus: f64, beta_plus: f64) -> ProblemData {
    let shape = Shape::Circle { r0 };
    let shift = (1.0 / beta_minus - 1.0 / beta_plus) * r0.powi(3);
    ProblemData {
        level_set: shape.level_set(),
        beta_minus: Arc::new(move |_| beta_minus),
        beta_plus: Arc::new(move |_| beta_plus),
        f: Arc::new(|p, _| -9.0 * p.coords.norm()),
        exact_u: Some(Arc::new(move |p, side| {
            let r3 = p.coords.norm().powi(3);
            match side {
                Side::Minus => r3 / beta_minus,
                Side::Plus => r3 / beta_plus + shift,
            }
        })),
        exact_grad: Some(Arc::new(move |p, side| p.coords * (3.0 * p.coords.norm() / by_side(side, beta_minus, beta_plus)))),
    }
}

/// Builds one of the benchmark problems. Defaults: `β⁻ = 1, β⁺ = 10` (ex1),
/// `β⁻ = 1, β⁺ = 1000, θ = 40°` (ex2), `β⁺ = 1` (ex3), `β⁺ = 100` (ex4).
pub fn make_problem(name: ProblemName, params: ProblemParams) -> Result<BenchmarkProblem> {
    let (minus, plus) = match name {
        ProblemName::Ex1 => (Coefficient::Constant(1.0), Coefficient::Constant(10.0)),
        ProblemName::Ex2 => (Coefficient::Constant(1.0), Coefficient::Constant(1000.0)),
        ProblemName::Ex3 => (Coefficient::Quadratic, Coefficient::Constant(1.0)),
        ProblemName::Ex4 => (Coefficient::Bilinear, Coefficient::Constant(100.0)),
    };
    let minus = coefficient(minus, params.beta_minus, Side::Minus)?;
    let plus = coefficient(plus, params.beta_plus, Side::Plus)?;
    let data = match name {
        ProblemName::Ex1 => {
            if !(params.r0 > 0.0 && params.r0 < 1.0) {
                return Err(Error::InvalidArgument(format!("radius must lie in (0, 1), got {}", params.r0)));
            }
            circle(params.r0, minus.constant().unwrap(), plus.constant().unwrap())
        }
        ProblemName::Ex2 => {
            let t = params.theta_degrees.to_radians().tan();
            quotient(Shape::Teardrop { t2: t * t }, minus, plus)
        }
        ProblemName::Ex3 => quotient(Shape::Ellipse, minus, plus),
        ProblemName::Ex4 => quotient(Shape::Cardioid, minus, plus),
    };
    Ok(BenchmarkProblem {
        name,
        data,
        params,
        beta_minus_constant: minus.constant(),
        beta_plus_constant: plus.constant(),
    })
}
