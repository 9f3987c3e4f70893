//! Problem data for `-eps * lap(u) + v . grad(u) + c u = f` on the unit square.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::{dot, Point};

pub type ScalarField = Box<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorField = Box<dyn Fn(Point) -> Point + Send + Sync>;

/// One side of the unit square. The discriminant doubles as the boundary tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Bottom = 0,
    Right = 1,
    Top = 2,
    Left = 3,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];

    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn from_tag(tag: u8) -> Option<Side> {
        Side::ALL.get(tag as usize).copied()
    }

    pub fn outward_normal(self) -> Point {
        match self {
            Side::Bottom => [0.0, -1.0],
            Side::Right => [1.0, 0.0],
            Side::Top => [0.0, 1.0],
            Side::Left => [-1.0, 0.0],
        }
    }
}

/// Which boundary edges carry Dirichlet data.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryRule {
    /// `Gamma_D = Gamma`.
    AllDirichlet,
    /// Homogeneous Neumann on the open sides listed; Dirichlet elsewhere.
    NeumannOn(Vec<Side>),
    /// Dirichlet where `v . n < 0` at the edge midpoint. Characteristic edges
    /// (`v . n = 0`) are not Dirichlet.
    Inflow,
}

/// Exact solution of a benchmark, when one is known.
pub struct ExactSolution {
    pub value: ScalarField,
    pub gradient: VectorField,
}

pub struct ProblemSpec {
    pub name: String,
    pub epsilon: f64,
    pub velocity: VectorField,
    pub reaction: ScalarField,
    pub source: ScalarField,
    pub dirichlet: ScalarField,
    pub boundary: BoundaryRule,
    pub exact: Option<ExactSolution>,
}

impl ProblemSpec {
    /// Whether a boundary edge with endpoints `a`, `b` on `side` is Dirichlet.
    pub fn is_dirichlet_edge(&self, side: Side, a: Point, b: Point) -> bool {
        match &self.boundary {
            BoundaryRule::AllDirichlet => true,
            BoundaryRule::NeumannOn(sides) => !sides.contains(&side),
            BoundaryRule::Inflow => {
                let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
                dot((self.velocity)(mid), side.outward_normal()) < 0.0
            }
        }
    }

    /// Net source `f(x) - c(x) u` at a point.
    pub fn net_source(&self, x: Point, u: f64) -> f64 {
        net_source((self.source)(x), (self.reaction)(x), u)
    }
}

impl core::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("epsilon", &self.epsilon)
            .field("boundary", &self.boundary)
            .field("exact", &self.exact.is_some())
            .finish_non_exhaustive()
    }
}

/// `s = f - c u`.
#[inline]
pub fn net_source(f: f64, c: f64, u: f64) -> f64 {
    f - c * u
}
