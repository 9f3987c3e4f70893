//! Benchmark problems on the unit square, error norms and convergence rates.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mesh::{classify_and_order, GridId, Mesh};
use crate::problem::{BoundaryRule, ExactSolution, ProblemSpec, Side};
use crate::solver::{solve, SolveOptions};
use crate::Point;

pub const PROBLEM_NAMES: [&str; 5] = [
    "interior-layers",
    "boundary-layers",
    "circular-layers",
    "circular-convection",
    "equilibrium",
];

/// Looks up a benchmark by its command-line name. `epsilon` overrides the
/// default diffusion coefficient.
pub fn problem_by_name(name: &str, epsilon: Option<f64>) -> Option<Result<ProblemSpec>> {
    let spec = match name {
        "interior-layers" => {
            let mut spec = problem_interior_layers();
            if let Some(eps) = epsilon {
                spec.epsilon = eps;
            }
            Ok(spec)
        }
        "boundary-layers" => problem_boundary_layers(epsilon.unwrap_or(1e-3)),
        "circular-layers" => Ok(problem_circular_layers(epsilon.unwrap_or(1e-4))),
        "circular-convection" => {
            let mut spec = problem_circular_convection();
            if let Some(eps) = epsilon {
                spec.epsilon = eps;
            }
            Ok(spec)
        }
        "equilibrium" => problem_equilibrium(epsilon.unwrap_or(1e-6)),
        _ => return None,
    };
    Some(spec.and_then(|s| {
        if s.epsilon >= 0.0 {
            Ok(s)
        } else {
            Err(Error::InvalidParameter("epsilon must be nonnegative"))
        }
    }))
}

/// Piecewise constant source and reaction producing sharp interior layers.
pub fn problem_interior_layers() -> ProblemSpec {
    ProblemSpec {
        name: String::from("interior-layers"),
        epsilon: 1e-8,
        velocity: Box::new(|_| [1.0, 0.0]),
        reaction: Box::new(|x| if x[0] > 0.75 { 25.0 } else { 0.0 }),
        source: Box::new(|x| {
            if (0.1..=0.6).contains(&x[0]) && (0.25..=0.75).contains(&x[1]) {
                10.0
            } else {
                0.0
            }
        }),
        dirichlet: Box::new(|_| 0.0),
        boundary: BoundaryRule::AllDirichlet,
        exact: None,
    }
}

/// Manufactured solution with exponential layers at `x = 1` and `y = 1`.
pub fn problem_boundary_layers(epsilon: f64) -> Result<ProblemSpec> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter("boundary-layers needs epsilon > 0"));
    }
    let eps = epsilon;
    // Exponentials underflow to zero away from the layers, which is exact to
    // double precision.
    let ex = move |x: f64| libm::exp(2.0 * (x - 1.0) / eps);
    let ey = move |y: f64| libm::exp(3.0 * (y - 1.0) / eps);
    let value = move |p: Point| {
        let (x, y) = (p[0], p[1]);
        let (a, b) = (ex(x), ey(y));
        x * y * y - y * y * a - x * b + a * b
    };
    let gradient = move |p: Point| {
        let (x, y) = (p[0], p[1]);
        let (a, b) = (ex(x), ey(y));
        [
            y * y - y * y * 2.0 / eps * a - b + 2.0 / eps * a * b,
            2.0 * x * y - 2.0 * y * a - x * 3.0 / eps * b + 3.0 / eps * a * b,
        ]
    };
    // -eps * lap(u) + (2, 3) . grad(u); the O(1/eps) terms cancel exactly.
    let source = move |p: Point| {
        let (x, y) = (p[0], p[1]);
        let (a, b) = (ex(x), ey(y));
        2.0 * (y * y - b) + 6.0 * y * (x - a) + 2.0 * eps * (a - x)
    };
    Ok(ProblemSpec {
        name: String::from("boundary-layers"),
        epsilon,
        velocity: Box::new(|_| [2.0, 3.0]),
        reaction: Box::new(|_| 0.0),
        source: Box::new(source),
        dirichlet: Box::new(value),
        boundary: BoundaryRule::AllDirichlet,
        exact: Some(ExactSolution {
            value: Box::new(value),
            gradient: Box::new(gradient),
        }),
    })
}

fn in_annulus(x: Point) -> bool {
    let r = libm::sqrt(x[0] * x[0] + x[1] * x[1]);
    (0.25..=0.75).contains(&r)
}

/// Rotating flow with a source supported on an annulus and a homogeneous
/// Neumann condition on the open bottom edge.
pub fn problem_circular_layers(epsilon: f64) -> ProblemSpec {
    ProblemSpec {
        name: String::from("circular-layers"),
        epsilon,
        velocity: Box::new(|x| [x[1], -x[0]]),
        reaction: Box::new(|x| if in_annulus(x) { 0.0 } else { 1.0 }),
        source: Box::new(|x| if in_annulus(x) { 1.0 } else { 0.0 }),
        dirichlet: Box::new(|_| 0.0),
        boundary: BoundaryRule::NeumannOn(alloc::vec![Side::Bottom]),
        exact: None,
    }
}

fn circular_ridge(x: Point) -> f64 {
    let r = libm::sqrt(x[0] * x[0] + x[1] * x[1]);
    libm::exp(-100.0 * (r - 0.7) * (r - 0.7))
}

fn circular_ridge_gradient(x: Point) -> Point {
    let r = libm::sqrt(x[0] * x[0] + x[1] * x[1]);
    if r == 0.0 {
        return [0.0, 0.0];
    }
    let scale = -200.0 * (r - 0.7) * circular_ridge(x) / r;
    [scale * x[0], scale * x[1]]
}

/// Pure convection with reaction; the smooth Gaussian ridge is transported
/// along circles, so `f = c u` with `c = 1`.
pub fn problem_circular_convection() -> ProblemSpec {
    ProblemSpec {
        name: String::from("circular-convection"),
        epsilon: 0.0,
        velocity: Box::new(|x| [x[1], -x[0]]),
        reaction: Box::new(|_| 1.0),
        source: Box::new(circular_ridge),
        dirichlet: Box::new(circular_ridge),
        boundary: BoundaryRule::Inflow,
        exact: Some(ExactSolution {
            value: Box::new(circular_ridge),
            gradient: Box::new(circular_ridge_gradient),
        }),
    }
}

/// Constant-coefficient problem whose exact solution `u = x` is a linear
/// steady state (`v = (1, 0)`, `c = 0`, `f = 1`).
pub fn problem_equilibrium(epsilon: f64) -> Result<ProblemSpec> {
    if epsilon < 0.0 {
        return Err(Error::InvalidParameter("epsilon must be nonnegative"));
    }
    Ok(ProblemSpec {
        name: String::from("equilibrium"),
        epsilon,
        velocity: Box::new(|_| [1.0, 0.0]),
        reaction: Box::new(|_| 0.0),
        source: Box::new(|_| 1.0),
        dirichlet: Box::new(|x| x[0]),
        boundary: BoundaryRule::AllDirichlet,
        exact: Some(ExactSolution {
            value: Box::new(|x| x[0]),
            gradient: Box::new(|_| [1.0, 0.0]),
        }),
    })
}

/// Seven-point degree-5 rule on the reference triangle:
/// (barycentric coordinates, weight relative to the cell area).
const DEGREE5_RULE: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059_715_871_789_769_82;
    const B1: f64 = 0.470_142_064_105_115_1;
    const W1: f64 = 0.132_394_152_788_506_2;
    const A2: f64 = 0.797_426_985_353_087_3;
    const B2: f64 = 0.101_286_507_323_456_3;
    const W2: f64 = 0.125_939_180_544_827_2;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

/// `L1` and `L2` norms of `exact - u_h`.
pub fn error_norms(mesh: &Mesh, u: &[f64], exact: Option<&ExactSolution>) -> Result<(f64, f64)> {
    let exact = exact.ok_or(Error::MissingExactSolution)?;
    if u.len() != mesh.num_nodes() {
        return Err(Error::LengthMismatch {
            expected: mesh.num_nodes(),
            found: u.len(),
        });
    }
    let (mut l1, mut l2sq) = (0.0, 0.0);
    for cell in &mesh.cells {
        let p = mesh.cell_points(cell);
        let area = mesh.cell_area(cell);
        for (lambda, w) in DEGREE5_RULE {
            let x = [
                lambda[0] * p[0][0] + lambda[1] * p[1][0] + lambda[2] * p[2][0],
                lambda[0] * p[0][1] + lambda[1] * p[1][1] + lambda[2] * p[2][1],
            ];
            let uh = lambda[0] * u[cell[0]] + lambda[1] * u[cell[1]] + lambda[2] * u[cell[2]];
            let e = (exact.value)(x) - uh;
            l1 += area * w * e.abs();
            l2sq += area * w * e * e;
        }
    }
    Ok((l1, libm::sqrt(l2sq)))
}

/// Experimental order of convergence `log2(coarse / fine)`; `None` unless
/// both errors are positive.
pub fn eoc(err_coarse: f64, err_fine: f64) -> Option<f64> {
    (err_coarse > 0.0 && err_fine > 0.0).then(|| libm::log2(err_coarse / err_fine))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord {
    pub level: u32,
    pub ndof: usize,
    pub h: f64,
    pub l1: f64,
    pub l2: f64,
    pub eoc_l1: Option<f64>,
    pub eoc_l2: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves `spec` on every level of `levels` and records errors and rates.
/// Levels that fail to converge are flagged and the study continues.
pub fn convergence_study(
    spec: &ProblemSpec,
    grid: GridId,
    levels: core::ops::RangeInclusive<u32>,
    options: &SolveOptions,
) -> Result<Vec<ErrorRecord>> {
    let mut records: Vec<ErrorRecord> = Vec::new();
    for level in levels {
        let mesh = classify_and_order(Mesh::uniform(grid, level), spec)?;
        let report = solve(&mesh, spec, options)?;
        let (l1, l2) = error_norms(&mesh, &report.u, spec.exact.as_ref())?;
        let (eoc_l1, eoc_l2) = match records.last() {
            Some(prev) if prev.level + 1 == level => (eoc(prev.l1, l1), eoc(prev.l2, l2)),
            _ => (None, None),
        };
        records.push(ErrorRecord {
            level,
            ndof: mesh.num_nodes(),
            h: mesh.h,
            l1,
            l2,
            eoc_l1,
            eoc_l2,
            iterations: report.iterations,
            converged: report.converged,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_layers_data() {
        let p = problem_interior_layers();
        assert_eq!((p.source)([0.3, 0.5]), 10.0);
        assert_eq!((p.source)([0.05, 0.5]), 0.0);
        assert_eq!((p.source)([0.6, 0.75]), 10.0);
        assert_eq!((p.reaction)([0.8, 0.1]), 25.0);
        assert_eq!((p.reaction)([0.5, 0.5]), 0.0);
        assert_eq!((p.reaction)([0.75, 0.5]), 0.0);
        assert_eq!((p.dirichlet)([0.0, 0.3]), 0.0);
        assert_eq!(p.net_source([0.3, 0.5], 1.0), 10.0);
        assert_eq!(p.net_source([0.8, 0.5], 0.2), -5.0);
        assert_eq!(p.net_source([0.05, 0.05], 3.0), 0.0);
    }

    #[test]
    fn boundary_layers_data() {
        assert!(problem_boundary_layers(0.0).is_err());
        let p = problem_boundary_layers(1e-3).unwrap();
        let u = &p.exact.as_ref().unwrap().value;
        assert!(u([1.0, 1.0]).abs() < 1e-15);
        assert!(u([0.0, 0.7]).abs() < 1e-300);
        assert_eq!(u([0.5, 0.5]), 0.125);
    }

    /// Reference values from a 40-digit evaluation of `-eps lap(u) + v . grad(u)`
    /// and of the gradient of the manufactured solution.
    #[test]
    fn boundary_layers_source_matches_high_precision_values() {
        let p = problem_boundary_layers(1e-3).unwrap();
        let ex = p.exact.as_ref().unwrap();
        // The layers are 1e-3 thick; sample outside and inside them.
        let cases = [
            ([0.5, 0.5], 1.999, [0.25, 0.5]),
            (
                [0.999, 0.4],
                2.3910679907986028,
                [-43.147290635716061, 0.69093177341070985],
            ),
            (
                [0.3, 0.9985],
                3.7684865069235154,
                [0.98589325346175769, -9.3989968844180758],
            ),
            (
                [0.9992, 0.9995],
                6.3315745543251812,
                [-312.51506902461332, -532.11355121973115],
            ),
        ];
        for (x, f, g) in cases {
            let got = (p.source)(x);
            assert!((got - f).abs() <= 1e-12 * f.abs(), "{x:?}: {got} vs {f}");
            let grad = (ex.gradient)(x);
            for q in 0..2 {
                assert!(
                    (grad[q] - g[q]).abs() <= 1e-12 * g[q].abs(),
                    "{x:?}: {grad:?}"
                );
            }
        }
    }

    #[test]
    fn circular_layers_data() {
        let p = problem_circular_layers(1e-4);
        assert_eq!((p.source)([0.5, 0.0]), 1.0);
        assert_eq!((p.reaction)([0.5, 0.0]), 0.0);
        assert_eq!((p.source)([0.9, 0.9]), 0.0);
        assert_eq!((p.reaction)([0.9, 0.9]), 1.0);
        assert_eq!((p.source)([0.25, 0.0]), 1.0);
        assert_eq!((p.velocity)([1.0, 0.0]), [0.0, -1.0]);
    }

    #[test]
    fn circular_convection_data() {
        let p = problem_circular_convection();
        let u = &p.exact.as_ref().unwrap().value;
        assert_eq!(u([0.7, 0.0]), 1.0);
        assert!((u([0.0, 0.0]) - libm::exp(-49.0)).abs() < 1e-36);
        assert!((u([0.0, 0.0]) - 5.24e-22).abs() < 1e-24);
        assert!(p.is_dirichlet_edge(Side::Left, [0.0, 0.25], [0.0, 0.75]));
        assert!(p.is_dirichlet_edge(Side::Top, [0.0, 1.0], [0.5, 1.0]));
        assert!(!p.is_dirichlet_edge(Side::Right, [1.0, 0.0], [1.0, 0.5]));
        assert!(!p.is_dirichlet_edge(Side::Bottom, [0.0, 0.0], [0.5, 0.0]));
        let x = [0.3, 0.4];
        assert_eq!((p.source)(x), (p.reaction)(x) * u(x));
    }

    #[test]
    fn norms_of_simple_fields() {
        let mesh = Mesh::uniform(GridId::Two, 2);
        let lin = ExactSolution {
            value: Box::new(|x| 2.0 * x[0] - x[1] + 0.5),
            gradient: Box::new(|_| [2.0, -1.0]),
        };
        let u: Vec<f64> = mesh.vertices.iter().map(|&x| (lin.value)(x)).collect();
        let (l1, l2) = error_norms(&mesh, &u, Some(&lin)).unwrap();
        assert!(l1 <= 1e-14 && l2 <= 1e-14);

        let zero = alloc::vec![0.0; mesh.num_nodes()];
        let one = ExactSolution {
            value: Box::new(|_| 1.0),
            gradient: Box::new(|_| [0.0, 0.0]),
        };
        let (l1, l2) = error_norms(&mesh, &zero, Some(&one)).unwrap();
        assert!((l1 - 1.0).abs() < 1e-14 && (l2 - 1.0).abs() < 1e-14);

        let x = ExactSolution {
            value: Box::new(|x| x[0]),
            gradient: Box::new(|_| [1.0, 0.0]),
        };
        let (l1, l2) = error_norms(&mesh, &zero, Some(&x)).unwrap();
        assert!((l1 - 0.5).abs() < 1e-14);
        assert!((l2 - 1.0 / libm::sqrt(3.0)).abs() < 1e-14);

        assert_eq!(
            error_norms(&mesh, &zero, None),
            Err(Error::MissingExactSolution)
        );
    }

    #[test]
    fn eoc_values() {
        assert_eq!(eoc(0.4, 0.1), Some(2.0));
        assert_eq!(eoc(0.3, 0.3), Some(0.0));
        assert_eq!(eoc(0.0, 0.1), None);
        let rate = eoc(1.2726041914149e-3, 2.9652705261797e-4).unwrap();
        assert!((rate - 2.101548143161334).abs() < 1e-12);
    }

    #[test]
    fn lookup_by_name() {
        for name in PROBLEM_NAMES {
            assert!(problem_by_name(name, None).unwrap().is_ok());
        }
        assert!(problem_by_name("bogus", None).is_none());
        let p = problem_by_name("circular-layers", Some(1e-6))
            .unwrap()
            .unwrap();
        assert_eq!(p.epsilon, 1e-6);
    }
}
