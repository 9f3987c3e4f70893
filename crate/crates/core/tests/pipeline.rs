use afc_core::benchmarks::problem_equilibrium;
use afc_core::{classify_and_order, solve, GridId, Limiter, Mesh, SolveOptions};

/// Euler's formula for a triangulated disk: with F cells and B boundary
/// edges there are (3F + B) / 2 edges, hence (F + B) / 2 + 1 vertices.
#[test]
fn refinement_matches_euler_counts() {
    for (grid, cells0) in [(GridId::One, 2), (GridId::Two, 4)] {
        for level in 0..5 {
            let mesh = Mesh::uniform(grid, level);
            let cells = cells0 << (2 * level);
            let boundary = 4 << level;
            assert_eq!(mesh.cells.len(), cells);
            assert_eq!(mesh.boundary_edges.len(), boundary);
            assert_eq!(mesh.num_nodes(), (cells + boundary) / 2 + 1);
            let area: f64 = mesh.cells.iter().map(|c| mesh.cell_area(c)).sum();
            assert!((area - 1.0).abs() < 1e-14);
        }
    }
}

fn max_nodal_error(limiter: Limiter) -> f64 {
    let spec = problem_equilibrium(1e-2).unwrap();
    let mesh = classify_and_order(Mesh::uniform(GridId::Two, 3), &spec).unwrap();
    let options = SolveOptions {
        limiter,
        ..SolveOptions::default()
    };
    let report = solve(&mesh, &spec, &options).unwrap();
    assert!(report.converged);
    mesh.vertices
        .iter()
        .zip(&report.u)
        .map(|(x, u)| (u - x[0]).abs())
        .fold(0.0, f64::max)
}

/// `u = x` solves the equilibrium problem and lies in the P1 space, so a
/// consistent scheme must return it up to the solver tolerance.
#[test]
fn linear_steady_state_is_reproduced() {
    assert!(max_nodal_error(Limiter::Galerkin) < 1e-6);
    assert!(max_nodal_error(Limiter::Wmc) < 1e-6);
}

#[test]
fn plain_convex_limiting_is_not_well_balanced() {
    assert!(max_nodal_error(Limiter::Mc) > 1e-4);
}
