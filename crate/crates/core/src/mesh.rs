//! Structured triangulations of the unit square and their red refinement.
//!
//! After [`classify_and_order`] the vertices are renumbered so that nodes
//! `0..num_free` carry unknowns and nodes `num_free..` carry Dirichlet data.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::problem::{ProblemSpec, Side};
use crate::sparse::Pattern;
use crate::{cross, dot, norm, sub, Point};

/// Coarse triangulation family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridId {
    /// Two triangles split along the diagonal from (0,0) to (1,1).
    One,
    /// Four triangles meeting at the center (criss-cross).
    Two,
}

impl GridId {
    pub fn from_id(id: u32) -> Result<GridId> {
        match id {
            1 => Ok(GridId::One),
            2 => Ok(GridId::Two),
            other => Err(Error::UnknownGrid(other)),
        }
    }

    pub fn id(self) -> u32 {
        match self {
            GridId::One => 1,
            GridId::Two => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    /// Counterclockwise vertex triples.
    pub cells: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub level: u32,
    /// Maximum cell diameter.
    pub h: f64,
    /// `permutation[new] = old` relative to the unordered construction.
    pub permutation: Vec<usize>,
    /// Number of non-Dirichlet nodes (`M_h`). Equal to the vertex count until
    /// the mesh is classified.
    pub num_free: usize,
}

/// Level-0 triangulation of grid family `grid_id`.
pub fn build_level0(grid_id: u32) -> Result<Mesh> {
    Ok(Mesh::coarse(GridId::from_id(grid_id)?))
}

impl Mesh {
    pub fn coarse(grid: GridId) -> Mesh {
        let mut vertices = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let cells = match grid {
            GridId::One => vec![[0, 1, 2], [0, 2, 3]],
            GridId::Two => {
                vertices.push([0.5, 0.5]);
                vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]]
            }
        };
        let boundary_edges = vec![
            BoundaryEdge {
                nodes: [0, 1],
                side: Side::Bottom,
            },
            BoundaryEdge {
                nodes: [1, 2],
                side: Side::Right,
            },
            BoundaryEdge {
                nodes: [2, 3],
                side: Side::Top,
            },
            BoundaryEdge {
                nodes: [3, 0],
                side: Side::Left,
            },
        ];
        Mesh::from_parts(vertices, cells, boundary_edges, 0)
    }

    /// Grid family `grid` refined `level` times.
    pub fn uniform(grid: GridId, level: u32) -> Mesh {
        (0..level).fold(Mesh::coarse(grid), |m, _| refine(&m))
    }

    fn from_parts(
        vertices: Vec<Point>,
        cells: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
        level: u32,
    ) -> Mesh {
        let n = vertices.len();
        let mut mesh = Mesh {
            vertices,
            cells,
            boundary_edges,
            level,
            h: 0.0,
            permutation: (0..n).collect(),
            num_free: n,
        };
        mesh.h = mesh
            .cells
            .iter()
            .map(|c| mesh.cell_diameter(c))
            .fold(0.0, f64::max);
        mesh
    }

    pub fn num_nodes(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_dirichlet(&self, i: usize) -> bool {
        i >= self.num_free
    }

    pub fn cell_points(&self, cell: &[usize; 3]) -> [Point; 3] {
        [
            self.vertices[cell[0]],
            self.vertices[cell[1]],
            self.vertices[cell[2]],
        ]
    }

    fn cell_diameter(&self, cell: &[usize; 3]) -> f64 {
        let [a, b, c] = self.cell_points(cell);
        norm(sub(a, b)).max(norm(sub(b, c))).max(norm(sub(c, a)))
    }

    pub fn cell_area(&self, cell: &[usize; 3]) -> f64 {
        let [a, b, c] = self.cell_points(cell);
        0.5 * cross(sub(b, a), sub(c, a))
    }

    /// Gradients of the three barycentric coordinates on `cell`.
    pub fn cell_gradients(&self, cell: &[usize; 3]) -> [Point; 3] {
        barycentric_gradients(self.cell_points(cell))
    }

    /// Largest interior angle over all cells, in radians.
    pub fn max_angle(&self) -> f64 {
        let mut worst = 0.0f64;
        for cell in &self.cells {
            let p = self.cell_points(cell);
            for k in 0..3 {
                let e1 = sub(p[(k + 1) % 3], p[k]);
                let e2 = sub(p[(k + 2) % 3], p[k]);
                let cos = dot(e1, e2) / (norm(e1) * norm(e2));
                worst = worst.max(libm::acos(cos.clamp(-1.0, 1.0)));
            }
        }
        worst
    }

    /// Stencils `N_i` of the P1 space.
    pub fn adjacency(&self) -> Pattern {
        let mut rows: Vec<Vec<usize>> = (0..self.num_nodes()).map(|i| vec![i]).collect();
        for cell in &self.cells {
            for &a in cell {
                for &b in cell {
                    if a != b {
                        rows[a].push(b);
                    }
                }
            }
        }
        Pattern::from_rows(&rows)
    }

    /// Cells incident to each vertex, in increasing cell order.
    pub fn vertex_cells(&self) -> Vec<Vec<usize>> {
        let mut incident = vec![Vec::new(); self.num_nodes()];
        for (k, cell) in self.cells.iter().enumerate() {
            for &v in cell {
                incident[v].push(k);
            }
        }
        incident
    }
}

pub(crate) fn barycentric_gradients(p: [Point; 3]) -> [Point; 3] {
    let twice_area = cross(sub(p[1], p[0]), sub(p[2], p[0]));
    let mut g = [[0.0; 2]; 3];
    for k in 0..3 {
        let a = p[(k + 1) % 3];
        let b = p[(k + 2) % 3];
        g[k] = [(a[1] - b[1]) / twice_area, (b[0] - a[0]) / twice_area];
    }
    g
}

/// Red refinement: every triangle is split into four similar ones through its
/// edge midpoints. The result is unclassified.
pub fn refine(mesh: &Mesh) -> Mesh {
    let mut vertices = mesh.vertices.clone();
    let mut midpoints: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
        let key = (a.min(b), a.max(b));
        *midpoints.entry(key).or_insert_with(|| {
            let (pa, pb) = (vertices[a], vertices[b]);
            vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
            vertices.len() - 1
        })
    };

    let mut cells = Vec::with_capacity(4 * mesh.cells.len());
    for &[a, b, c] in &mesh.cells {
        let ab = midpoint(a, b, &mut vertices);
        let bc = midpoint(b, c, &mut vertices);
        let ca = midpoint(c, a, &mut vertices);
        cells.push([a, ab, ca]);
        cells.push([ab, b, bc]);
        cells.push([ca, bc, c]);
        cells.push([ab, bc, ca]);
    }

    let mut boundary_edges = Vec::with_capacity(2 * mesh.boundary_edges.len());
    for edge in &mesh.boundary_edges {
        let [a, b] = edge.nodes;
        let m = midpoint(a, b, &mut vertices);
        boundary_edges.push(BoundaryEdge {
            nodes: [a, m],
            side: edge.side,
        });
        boundary_edges.push(BoundaryEdge {
            nodes: [m, b],
            side: edge.side,
        });
    }

    Mesh::from_parts(vertices, cells, boundary_edges, mesh.level + 1)
}

/// Renumbers the nodes so that non-Dirichlet nodes come first.
///
/// A node is Dirichlet if it lies on the closure of any Dirichlet boundary
/// edge. The relative order inside each block is preserved.
pub fn classify_and_order(mesh: Mesh, spec: &ProblemSpec) -> Result<Mesh> {
    let n = mesh.num_nodes();
    let mut dirichlet = vec![false; n];
    for edge in &mesh.boundary_edges {
        let [a, b] = edge.nodes;
        if spec.is_dirichlet_edge(edge.side, mesh.vertices[a], mesh.vertices[b]) {
            dirichlet[a] = true;
            dirichlet[b] = true;
        }
    }
    if spec.epsilon > 0.0 && !dirichlet.iter().any(|&d| d) {
        return Err(Error::NoDirichletBoundary);
    }

    let order: Vec<usize> = (0..n)
        .filter(|&i| !dirichlet[i])
        .chain((0..n).filter(|&i| dirichlet[i]))
        .collect();
    let num_free = dirichlet.iter().filter(|&&d| !d).count();
    let mut new_of_old = vec![0; n];
    for (new, &old) in order.iter().enumerate() {
        new_of_old[old] = new;
    }

    Ok(Mesh {
        vertices: order.iter().map(|&old| mesh.vertices[old]).collect(),
        cells: mesh
            .cells
            .iter()
            .map(|c| [new_of_old[c[0]], new_of_old[c[1]], new_of_old[c[2]]])
            .collect(),
        boundary_edges: mesh
            .boundary_edges
            .iter()
            .map(|e| BoundaryEdge {
                nodes: [new_of_old[e.nodes[0]], new_of_old[e.nodes[1]]],
                side: e.side,
            })
            .collect(),
        level: mesh.level,
        h: mesh.h,
        permutation: order.iter().map(|&old| mesh.permutation[old]).collect(),
        num_free,
    })
}

/// Fictitious node `x_i + (x_i - x_j)` and the cell used to extrapolate `u_h`
/// to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorPoint {
    pub i: usize,
    pub j: usize,
    pub point: Point,
    pub cell: usize,
    /// The fictitious node lies in `cell`.
    pub contains_point: bool,
    /// The half line from `x_i` away from `x_j` enters `cell`. False only for
    /// boundary nodes whose half line leaves the domain.
    pub on_half_line: bool,
}

const GEOM_TOL: f64 = 1e-12;

/// Selects the cell `K^i_j` among `incident` (the cells containing `x_i`).
///
/// Preference order: a cell containing the fictitious node, then a cell cut
/// by the half line, then the cell whose angular sector is closest to the half
/// line direction. Ties go to the smallest cell index.
pub fn mirror_cell(mesh: &Mesh, incident: &[usize], i: usize, j: usize) -> MirrorPoint {
    let xi = mesh.vertices[i];
    let w = sub(xi, mesh.vertices[j]);
    let point = [xi[0] + w[0], xi[1] + w[1]];
    let wn = norm(w);

    let mut in_cone: Option<usize> = None;
    let mut closest: Option<(f64, usize)> = None;
    for &k in incident {
        let cell = &mesh.cells[k];
        let pos = cell
            .iter()
            .position(|&v| v == i)
            .expect("incident cell must contain the node");
        let ea = sub(mesh.vertices[cell[(pos + 1) % 3]], xi);
        let eb = sub(mesh.vertices[cell[(pos + 2) % 3]], xi);
        let ca = cross(ea, w) / (norm(ea) * wn);
        let cb = cross(w, eb) / (norm(eb) * wn);
        if ca >= -GEOM_TOL && cb >= -GEOM_TOL {
            if contains(mesh.cell_points(cell), point) {
                return MirrorPoint {
                    i,
                    j,
                    point,
                    cell: k,
                    contains_point: true,
                    on_half_line: true,
                };
            }
            in_cone.get_or_insert(k);
        } else {
            let gap = angle_between(ea, w).min(angle_between(eb, w));
            if closest.map_or(true, |(best, _)| gap < best) {
                closest = Some((gap, k));
            }
        }
    }
    match (in_cone, closest) {
        (Some(k), _) => MirrorPoint {
            i,
            j,
            point,
            cell: k,
            contains_point: false,
            on_half_line: true,
        },
        (None, Some((_, k))) => MirrorPoint {
            i,
            j,
            point,
            cell: k,
            contains_point: false,
            on_half_line: false,
        },
        (None, None) => panic!("node {i} has no incident cells"),
    }
}

fn angle_between(a: Point, b: Point) -> f64 {
    libm::atan2(cross(a, b).abs(), dot(a, b))
}

/// Barycentric coordinates of `x` with respect to triangle `p`.
pub fn barycentric(p: [Point; 3], x: Point) -> [f64; 3] {
    let twice_area = cross(sub(p[1], p[0]), sub(p[2], p[0]));
    let l1 = cross(sub(x, p[0]), sub(p[2], p[0])) / twice_area;
    let l2 = cross(sub(p[1], p[0]), sub(x, p[0])) / twice_area;
    [1.0 - l1 - l2, l1, l2]
}

fn contains(p: [Point; 3], x: Point) -> bool {
    barycentric(p, x).iter().all(|&l| l >= -GEOM_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks;
    use core::f64::consts::FRAC_PI_2;

    #[test]
    fn level0_layouts() {
        let g1 = build_level0(1).unwrap();
        assert_eq!((g1.cells.len(), g1.num_nodes()), (2, 4));
        let g2 = build_level0(2).unwrap();
        assert_eq!((g2.cells.len(), g2.num_nodes()), (4, 5));
        assert_eq!(build_level0(3), Err(Error::UnknownGrid(3)));
        for m in [&g1, &g2] {
            assert!(m.cells.iter().all(|c| m.cell_area(c) > 0.0));
            assert!(m.max_angle() <= FRAC_PI_2 + 1e-12);
            let area: f64 = m.cells.iter().map(|c| m.cell_area(c)).sum();
            assert!((area - 1.0).abs() < 1e-15);
        }
        assert_eq!(g1.h, core::f64::consts::SQRT_2);
        assert_eq!(g2.h, 1.0);
    }

    #[test]
    fn refinement_counts() {
        let g1 = refine(&Mesh::coarse(GridId::One));
        assert_eq!((g1.cells.len(), g1.num_nodes(), g1.level), (8, 9, 1));
        let g2 = Mesh::uniform(GridId::Two, 3);
        assert_eq!(g2.cells.len(), 4 * 64);
        assert_eq!(refine(&refine(&Mesh::coarse(GridId::Two))).cells.len(), 64);
        for level in 0..5u32 {
            let n = 1usize << level;
            let m1 = Mesh::uniform(GridId::One, level);
            assert_eq!(m1.cells.len(), 2 * 4usize.pow(level));
            assert_eq!(m1.num_nodes(), (n + 1) * (n + 1));
            let m2 = Mesh::uniform(GridId::Two, level);
            assert_eq!(m2.num_nodes(), (n + 1) * (n + 1) + n * n);
            assert_eq!(m1.boundary_edges.len(), 4 * n);
            let child = refine(&m1);
            assert!((child.h - m1.h / 2.0).abs() <= 1e-15);
            assert!(child.max_angle() <= FRAC_PI_2 + 1e-12);
        }
    }

    #[test]
    fn refinement_is_conforming() {
        // Every interior edge is shared by exactly two cells, every boundary
        // edge by one.
        let m = Mesh::uniform(GridId::Two, 3);
        let mut count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for c in &m.cells {
            for k in 0..3 {
                let (a, b) = (c[k], c[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let boundary: Vec<_> = m
            .boundary_edges
            .iter()
            .map(|e| (e.nodes[0].min(e.nodes[1]), e.nodes[0].max(e.nodes[1])))
            .collect();
        for (edge, n) in count {
            let expected = if boundary.contains(&edge) { 1 } else { 2 };
            assert_eq!(n, expected, "edge {edge:?}");
        }
    }

    #[test]
    fn adjacency_is_symmetric_edge_relation() {
        let m = Mesh::uniform(GridId::One, 2);
        let p = m.adjacency();
        for i in 0..m.num_nodes() {
            assert!(p.cols(i).contains(&i));
            for &j in p.cols(i) {
                assert!(p.cols(j).contains(&i));
            }
        }
        // Interior nodes of the diagonal family have six neighbors.
        let center = m.vertices.iter().position(|&x| x == [0.5, 0.5]).unwrap();
        assert_eq!(p.cols(center).len(), 7);
    }

    #[test]
    fn ordering_all_dirichlet() {
        let spec = benchmarks::problem_interior_layers();
        let m = classify_and_order(Mesh::uniform(GridId::One, 1), &spec).unwrap();
        assert_eq!(m.num_free, 1);
        assert_eq!(m.vertices[0], [0.5, 0.5]);
        let mut perm = m.permutation.clone();
        perm.sort_unstable();
        assert_eq!(perm, (0..9).collect::<Vec<_>>());
    }

    #[test]
    fn ordering_with_neumann_bottom() {
        let spec = benchmarks::problem_circular_layers(1e-4);
        let m = classify_and_order(Mesh::uniform(GridId::One, 2), &spec).unwrap();
        // 9 interior nodes plus the 3 open bottom-edge nodes.
        assert_eq!(m.num_free, 12);
        for i in 0..m.num_free {
            let x = m.vertices[i];
            assert!(x[0] > 0.0 && x[0] < 1.0 && x[1] < 1.0);
        }
        let corner = m.vertices.iter().position(|&x| x == [0.0, 0.0]).unwrap();
        assert!(m.is_dirichlet(corner));
        for e in &m.boundary_edges {
            if e.side != Side::Bottom {
                assert!(m.is_dirichlet(e.nodes[0]) && m.is_dirichlet(e.nodes[1]));
            }
        }
    }

    #[test]
    fn ordering_requires_dirichlet_when_diffusive() {
        let mut spec = benchmarks::problem_interior_layers();
        spec.boundary = crate::BoundaryRule::NeumannOn(Side::ALL.to_vec());
        assert_eq!(
            classify_and_order(Mesh::coarse(GridId::One), &spec),
            Err(Error::NoDirichletBoundary)
        );
    }

    #[test]
    fn mirror_point_inside_west_cell() {
        let m = Mesh::uniform(GridId::One, 2);
        let incident = m.vertex_cells();
        let i = m.vertices.iter().position(|&x| x == [0.5, 0.5]).unwrap();
        let j = m.vertices.iter().position(|&x| x == [0.75, 0.5]).unwrap();
        let mp = mirror_cell(&m, &incident[i], i, j);
        assert_eq!(mp.point, [0.25, 0.5]);
        assert!(mp.contains_point && mp.on_half_line);
        assert!(m.cells[mp.cell].contains(&i));
        // The west point is a vertex; the smallest-index cell holding it wins.
        let candidates: Vec<usize> = incident[i]
            .iter()
            .copied()
            .filter(|&k| contains(m.cell_points(&m.cells[k]), mp.point))
            .collect();
        assert_eq!(mp.cell, candidates[0]);
    }

    #[test]
    fn mirror_point_outside_incident_cells() {
        // Layout of the fictitious-node sketch: the reflection of x_j lies
        // beyond the fan around x_i, so the cut cell is returned instead.
        let vertices = vec![
            [2.0, 2.0], // i
            [4.0, 2.0], // j
            [3.0, 4.0],
            [0.5, 3.0],
            [1.0, 1.0],
            [2.5, 1.0],
        ];
        let cells = vec![[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 5], [0, 5, 1]];
        let m = Mesh::from_parts(vertices, cells, Vec::new(), 0);
        let incident = m.vertex_cells();
        let mp = mirror_cell(&m, &incident[0], 0, 1);
        assert_eq!(mp.point, [0.0, 2.0]);
        assert!(!mp.contains_point && mp.on_half_line);
        assert_eq!(mp.cell, 2);
    }

    #[test]
    fn mirror_cell_always_contains_node() {
        for grid in [GridId::One, GridId::Two] {
            let m = Mesh::uniform(grid, 2);
            let incident = m.vertex_cells();
            let p = m.adjacency();
            for i in 0..m.num_nodes() {
                for (j, _) in p.neighbors(i) {
                    let mp = mirror_cell(&m, &incident[i], i, j);
                    assert!(m.cells[mp.cell].contains(&i));
                    let x = m.vertices[i];
                    let interior = x[0] > 0.0 && x[0] < 1.0 && x[1] > 0.0 && x[1] < 1.0;
                    if interior {
                        assert!(mp.on_half_line);
                    }
                    let mid = [
                        0.5 * (mp.point[0] + m.vertices[j][0]),
                        0.5 * (mp.point[1] + m.vertices[j][1]),
                    ];
                    assert_eq!(mid, x);
                }
            }
        }
    }

    #[test]
    fn barycentric_gradients_unit_triangle() {
        let g = barycentric_gradients([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(g, [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]);
        let l = barycentric([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [0.25, 0.5]);
        assert_eq!(l, [0.25, 0.25, 0.5]);
    }
}
