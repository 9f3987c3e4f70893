//! Assembly of the P1 diffusion, convection and reaction matrices, the load
//! vector, and the graph-Laplacian artificial diffusion.
//!
//! Convection, reaction and load integrals use the three-edge-midpoint rule,
//! which is exact for quadratic integrands. Diffusion is integrated exactly.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::problem::ProblemSpec;
use crate::sparse::{CsrMatrix, Pattern};
use crate::{dot, Point};

/// Floor factor for the artificial diffusion, `d_ij >= delta * h`.
pub const DEFAULT_DELTA: f64 = 1e-10;

/// Positive off-diagonal diffusion entries above this are rejected.
const ACUTE_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Operators {
    pub pattern: Pattern,
    pub adiff: CsrMatrix,
    pub aconv: CsrMatrix,
    pub areac: CsrMatrix,
    /// Load vector for the `num_free` non-Dirichlet rows.
    pub b: Vec<f64>,
    /// Lumped reaction `a_i^R`, row sums of `areac`.
    pub areac_lumped: Vec<f64>,
    /// Artificial diffusion `d_ij`.
    pub d: CsrMatrix,
    /// `a_i^C = sum_{j != i} 2 d_ij`.
    pub ac_row: Vec<f64>,
    pub num_free: usize,
    pub h: f64,
    pub delta: f64,
}

pub fn assemble(mesh: &Mesh, spec: &ProblemSpec) -> Result<Operators> {
    assemble_with_delta(mesh, spec, DEFAULT_DELTA)
}

pub fn assemble_with_delta(mesh: &Mesh, spec: &ProblemSpec, delta: f64) -> Result<Operators> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter("delta must be positive"));
    }
    let pattern = mesh.adjacency();
    let mut adiff = CsrMatrix::zeros(&pattern);
    let mut aconv = CsrMatrix::zeros(&pattern);
    let mut areac = CsrMatrix::zeros(&pattern);
    let mut b = vec![0.0; mesh.num_free];

    for cell in &mesh.cells {
        let area = mesh.cell_area(cell);
        let grads = mesh.cell_gradients(cell);
        let p = mesh.cell_points(cell);
        let local_d = local_diffusion(area, &grads, spec.epsilon);

        // Edge midpoints; at the midpoint of edge (k, k+1) the basis
        // functions of k and k+1 equal 1/2 and the third one vanishes.
        let weight = area / 3.0;
        let mut local_c = [[0.0; 3]; 3];
        let mut local_r = [[0.0; 3]; 3];
        let mut local_b = [0.0; 3];
        for q in 0..3 {
            let (k0, k1) = (q, (q + 1) % 3);
            let x: Point = [0.5 * (p[k0][0] + p[k1][0]), 0.5 * (p[k0][1] + p[k1][1])];
            let mut phi = [0.0; 3];
            phi[k0] = 0.5;
            phi[k1] = 0.5;
            let v = (spec.velocity)(x);
            let c = (spec.reaction)(x);
            let f = (spec.source)(x);
            for a in 0..3 {
                if phi[a] == 0.0 {
                    continue;
                }
                for bb in 0..3 {
                    local_c[a][bb] += weight * phi[a] * dot(v, grads[bb]);
                    local_r[a][bb] += weight * c * phi[a] * phi[bb];
                }
                local_b[a] += weight * f * phi[a];
            }
        }

        for a in 0..3 {
            let i = cell[a];
            for bb in 0..3 {
                let j = cell[bb];
                adiff.add(&pattern, i, j, local_d[a][bb]);
                aconv.add(&pattern, i, j, local_c[a][bb]);
                areac.add(&pattern, i, j, local_r[a][bb]);
            }
            if i < mesh.num_free {
                b[i] += local_b[a];
            }
        }
    }

    for i in 0..pattern.n_rows() {
        for (j, k) in pattern.neighbors(i) {
            if adiff.values[k] > ACUTE_TOL {
                return Err(Error::NotWeaklyAcute {
                    row: i,
                    col: j,
                    value: adiff.values[k],
                });
            }
        }
    }

    let areac_lumped = (0..pattern.n_rows())
        .map(|i| areac.row_sum(&pattern, i))
        .collect();
    let d = artificial_diffusion(&pattern, &aconv, mesh.h, delta);
    let ac_row = (0..pattern.n_rows())
        .map(|i| pattern.neighbors(i).map(|(_, k)| 2.0 * d.values[k]).sum())
        .collect();

    Ok(Operators {
        pattern,
        adiff,
        aconv,
        areac,
        b,
        areac_lumped,
        d,
        ac_row,
        num_free: mesh.num_free,
        h: mesh.h,
        delta,
    })
}

/// `eps * area * grad(phi_a) . grad(phi_b)`.
pub fn local_diffusion(area: f64, grads: &[Point; 3], epsilon: f64) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            m[a][b] = epsilon * area * dot(grads[a], grads[b]);
        }
    }
    m
}

/// Graph Laplacian dominating the convection matrix:
/// `d_ij = max(|a_ij|, delta * h, |a_ji|)` off the diagonal and zero row sums.
pub fn artificial_diffusion(pattern: &Pattern, aconv: &CsrMatrix, h: f64, delta: f64) -> CsrMatrix {
    let floor = delta * h;
    let mut d = CsrMatrix::zeros(pattern);
    for i in 0..pattern.n_rows() {
        let mut diag = 0.0;
        for (_, k) in pattern.neighbors(i) {
            let kt = pattern.transpose(k);
            let value = aconv.values[k].abs().max(floor).max(aconv.values[kt].abs());
            d.values[k] = value;
            diag -= value;
        }
        d.values[pattern.diag(i)] = diag;
    }
    d
}

/// Residual of row `i` of the Galerkin system in the difference form
/// `a_i^R u_i + sum_j (a^D + a^C + a^R)_ij (u_j - u_i) - b_i`.
pub fn galerkin_row_residual(ops: &Operators, u: &[f64], i: usize) -> Result<f64> {
    if i >= ops.num_free {
        return Err(Error::DirichletRow(i));
    }
    let p = &ops.pattern;
    let mut r = ops.areac_lumped[i] * u[i];
    for (j, k) in p.neighbors(i) {
        let a = ops.adiff.values[k] + ops.aconv.values[k] + ops.areac.values[k];
        r += a * (u[j] - u[i]);
    }
    Ok(r - ops.b[i])
}
