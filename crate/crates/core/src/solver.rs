//! Bound-preserving fixed-point iteration for the Galerkin, MC and WMC
//! systems, plus an audit of the discrete maximum principles that solved
//! WMC systems satisfy.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::assembly::{assemble_with_delta, galerkin_row_residual, Operators, DEFAULT_DELTA};
use crate::error::{Error, Result};
use crate::limiter::{mc_state, wmc_state, EdgeState, FictitiousStencil, LimiterSettings, Scheme};
use crate::linsolve::{gmres, leading_matvec, Ilu0};
use crate::mesh::Mesh;
use crate::problem::ProblemSpec;
use crate::sparse::CsrMatrix;
use crate::Point;

pub use crate::limiter::WbVariant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Limiter {
    Galerkin,
    Mc,
    #[default]
    Wmc,
}

impl Limiter {
    pub fn name(self) -> &'static str {
        match self {
            Limiter::Galerkin => "galerkin",
            Limiter::Mc => "mc",
            Limiter::Wmc => "wmc",
        }
    }
}

/// How a new iterate is obtained from the residual of the current one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Iteration {
    /// Nodal update `u_i = (sum of limited edge terms) / a_i`. Cheap, and
    /// every update is a convex combination of bar states and neighbor
    /// values, but it stalls on convection-dominated fine meshes.
    Jacobi,
    /// Defect correction `L (u' - u) = -r(u)` with the constant low-order
    /// operator `L`, solved by ILU(0)-preconditioned GMRES.
    #[default]
    Picard,
}

impl Iteration {
    pub fn name(self) -> &'static str {
        match self {
            Iteration::Jacobi => "jacobi",
            Iteration::Picard => "picard",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum InitialGuess {
    /// Zero at free nodes.
    #[default]
    Zero,
    /// `u_D` evaluated at every node.
    DirichletExtension,
    /// Explicit nodal values; Dirichlet entries are overwritten by `u_D`.
    Given(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub limiter: Limiter,
    pub wb_variant: WbVariant,
    pub iteration: Iteration,
    /// Absolute tolerance on the Euclidean residual norm.
    pub tol: f64,
    pub max_iter: usize,
    /// Relaxation factor in `(0, 1]`.
    pub damping: f64,
    pub initial_guess: InitialGuess,
    /// Anderson mixing depth; 0 disables acceleration.
    pub anderson: usize,
    /// With `false` the limiters are switched off (`alpha = 1`, `f* = f`).
    pub limiting: bool,
    pub delta: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            limiter: Limiter::Wmc,
            wb_variant: WbVariant::Full,
            iteration: Iteration::Picard,
            tol: 1e-8,
            max_iter: 20_000,
            damping: 1.0,
            initial_guess: InitialGuess::Zero,
            anderson: 3,
            limiting: true,
            delta: DEFAULT_DELTA,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("tol must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidParameter("damping must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Nodal values in mesh order, Dirichlet entries included.
    pub u: Vec<f64>,
    /// Number of fixed-point updates performed.
    pub iterations: usize,
    /// Residual norm before every update and after the last one.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub dmp_audit: DmpAudit,
}

/// Undirected stencil edge with `i < j` and the CSR indices of both
/// directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub ij: usize,
    pub ji: usize,
}

/// Assembled operators plus the nodal data and geometry the limiters read.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: Mesh,
    pub ops: Operators,
    pub epsilon: f64,
    pub velocity: Vec<Point>,
    pub source: Vec<f64>,
    pub reaction: Vec<f64>,
    /// `u_D` at every node.
    pub dirichlet: Vec<f64>,
    /// Fictitious-node stencil for every CSR entry of a free row.
    pub fictitious: Vec<FictitiousStencil>,
    /// Edges with at least one free endpoint.
    pub edges: Vec<Edge>,
    /// Low-order operator of the limited schemes: off-diagonal entries
    /// `a^D_ij + a^C_ij - d_ij <= 0`, zero row sums apart from `a_i^R`.
    pub low_order: CsrMatrix,
    /// `f >= 0` at every node and `b_i >= 0` in every free row.
    pub source_nonneg: bool,
    pub dirichlet_nonneg: bool,
}

impl Discretization {
    pub fn new(mesh: &Mesh, spec: &ProblemSpec) -> Result<Discretization> {
        Self::with_delta(mesh, spec, DEFAULT_DELTA)
    }

    pub fn with_delta(mesh: &Mesh, spec: &ProblemSpec, delta: f64) -> Result<Discretization> {
        let ops = assemble_with_delta(mesh, spec, delta)?;
        let x = &mesh.vertices;
        let velocity: Vec<Point> = x.iter().map(|&p| (spec.velocity)(p)).collect();
        let source: Vec<f64> = x.iter().map(|&p| (spec.source)(p)).collect();
        let reaction: Vec<f64> = x.iter().map(|&p| (spec.reaction)(p)).collect();
        let dirichlet: Vec<f64> = x.iter().map(|&p| (spec.dirichlet)(p)).collect();

        let pat = &ops.pattern;
        let m = mesh.num_free;
        let incident = mesh.vertex_cells();
        let mut fictitious = Vec::with_capacity(pat.nnz());
        for i in 0..pat.n_rows() {
            for k in pat.row_range(i) {
                let j = pat.col(k);
                fictitious.push(if i < m && j != i {
                    FictitiousStencil::new(mesh, &incident[i], i, j)
                } else {
                    FictitiousStencil {
                        nodes: [i; 3],
                        weights: [0.0; 3],
                    }
                });
            }
        }

        let mut edges = Vec::new();
        for i in 0..pat.n_rows() {
            for (j, k) in pat.neighbors(i) {
                if i < j && (i < m || j < m) {
                    edges.push(Edge {
                        i,
                        j,
                        ij: k,
                        ji: pat.transpose(k),
                    });
                }
            }
        }

        let mut low_order = CsrMatrix::zeros(pat);
        for i in 0..pat.n_rows() {
            let mut diag = ops.areac_lumped[i];
            for (_, k) in pat.neighbors(i) {
                let l = ops.adiff.values[k] + ops.aconv.values[k] - ops.d.values[k];
                low_order.values[k] = l;
                diag -= l;
            }
            low_order.values[pat.diag(i)] = diag;
        }

        let source_nonneg = source.iter().all(|&f| f >= 0.0) && ops.b.iter().all(|&b| b >= 0.0);
        let dirichlet_nonneg = dirichlet[m..].iter().all(|&g| g >= 0.0);

        Ok(Discretization {
            mesh: mesh.clone(),
            ops,
            epsilon: spec.epsilon,
            velocity,
            source,
            reaction,
            dirichlet,
            fictitious,
            edges,
            low_order,
            source_nonneg,
            dirichlet_nonneg,
        })
    }

    pub fn num_free(&self) -> usize {
        self.ops.num_free
    }

    /// Diagonal `a_i = a_i^R + a_i^C - sum_{j != i} a^D_ij` of the
    /// limited fixed-point update.
    pub fn limited_diagonal(&self, i: usize) -> f64 {
        let ops = &self.ops;
        let off: f64 = ops
            .pattern
            .neighbors(i)
            .map(|(_, k)| ops.adiff.values[k])
            .sum();
        ops.areac_lumped[i] + ops.ac_row[i] - off
    }

    /// Diagonal of the Galerkin matrix.
    pub fn galerkin_diagonal(&self, i: usize) -> f64 {
        let ops = &self.ops;
        let k = ops.pattern.diag(i);
        ops.adiff.values[k] + ops.aconv.values[k] + ops.areac.values[k]
    }

    /// Edge state of `limiter` for the snapshot `u`; `None` for Galerkin.
    pub fn edge_state(
        &self,
        u: &[f64],
        limiter: Limiter,
        variant: WbVariant,
        limiting: bool,
    ) -> Result<Option<EdgeState>> {
        match limiter {
            Limiter::Galerkin => Ok(None),
            Limiter::Mc => Ok(Some(mc_state(self, u, limiting))),
            Limiter::Wmc => wmc_state(
                self,
                u,
                LimiterSettings {
                    variant,
                    limited: limiting,
                },
            )
            .map(Some),
        }
    }

    /// Initial iterate with Dirichlet values imposed.
    pub fn initial_iterate(&self, guess: &InitialGuess) -> Result<Vec<f64>> {
        let n = self.mesh.num_nodes();
        let mut u = match guess {
            InitialGuess::Zero => vec![0.0; n],
            InitialGuess::DirichletExtension => self.dirichlet.clone(),
            InitialGuess::Given(v) => {
                if v.len() != n {
                    return Err(Error::LengthMismatch {
                        expected: n,
                        found: v.len(),
                    });
                }
                v.clone()
            }
        };
        let m = self.num_free();
        u[m..].copy_from_slice(&self.dirichlet[m..]);
        Ok(u)
    }
}

/// Row residual of the limited systems in homogeneous form,
/// `a_i^R u_i - sum_j [2 d_ij (ubar*_ij - u_i) - a^D_ij (u_j - u_i)]`,
/// minus `b_i` for MC, whose bar states do not carry the source.
pub fn limited_row_residual(
    disc: &Discretization,
    state: &EdgeState,
    u: &[f64],
    i: usize,
) -> Result<f64> {
    let ops = &disc.ops;
    if i >= ops.num_free {
        return Err(Error::DirichletRow(i));
    }
    let mut r = ops.areac_lumped[i] * u[i];
    for (j, k) in ops.pattern.neighbors(i) {
        let d2 = 2.0 * ops.d.values[k];
        r -= state.limited_flux[k] - d2 * u[i] - ops.adiff.values[k] * (u[j] - u[i]);
    }
    if state.scheme == Scheme::Mc {
        r -= ops.b[i];
    }
    Ok(r)
}

/// [`limited_row_residual`] for a WMC edge state.
pub fn wmc_row_residual(
    disc: &Discretization,
    state: &EdgeState,
    u: &[f64],
    i: usize,
) -> Result<f64> {
    debug_assert_eq!(state.scheme, Scheme::Wmc);
    limited_row_residual(disc, state, u, i)
}

/// Euclidean norm of the residual over the free rows.
pub fn residual_norm(disc: &Discretization, state: Option<&EdgeState>, u: &[f64]) -> Result<f64> {
    let mut sum = 0.0;
    for i in 0..disc.num_free() {
        let r = match state {
            Some(st) => limited_row_residual(disc, st, u, i)?,
            None => galerkin_row_residual(&disc.ops, u, i)?,
        };
        sum += r * r;
    }
    Ok(libm::sqrt(sum))
}

/// One Jacobi-type sweep `u <- (1 - omega) u + omega u'`. With an edge state
/// the update is the bound-preserving one,
/// `u'_i = (sum_j [2 d_ij ubar*_ij - a^D_ij u_j] (+ b_i for MC)) / a_i`;
/// without one it is a Jacobi step for the Galerkin system.
pub fn fixed_point_step(
    disc: &Discretization,
    state: Option<&EdgeState>,
    u: &[f64],
    damping: f64,
) -> Result<Vec<f64>> {
    let ops = &disc.ops;
    let mut next = u.to_vec();
    for i in 0..disc.num_free() {
        let candidate = match state {
            Some(st) => {
                let a = disc.limited_diagonal(i);
                if !(a > 0.0) {
                    return Err(Error::NonPositiveDiagonal { row: i, value: a });
                }
                let mut acc = if st.scheme == Scheme::Mc {
                    ops.b[i]
                } else {
                    0.0
                };
                for (j, k) in ops.pattern.neighbors(i) {
                    acc += st.limited_flux[k] - ops.adiff.values[k] * u[j];
                }
                acc / a
            }
            None => {
                let a = disc.galerkin_diagonal(i);
                if !(a > 0.0) {
                    return Err(Error::NonPositiveDiagonal { row: i, value: a });
                }
                let mut acc = ops.b[i];
                for (j, k) in ops.pattern.neighbors(i) {
                    let aij = ops.adiff.values[k] + ops.aconv.values[k] + ops.areac.values[k];
                    acc -= aij * u[j];
                }
                acc / a
            }
        };
        next[i] = (1.0 - damping) * u[i] + damping * candidate;
    }
    Ok(next)
}

/// Galerkin matrix `A^D + A^C + A^R`.
pub fn galerkin_matrix(ops: &Operators) -> CsrMatrix {
    let values = (0..ops.pattern.nnz())
        .map(|k| ops.adiff.values[k] + ops.aconv.values[k] + ops.areac.values[k])
        .collect();
    CsrMatrix { values }
}

/// Linear solver of the Picard iteration for one limiter.
#[derive(Debug, Clone)]
pub struct PicardOperator {
    matrix: CsrMatrix,
    ilu: Ilu0,
    /// GMRES restart length. Short cycles stagnate on the strongly
    /// nonnormal Galerkin matrix of convection-dominated problems.
    restart: usize,
}

impl PicardOperator {
    /// The Galerkin matrix for [`Limiter::Galerkin`], the low-order operator
    /// otherwise.
    pub fn new(disc: &Discretization, limiter: Limiter) -> Result<PicardOperator> {
        let (matrix, restart) = match limiter {
            Limiter::Galerkin => (galerkin_matrix(&disc.ops), 200),
            Limiter::Mc | Limiter::Wmc => (disc.low_order.clone(), 40),
        };
        let m = disc.num_free();
        // The low-order operator is an M-matrix, so its incomplete factors
        // are stable; they also precondition the Galerkin matrix.
        let ilu = Ilu0::new(&disc.ops.pattern, &disc.low_order, m)
            .ok_or(Error::NonPositiveDiagonal { row: 0, value: 0.0 })?;
        Ok(PicardOperator {
            matrix,
            ilu,
            restart,
        })
    }
}

/// Residuals of all free rows.
pub fn residual_vector(
    disc: &Discretization,
    state: Option<&EdgeState>,
    u: &[f64],
) -> Result<Vec<f64>> {
    (0..disc.num_free())
        .map(|i| match state {
            Some(st) => limited_row_residual(disc, st, u, i),
            None => galerkin_row_residual(&disc.ops, u, i),
        })
        .collect()
}

/// Defect-correction step `u <- u + omega * delta` with `L delta = -r(u)`.
/// The inner solve stops at a residual of `1e-4 |r(u)|`.
pub fn picard_step(
    disc: &Discretization,
    op: &PicardOperator,
    residual: &[f64],
    u: &[f64],
    damping: f64,
) -> Vec<f64> {
    let m = disc.num_free();
    let rhs: Vec<f64> = residual.iter().map(|r| -r).collect();
    let rnorm = libm::sqrt(residual.iter().map(|r| r * r).sum());
    let mut delta = vec![0.0; m];
    gmres(
        |v, w| leading_matvec(&disc.ops.pattern, &op.matrix, m, v, w),
        &op.ilu,
        &rhs,
        &mut delta,
        1e-4 * rnorm,
        op.restart,
        800,
    );
    let mut next = u.to_vec();
    for i in 0..m {
        next[i] += damping * delta[i];
    }
    next
}

/// Anderson mixing of fixed-point updates `f_k = G(u_k) - u_k` over the
/// free entries.
#[derive(Debug, Clone)]
struct Anderson {
    depth: usize,
    prev: Option<(Vec<f64>, Vec<f64>)>,
    du: VecDeque<Vec<f64>>,
    df: VecDeque<Vec<f64>>,
}

impl Anderson {
    fn new(depth: usize) -> Anderson {
        Anderson {
            depth,
            prev: None,
            du: VecDeque::new(),
            df: VecDeque::new(),
        }
    }

    /// Returns the mixed iterate `u + beta f - sum_j gamma_j (du_j + beta df_j)`.
    fn mix(&mut self, u: &[f64], f: &[f64], beta: f64) -> Vec<f64> {
        if let Some((pu, pf)) = self.prev.take() {
            self.du
                .push_back(u.iter().zip(&pu).map(|(a, b)| a - b).collect());
            self.df
                .push_back(f.iter().zip(&pf).map(|(a, b)| a - b).collect());
            if self.du.len() > self.depth {
                self.du.pop_front();
                self.df.pop_front();
            }
        }
        self.prev = Some((u.to_vec(), f.to_vec()));
        let mut next: Vec<f64> = u.iter().zip(f).map(|(a, b)| a + beta * b).collect();
        let k = self.df.len();
        if k == 0 {
            return next;
        }
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut gram = vec![vec![0.0; k]; k];
        let mut rhs = vec![0.0; k];
        for a in 0..k {
            for b in 0..=a {
                gram[a][b] = dot(&self.df[a], &self.df[b]);
                gram[b][a] = gram[a][b];
            }
            rhs[a] = dot(&self.df[a], f);
        }
        let Some(gamma) = solve_spd(gram, rhs) else {
            self.du.clear();
            self.df.clear();
            return next;
        };
        for (j, g) in gamma.iter().enumerate() {
            for i in 0..next.len() {
                next[i] -= g * (self.du[j][i] + beta * self.df[j][i]);
            }
        }
        next
    }
}

/// Cholesky solve with a small relative ridge; `None` if not positive.
fn solve_spd(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let k = b.len();
    let scale = (0..k).map(|i| a[i][i]).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return None;
    }
    for i in 0..k {
        a[i][i] += 1e-12 * scale;
    }
    for j in 0..k {
        let mut d = a[j][j];
        for q in 0..j {
            d -= a[j][q] * a[j][q];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = libm::sqrt(d);
        a[j][j] = d;
        for i in j + 1..k {
            let mut v = a[i][j];
            for q in 0..j {
                v -= a[i][q] * a[j][q];
            }
            a[i][j] = v / d;
        }
    }
    for i in 0..k {
        for q in 0..i {
            b[i] -= a[i][q] * b[q];
        }
        b[i] /= a[i][i];
    }
    for i in (0..k).rev() {
        for q in i + 1..k {
            b[i] -= a[q][i] * b[q];
        }
        b[i] /= a[i][i];
    }
    Some(b)
}

/// Snapshot handed to the observer of [`solve_discrete`] after every update.
pub struct Sweep<'a> {
    pub iteration: usize,
    pub u: &'a [f64],
    pub state: Option<&'a EdgeState>,
    /// Damped plain update, before any Anderson mixing.
    pub next: &'a [f64],
}

pub fn solve(mesh: &Mesh, spec: &ProblemSpec, options: &SolveOptions) -> Result<SolveReport> {
    options.validate()?;
    let disc = Discretization::with_delta(mesh, spec, options.delta)?;
    solve_discrete(&disc, options, |_| {})
}

/// Runs the fixed-point iteration on a prepared discretization.
pub fn solve_discrete<F>(
    disc: &Discretization,
    options: &SolveOptions,
    mut observer: F,
) -> Result<SolveReport>
where
    F: FnMut(&Sweep<'_>),
{
    options.validate()?;
    let mut u = disc.initial_iterate(&options.initial_guess)?;
    let picard = match options.iteration {
        Iteration::Picard => Some(PicardOperator::new(disc, options.limiter)?),
        Iteration::Jacobi => None,
    };
    let mut anderson = (options.anderson > 0).then(|| Anderson::new(options.anderson));
    let m = disc.num_free();
    let mut history = Vec::new();
    let mut iterations = 0;
    let converged = loop {
        let state = disc.edge_state(&u, options.limiter, options.wb_variant, options.limiting)?;
        if cfg!(debug_assertions) && options.limiting {
            if let Some(st) = &state {
                debug_check_bounds(disc, st);
            }
        }
        let residual = residual_vector(disc, state.as_ref(), &u)?;
        let r = libm::sqrt(residual.iter().map(|x| x * x).sum());
        history.push(r);
        if !r.is_finite() {
            return Err(Error::Diverged {
                iteration: iterations,
            });
        }
        if r <= options.tol {
            break true;
        }
        if iterations == options.max_iter {
            break false;
        }
        let next = match &picard {
            Some(op) => picard_step(disc, op, &residual, &u, options.damping),
            None => fixed_point_step(disc, state.as_ref(), &u, options.damping)?,
        };
        iterations += 1;
        if next.iter().any(|x| !x.is_finite()) {
            return Err(Error::Diverged {
                iteration: iterations,
            });
        }
        observer(&Sweep {
            iteration: iterations,
            u: &u,
            state: state.as_ref(),
            next: &next,
        });
        u = match anderson.as_mut() {
            Some(acc) => {
                let f: Vec<f64> = (0..m).map(|i| (next[i] - u[i]) / options.damping).collect();
                let mixed = acc.mix(&u[..m], &f, options.damping);
                let mut v = next;
                v[..m].copy_from_slice(&mixed);
                v
            }
            None => next,
        };
    };
    let dmp_audit = audit_dmp(disc, &u);
    Ok(SolveReport {
        u,
        iterations,
        residual_history: history,
        converged,
        dmp_audit,
    })
}

fn debug_check_bounds(disc: &Discretization, st: &EdgeState) {
    if st.scheme != Scheme::Wmc {
        return;
    }
    for i in 0..disc.num_free() {
        let b = st.ubar_bounds[i];
        let slack = 1e-10 * (1.0 + b.min.abs().max(b.max.abs()));
        for (_, k) in disc.ops.pattern.neighbors(i) {
            let v = st.ubar_s_star[k];
            debug_assert!(
                v >= b.min - slack && v <= b.max + slack,
                "limited bar state {v} outside [{}, {}] in row {i}",
                b.min,
                b.max
            );
        }
    }
}

/// Slack allowed by every DMP check.
pub const DMP_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DmpCheck {
    pub name: &'static str,
    /// `false` when the hypotheses of the maximum principle are not met.
    pub applicable: bool,
    pub violations: usize,
    pub max_violation: f64,
}

impl DmpCheck {
    fn new(name: &'static str, applicable: bool) -> DmpCheck {
        DmpCheck {
            name,
            applicable,
            violations: 0,
            max_violation: 0.0,
        }
    }

    fn record(&mut self, excess: f64) {
        if excess > DMP_SLACK {
            self.violations += 1;
        }
        if excess > self.max_violation {
            self.max_violation = excess;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DmpAudit {
    pub checks: Vec<DmpCheck>,
}

impl DmpAudit {
    pub fn get(&self, name: &str) -> Option<&DmpCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn total_violations(&self) -> usize {
        self.checks
            .iter()
            .filter(|c| c.applicable)
            .map(|c| c.violations)
            .sum()
    }
}

/// Checks the local and global maximum principles and positivity that
/// solutions of the WMC system satisfy when `eps > 0`. For `eps = 0` every
/// check is marked not applicable.
pub fn audit_dmp(disc: &Discretization, u: &[f64]) -> DmpAudit {
    let ops = &disc.ops;
    let m = disc.num_free();
    let diffusive = disc.epsilon > 0.0;
    let b = &ops.b;
    let all_nonpos = b.iter().all(|&x| x <= 0.0);
    let all_nonneg = b.iter().all(|&x| x >= 0.0);
    let no_reaction = ops.areac_lumped.iter().all(|&x| x == 0.0);

    let mut local = DmpCheck::new("local_dmp", diffusive);
    let mut local_strong = DmpCheck::new(
        "local_dmp_strong",
        diffusive && ops.areac_lumped[..m].iter().any(|&x| x == 0.0),
    );
    let mut global = DmpCheck::new(
        "global_dmp",
        diffusive && (all_nonpos || all_nonneg) && m < u.len(),
    );
    let mut global_strong = DmpCheck::new("global_dmp_strong", global.applicable && no_reaction);
    let mut positivity = DmpCheck::new(
        "positivity",
        diffusive && disc.source_nonneg && disc.dirichlet_nonneg,
    );

    if local.applicable {
        for i in 0..m {
            let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
            for (j, _) in ops.pattern.neighbors(i) {
                hi = hi.max(u[j]);
                lo = lo.min(u[j]);
            }
            if b[i] <= 0.0 {
                local.record(u[i] - hi.max(0.0));
            }
            if b[i] >= 0.0 {
                local.record(lo.min(0.0) - u[i]);
            }
            if local_strong.applicable && ops.areac_lumped[i] == 0.0 {
                if b[i] <= 0.0 {
                    local_strong.record(u[i] - hi);
                }
                if b[i] >= 0.0 {
                    local_strong.record(lo - u[i]);
                }
            }
        }
    }

    let max_all = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_all = u.iter().copied().fold(f64::INFINITY, f64::min);
    if global.applicable {
        let max_d = u[m..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min_d = u[m..].iter().copied().fold(f64::INFINITY, f64::min);
        if all_nonpos {
            global.record(max_all - max_d.max(0.0));
            if global_strong.applicable {
                global_strong.record(max_all - max_d);
            }
        }
        if all_nonneg {
            global.record(min_d.min(0.0) - min_all);
            if global_strong.applicable {
                global_strong.record(min_d - min_all);
            }
        }
    }
    if positivity.applicable {
        positivity.record(-min_all);
    }

    DmpAudit {
        checks: vec![local, local_strong, global, global_strong, positivity],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks;
    use crate::mesh::{classify_and_order, GridId};
    use crate::problem::BoundaryRule;
    use alloc::boxed::Box;
    use alloc::string::String;

    fn poisson() -> ProblemSpec {
        ProblemSpec {
            name: String::from("poisson"),
            epsilon: 1.0,
            velocity: Box::new(|_| [0.0, 0.0]),
            reaction: Box::new(|_| 0.0),
            source: Box::new(|_| 1.0),
            dirichlet: Box::new(|_| 0.0),
            boundary: BoundaryRule::AllDirichlet,
            exact: None,
        }
    }

    fn dense_solve(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Vec<f64> {
        let n = rhs.len();
        for c in 0..n {
            let p = (c..n)
                .max_by(|&x, &y| a[x][c].abs().partial_cmp(&a[y][c].abs()).unwrap())
                .unwrap();
            a.swap(c, p);
            rhs.swap(c, p);
            for r in c + 1..n {
                let f = a[r][c] / a[c][c];
                for q in c..n {
                    a[r][q] -= f * a[c][q];
                }
                rhs[r] -= f * rhs[c];
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|q| a[r][q] * x[q]).sum();
            x[r] = (rhs[r] - s) / a[r][r];
        }
        x
    }

    #[test]
    fn single_free_node_galerkin() {
        let spec = poisson();
        let mesh = classify_and_order(Mesh::uniform(GridId::One, 1), &spec).unwrap();
        assert_eq!(mesh.num_free, 1);
        let disc = Discretization::new(&mesh, &spec).unwrap();
        let u0 = disc.initial_iterate(&InitialGuess::Zero).unwrap();
        let u1 = fixed_point_step(&disc, None, &u0, 1.0).unwrap();
        // Center node of the diagonal split: stiffness 4, load h^2 = 1/4.
        assert!((u1[0] - 0.0625).abs() < 1e-15, "{}", u1[0]);
        assert_eq!(&u1[1..], &u0[1..]);
    }

    #[test]
    fn galerkin_matches_dense_solve() {
        let spec = poisson();
        let mesh = classify_and_order(Mesh::uniform(GridId::One, 3), &spec).unwrap();
        let disc = Discretization::new(&mesh, &spec).unwrap();
        let m = mesh.num_free;
        let ops = &disc.ops;
        let mut a = vec![vec![0.0; m]; m];
        for i in 0..m {
            for k in ops.pattern.row_range(i) {
                let j = ops.pattern.col(k);
                if j < m {
                    a[i][j] = ops.adiff.values[k] + ops.aconv.values[k] + ops.areac.values[k];
                }
            }
        }
        let exact = dense_solve(a, ops.b.clone());
        let opts = SolveOptions {
            limiter: Limiter::Galerkin,
            tol: 1e-12,
            ..SolveOptions::default()
        };
        let report = solve(&mesh, &spec, &opts).unwrap();
        assert!(report.converged);
        for i in 0..m {
            assert!((report.u[i] - exact[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn equilibrium_from_exact_state() {
        let spec = benchmarks::problem_equilibrium(1e-6).unwrap();
        for grid in [GridId::One, GridId::Two] {
            let mesh = classify_and_order(Mesh::uniform(grid, 3), &spec).unwrap();
            let exact: Vec<f64> = mesh.vertices.iter().map(|x| x[0]).collect();
            let opts = SolveOptions {
                initial_guess: InitialGuess::Given(exact),
                ..SolveOptions::default()
            };
            let report = solve(&mesh, &spec, &opts).unwrap();
            assert!(report.converged);
            assert!(report.iterations <= 1);
            assert!(report.residual_history[0] < 1e-12);
        }
    }

    #[test]
    fn max_iter_one_reports_no_convergence() {
        let spec = benchmarks::problem_interior_layers();
        let mesh = classify_and_order(Mesh::uniform(GridId::One, 3), &spec).unwrap();
        let opts = SolveOptions {
            max_iter: 1,
            ..SolveOptions::default()
        };
        let report = solve(&mesh, &spec, &opts).unwrap();
        assert!(!report.converged);
        assert_eq!(report.iterations, 1);
        assert_eq!(report.residual_history.len(), 2);
    }

    #[test]
    fn residual_of_unlimited_wmc_is_galerkin() {
        let spec = benchmarks::problem_circular_layers(1e-2);
        let mesh = classify_and_order(Mesh::uniform(GridId::Two, 2), &spec).unwrap();
        let disc = Discretization::new(&mesh, &spec).unwrap();
        let u: Vec<f64> = mesh
            .vertices
            .iter()
            .map(|x| libm::sin(3.0 * x[0] + x[1]))
            .collect();
        for (limiter, variant) in [
            (Limiter::Mc, WbVariant::Full),
            (Limiter::Wmc, WbVariant::Full),
        ] {
            let st = disc
                .edge_state(&u, limiter, variant, false)
                .unwrap()
                .unwrap();
            for i in 0..mesh.num_free {
                let g = galerkin_row_residual(&disc.ops, &u, i).unwrap();
                let r = limited_row_residual(&disc, &st, &u, i).unwrap();
                assert!(
                    (g - r).abs() < 1e-12 * (1.0 + g.abs()),
                    "{limiter:?} row {i}: {g} vs {r}"
                );
            }
        }
    }

    #[test]
    fn dirichlet_rows_are_rejected() {
        let mut spec = poisson();
        spec.velocity = Box::new(|_| [1.0, 0.5]);
        let mesh = classify_and_order(Mesh::uniform(GridId::One, 1), &spec).unwrap();
        let disc = Discretization::new(&mesh, &spec).unwrap();
        let u = vec![0.0; mesh.num_nodes()];
        let st = disc
            .edge_state(&u, Limiter::Wmc, WbVariant::Full, true)
            .unwrap()
            .unwrap();
        assert_eq!(
            wmc_row_residual(&disc, &st, &u, 1),
            Err(Error::DirichletRow(1))
        );
    }

    #[test]
    fn constant_state_is_a_fixed_point() {
        let spec = ProblemSpec {
            name: String::from("constant"),
            epsilon: 0.01,
            velocity: Box::new(|x| [x[1], -x[0]]),
            reaction: Box::new(|_| 0.0),
            source: Box::new(|_| 0.0),
            dirichlet: Box::new(|_| 0.4),
            boundary: BoundaryRule::AllDirichlet,
            exact: None,
        };
        let mesh = classify_and_order(Mesh::uniform(GridId::Two, 2), &spec).unwrap();
        let disc = Discretization::new(&mesh, &spec).unwrap();
        let u = vec![0.4; mesh.num_nodes()];
        let st = disc
            .edge_state(&u, Limiter::Wmc, WbVariant::Full, true)
            .unwrap();
        let next = fixed_point_step(&disc, st.as_ref(), &u, 1.0).unwrap();
        for x in next {
            assert!((x - 0.4).abs() < 1e-15);
        }
        let opts = SolveOptions {
            tol: 1e-13,
            ..SolveOptions::default()
        };
        let report = solve(&mesh, &spec, &opts).unwrap();
        assert!(report.converged);
        let hi = report.u.iter().copied().fold(f64::MIN, f64::max);
        let lo = report.u.iter().copied().fold(f64::MAX, f64::min);
        assert!((hi - 0.4).abs() < 1e-9 && (lo - 0.4).abs() < 1e-9);
        assert_eq!(report.dmp_audit.total_violations(), 0);
        assert!(
            report
                .dmp_audit
                .get("global_dmp_strong")
                .unwrap()
                .applicable
        );
    }

    #[test]
    fn audit_not_applicable_without_diffusion() {
        let spec = benchmarks::problem_circular_convection();
        let mesh = classify_and_order(Mesh::uniform(GridId::One, 2), &spec).unwrap();
        let disc = Discretization::new(&mesh, &spec).unwrap();
        let audit = audit_dmp(&disc, &disc.dirichlet);
        assert!(audit.checks.iter().all(|c| !c.applicable));
    }

    #[test]
    fn options_are_validated() {
        let spec = poisson();
        let mesh = classify_and_order(Mesh::uniform(GridId::One, 1), &spec).unwrap();
        for opts in [
            SolveOptions {
                tol: 0.0,
                ..SolveOptions::default()
            },
            SolveOptions {
                max_iter: 0,
                ..SolveOptions::default()
            },
            SolveOptions {
                damping: 1.5,
                ..SolveOptions::default()
            },
        ] {
            assert!(matches!(
                solve(&mesh, &spec, &opts),
                Err(Error::InvalidParameter(_))
            ));
        }
    }
}
