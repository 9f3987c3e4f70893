//! Edge algebra of the monolithic convex limiter (MC) and of its
//! well-balanced extension (WMC).
//!
//! Scalar kernels come first; [`mc_state`] and [`wmc_state`] sweep them over
//! every stencil edge for a frozen snapshot of the nodal values.
//!
//! [`EdgeState`] stores directed quantities at the CSR index of entry
//! `(i, j)`. Quantities that only exist for rows of non-Dirichlet nodes are
//! NaN in Dirichlet rows.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mesh::{mirror_cell, Mesh};
use crate::solver::Discretization;
use crate::{dot, norm, sub, Point};

/// Which balancing-flux windows the well-balanced limiter uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WbVariant {
    /// Windows include the fictitious-node term; preserves linear equilibria.
    #[default]
    Full,
    /// Windows without the fictitious-node term.
    Simplified,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: f64,
    pub max: f64,
}

/// Bar state `(u_i + u_j)/2 - a_ij (u_j - u_i) / (2 d_ij)`.
#[inline]
pub fn bar_state(ui: f64, uj: f64, acij: f64, dij: f64) -> f64 {
    scaled_bar_state(ui, uj, acij, dij) / (2.0 * dij)
}

/// `2 d_ij` times the bar state, free of divisions.
#[inline]
pub fn scaled_bar_state(ui: f64, uj: f64, acij: f64, dij: f64) -> f64 {
    dij * (ui + uj) - acij * (uj - ui)
}

/// MC target flux `(d_ij + a^R_ij)(u_i - u_j)`.
#[inline]
pub fn mc_target_flux(ui: f64, uj: f64, dij: f64, arij: f64) -> f64 {
    (dij + arij) * (ui - uj)
}

/// Limits `f_ij` so that `ubar_ij + f*/(2d)` stays in `bounds_i` and the
/// mirrored state of `j` stays in `bounds_j`.
pub fn mc_limit(fij: f64, dij: f64, ubar_ij: f64, ubar_ji: f64, bi: Bounds, bj: Bounds) -> f64 {
    let d2 = 2.0 * dij;
    if fij > 0.0 {
        fij.min((d2 * (bi.max - ubar_ij)).min(d2 * (ubar_ji - bj.min)))
    } else if fij < 0.0 {
        fij.max((d2 * (bi.min - ubar_ij)).max(d2 * (ubar_ji - bj.max)))
    } else {
        0.0
    }
}

/// Balancing flux of edge `(i, j)` for net sources `s_i`, `s_j`.
pub fn balancing_flux(si: f64, sj: f64, xi: Point, xj: Point, vi: Point, vj: Point) -> Result<f64> {
    let vmax = norm(vi).max(norm(vj));
    if vmax == 0.0 {
        return Err(Error::DegenerateVelocity { i: 0, j: 0 });
    }
    let projected = dot(sub(xi, xj), [vi[0] + vj[0], vi[1] + vj[1]]);
    Ok(0.5 * (0.5 * (si + sj)) * projected / (2.0 * vmax * vmax))
}

/// Linear extension of `u_h` from the cell `K^i_j` to the fictitious node
/// `2 x_i - x_j`.
pub fn fictitious_value(mesh: &Mesh, incident: &[usize], u: &[f64], i: usize, j: usize) -> f64 {
    let stencil = FictitiousStencil::new(mesh, incident, i, j);
    stencil.evaluate(u, i)
}

/// `u^i_j = u_i + sum_k weights[k] * u[nodes[k]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FictitiousStencil {
    pub nodes: [usize; 3],
    pub weights: [f64; 3],
}

impl FictitiousStencil {
    pub fn new(mesh: &Mesh, incident: &[usize], i: usize, j: usize) -> FictitiousStencil {
        let mirror = mirror_cell(mesh, incident, i, j);
        let cell = mesh.cells[mirror.cell];
        let grads = mesh.cell_gradients(&cell);
        let w = sub(mesh.vertices[i], mesh.vertices[j]);
        FictitiousStencil {
            nodes: cell,
            weights: [dot(grads[0], w), dot(grads[1], w), dot(grads[2], w)],
        }
    }

    #[inline]
    pub fn evaluate(&self, u: &[f64], i: usize) -> f64 {
        u[i] + self.weights[0] * u[self.nodes[0]]
            + self.weights[1] * u[self.nodes[1]]
            + self.weights[2] * u[self.nodes[2]]
    }
}

/// Limiter window `Q^+_ij`, `Q^-_ij` of a non-Dirichlet node `i`, together
/// with the sign information of `b_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceWindow {
    pub q_plus: f64,
    pub q_minus: f64,
    pub b: f64,
}

/// Builds the window of row `i` for edge `(i, j)`. `fict` is the fictitious
/// value `u^i_j`; pass `None` for the simplified variant.
pub fn balance_window(
    ui: f64,
    uj: f64,
    ubar_ij: f64,
    b_i: f64,
    ac_i: f64,
    fict: Option<f64>,
) -> BalanceWindow {
    let shift = ubar_ij + b_i / ac_i;
    let upper = ui.max(uj) - shift;
    let lower = ui.min(uj) - shift;
    let (q_plus, q_minus) = match fict {
        Some(uf) => {
            let half = 0.5 * (uf - ui);
            (half.max(upper), half.min(lower))
        }
        None => (upper, lower),
    };
    BalanceWindow {
        q_plus,
        q_minus,
        b: b_i,
    }
}

/// `R_ij |P_ij|`. Dirichlet rows (`window = None`) are unconstrained.
pub fn limited_magnitude(p: f64, window: Option<&BalanceWindow>) -> f64 {
    let Some(w) = window else {
        return p.abs();
    };
    // Windows that should vanish can come out a few ulps on the wrong side.
    let r = if w.b < 0.0 || (w.b == 0.0 && p >= 0.0) {
        signum(p) * p.min(w.q_plus)
    } else {
        signum(p) * p.max(w.q_minus)
    };
    r.max(0.0)
}

/// Limited balancing flux `alpha_ij P_ij` with `alpha_ij = alpha_ji`.
pub fn limit_balancing(
    p_ij: f64,
    window_i: Option<&BalanceWindow>,
    window_j: Option<&BalanceWindow>,
) -> f64 {
    let r_ij = limited_magnitude(p_ij, window_i);
    let r_ji = limited_magnitude(-p_ij, window_j);
    signum(p_ij) * r_ij.min(r_ji)
}

#[inline]
fn signum(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Well-balanced bar state `ubar_ij + alpha P_ij + b_i / a_i^C`.
#[inline]
pub fn wb_bar_state(ubar_ij: f64, alpha_p: f64, b_i: f64, ac_i: f64) -> f64 {
    ubar_ij + alpha_p + b_i / ac_i
}

/// Well-balanced target flux `2 d_ij ((u_i - u_j)/2 - alpha P_ij) + a^R_ij (u_i - u_j)`.
#[inline]
pub fn wb_target_flux(ui: f64, uj: f64, dij: f64, arij: f64, alpha_p: f64) -> f64 {
    2.0 * dij * (0.5 * (ui - uj) - alpha_p) + arij * (ui - uj)
}

/// Limits `f^s_ij` against the bar-state bounds. `other` carries the
/// reverse bar state and bounds of `j`; `None` marks a Dirichlet node `j`,
/// for which only the constraint of row `i` applies.
pub fn wb_limit(
    fs: f64,
    dij: f64,
    ubar_s_ij: f64,
    bi: Bounds,
    other: Option<(f64, Bounds)>,
) -> f64 {
    let d2 = 2.0 * dij;
    if fs > 0.0 {
        let mut cap = d2 * (bi.max - ubar_s_ij);
        if let Some((ubar_s_ji, bj)) = other {
            cap = cap.min(d2 * (ubar_s_ji - bj.min));
        }
        fs.min(cap)
    } else if fs < 0.0 {
        let mut cap = d2 * (bi.min - ubar_s_ij);
        if let Some((ubar_s_ji, bj)) = other {
            cap = cap.max(d2 * (ubar_s_ji - bj.max));
        }
        fs.max(cap)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Mc,
    Wmc,
}

/// Switches for [`wmc_state`]; `limited = false` forces `alpha = 1` and
/// `f^{s,*} = f^s` (and `f* = f` in [`mc_state`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LimiterSettings {
    pub variant: WbVariant,
    pub limited: bool,
}

impl Default for LimiterSettings {
    fn default() -> Self {
        LimiterSettings {
            variant: WbVariant::Full,
            limited: true,
        }
    }
}

/// Edge quantities of one limiter sweep.
#[derive(Debug, Clone)]
pub struct EdgeState {
    pub scheme: Scheme,
    /// Bar states `ubar_ij`.
    pub ubar: Vec<f64>,
    /// MC target flux `f_ij`.
    pub ftarget: Vec<f64>,
    /// MC limited flux `f*_ij`.
    pub fstar: Vec<f64>,
    /// Per-node MC bounds over `N_i`.
    pub u_bounds: Vec<Bounds>,
    /// Net source `s_i` per node.
    pub s: Vec<f64>,
    pub p: Vec<f64>,
    pub ufict: Vec<f64>,
    pub q_plus: Vec<f64>,
    pub q_minus: Vec<f64>,
    /// `R_ij |P_ij|`.
    pub r_abs: Vec<f64>,
    pub alpha_p: Vec<f64>,
    pub ubar_s: Vec<f64>,
    pub fs: Vec<f64>,
    pub fs_star: Vec<f64>,
    pub ubar_s_star: Vec<f64>,
    /// Per-node bounds over the well-balanced bar states of row `i`.
    pub ubar_bounds: Vec<Bounds>,
    /// `2 d_ij` times the limited bar state of the active scheme; these are
    /// the terms entering the row residual and the fixed-point update.
    pub limited_flux: Vec<f64>,
}

impl EdgeState {
    fn new(scheme: Scheme, nnz: usize, n: usize) -> EdgeState {
        let nan = || vec![f64::NAN; nnz];
        let no_bounds = Bounds {
            min: f64::NAN,
            max: f64::NAN,
        };
        EdgeState {
            scheme,
            ubar: nan(),
            ftarget: nan(),
            fstar: nan(),
            u_bounds: vec![no_bounds; n],
            s: vec![f64::NAN; n],
            p: nan(),
            ufict: nan(),
            q_plus: nan(),
            q_minus: nan(),
            r_abs: nan(),
            alpha_p: nan(),
            ubar_s: nan(),
            fs: nan(),
            fs_star: nan(),
            ubar_s_star: nan(),
            ubar_bounds: vec![no_bounds; n],
            limited_flux: nan(),
        }
    }

    /// Correction factor `alpha_ij`, recovered from the limited flux.
    pub fn alpha(&self, k: usize) -> f64 {
        let p = self.p[k].abs();
        if p > 0.0 {
            self.alpha_p[k].abs() / p
        } else {
            1.0
        }
    }
}

/// MC sweep: bar states, target fluxes and their limited counterparts.
pub fn mc_state(disc: &Discretization, u: &[f64], limited: bool) -> EdgeState {
    let ops = &disc.ops;
    let pat = &ops.pattern;
    let n = pat.n_rows();
    let mut st = EdgeState::new(Scheme::Mc, pat.nnz(), n);

    for i in 0..n {
        let (mut lo, mut hi) = (u[i], u[i]);
        for &j in pat.cols(i) {
            lo = lo.min(u[j]);
            hi = hi.max(u[j]);
        }
        st.u_bounds[i] = Bounds { min: lo, max: hi };
    }

    for e in &disc.edges {
        let (i, j, k, kt) = (e.i, e.j, e.ij, e.ji);
        let d = ops.d.values[k];
        st.ubar[k] = bar_state(u[i], u[j], ops.aconv.values[k], d);
        st.ubar[kt] = bar_state(u[j], u[i], ops.aconv.values[kt], d);
        let f = mc_target_flux(u[i], u[j], d, ops.areac.values[k]);
        st.ftarget[k] = f;
        st.ftarget[kt] = -f;
        let fstar = if limited {
            mc_limit(
                f,
                d,
                st.ubar[k],
                st.ubar[kt],
                st.u_bounds[i],
                st.u_bounds[j],
            )
        } else {
            f
        };
        st.fstar[k] = fstar;
        st.fstar[kt] = -fstar;
        for (a, b, kk) in [(i, j, k), (j, i, kt)] {
            st.limited_flux[kk] =
                scaled_bar_state(u[a], u[b], ops.aconv.values[kk], d) + st.fstar[kk];
        }
    }
    st
}

/// WMC sweep for the snapshot `u`.
pub fn wmc_state(disc: &Discretization, u: &[f64], settings: LimiterSettings) -> Result<EdgeState> {
    let ops = &disc.ops;
    let pat = &ops.pattern;
    let n = pat.n_rows();
    let m = ops.num_free;
    let mut st = EdgeState::new(Scheme::Wmc, pat.nnz(), n);

    for i in 0..n {
        st.s[i] = crate::problem::net_source(disc.source[i], disc.reaction[i], u[i]);
    }

    for e in &disc.edges {
        let (i, j, k, kt) = (e.i, e.j, e.ij, e.ji);
        let d = ops.d.values[k];
        st.ubar[k] = bar_state(u[i], u[j], ops.aconv.values[k], d);
        st.ubar[kt] = bar_state(u[j], u[i], ops.aconv.values[kt], d);
        let f = mc_target_flux(u[i], u[j], d, ops.areac.values[k]);
        st.ftarget[k] = f;
        st.ftarget[kt] = -f;
        let x = &disc.mesh.vertices;
        let p = balancing_flux(
            st.s[i],
            st.s[j],
            x[i],
            x[j],
            disc.velocity[i],
            disc.velocity[j],
        )
        .map_err(|_| Error::DegenerateVelocity { i, j })?;
        st.p[k] = p;
        st.p[kt] = -p;
    }

    // Windows and R_ij |P_ij| per directed entry.
    for i in 0..n {
        for (j, k) in pat.neighbors(i) {
            if st.p[k].is_nan() {
                continue;
            }
            if i < m {
                let fict = match settings.variant {
                    WbVariant::Full => {
                        let uf = disc.fictitious[k].evaluate(u, i);
                        st.ufict[k] = uf;
                        Some(uf)
                    }
                    WbVariant::Simplified => None,
                };
                let w = balance_window(u[i], u[j], st.ubar[k], ops.b[i], ops.ac_row[i], fict);
                st.q_plus[k] = w.q_plus;
                st.q_minus[k] = w.q_minus;
                st.r_abs[k] = limited_magnitude(st.p[k], Some(&w));
            } else {
                st.r_abs[k] = st.p[k].abs();
            }
        }
    }

    for e in &disc.edges {
        let (k, kt) = (e.ij, e.ji);
        let ap = if settings.limited {
            signum(st.p[k]) * st.r_abs[k].min(st.r_abs[kt])
        } else {
            st.p[k]
        };
        st.alpha_p[k] = ap;
        st.alpha_p[kt] = -ap;
    }

    for i in 0..m {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (j, k) in pat.neighbors(i) {
            let d = ops.d.values[k];
            st.fs[k] = wb_target_flux(u[i], u[j], d, ops.areac.values[k], st.alpha_p[k]);
            st.ubar_s[k] = wb_bar_state(st.ubar[k], st.alpha_p[k], ops.b[i], ops.ac_row[i]);
            lo = lo.min(st.ubar_s[k]);
            hi = hi.max(st.ubar_s[k]);
        }
        st.ubar_bounds[i] = Bounds { min: lo, max: hi };
    }

    for e in &disc.edges {
        let (i, j, k, kt) = (e.i, e.j, e.ij, e.ji);
        let d = ops.d.values[k];
        match (i < m, j < m) {
            (true, true) => {
                let fss = if settings.limited {
                    wb_limit(
                        st.fs[k],
                        d,
                        st.ubar_s[k],
                        st.ubar_bounds[i],
                        Some((st.ubar_s[kt], st.ubar_bounds[j])),
                    )
                } else {
                    st.fs[k]
                };
                st.fs_star[k] = fss;
                st.fs_star[kt] = -fss;
            }
            (true, false) => {
                st.fs_star[k] = if settings.limited {
                    wb_limit(st.fs[k], d, st.ubar_s[k], st.ubar_bounds[i], None)
                } else {
                    st.fs[k]
                };
            }
            (false, true) => {
                st.fs_star[kt] = if settings.limited {
                    wb_limit(st.fs[kt], d, st.ubar_s[kt], st.ubar_bounds[j], None)
                } else {
                    st.fs[kt]
                };
            }
            (false, false) => {}
        }
    }

    for i in 0..m {
        for (j, k) in pat.neighbors(i) {
            let d = ops.d.values[k];
            let d2 = 2.0 * d;
            st.ubar_s_star[k] = st.ubar_s[k] + st.fs_star[k] / d2;
            let scaled_s = scaled_bar_state(u[i], u[j], ops.aconv.values[k], d)
                + d2 * st.alpha_p[k]
                + d2 * (ops.b[i] / ops.ac_row[i]);
            st.limited_flux[k] = scaled_s + st.fs_star[k];
        }
    }
    Ok(st)
}
