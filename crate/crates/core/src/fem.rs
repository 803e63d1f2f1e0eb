//! Displacement-controlled quasi-static solver for the standardized
//! specimen under exact incompressibility (condensed plane stress).
//!
//! Newton-Raphson with an analytic residual, a numerically assembled
//! tangent (central differences of the stress with respect to the
//! deformation gradient), a backtracking line search on the residual norm,
//! load-increment bisection on failure, and a sparse direct linear solve.
//! Dirichlet data is affine on the whole outer boundary,
//! u(X) = (lambda_k - 1) X, which makes the un-notched specimen an exact
//! analytic test case. All per-unit-thickness 2D quantities are multiplied
//! by the specimen thickness when reported as reaction forces.

use std::sync::Once;

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};

use crate::constitutive::{piola_condensed_2d, ModelId, Params};
use crate::error::{Error, Result};
use crate::specimen::{ExperimentDescriptor, Mesh, TAG_RIGHT, TAG_TOP};

/// Quadrature points and weights of the 3-point interior rule on the
/// reference triangle (exact through degree 2).
const QP: [[f64; 2]; 3] = [
    [1.0 / 6.0, 1.0 / 6.0],
    [2.0 / 3.0, 1.0 / 6.0],
    [1.0 / 6.0, 2.0 / 3.0],
];
const QW: f64 = 1.0 / 6.0;

/// Newton and substepping controls.
#[derive(Debug, Clone, Copy)]
pub struct SolverOpts {
    /// Absolute residual tolerance, N/mm (per unit thickness).
    pub tol_abs: f64,
    /// Tolerance relative to the first-iteration residual of each step.
    pub tol_rel: f64,
    pub max_iterations: usize,
    /// Load-increment bisection depth on Newton failure.
    pub max_bisections: usize,
}

impl Default for SolverOpts {
    fn default() -> Self {
        Self {
            tol_abs: 1e-9,
            tol_rel: 1e-10,
            max_iterations: 25,
            max_bisections: 4,
        }
    }
}

/// One converged (or abandoned) load step.
#[derive(Debug, Clone)]
pub struct LoadStep {
    pub lambda: f64,
    /// Nodal displacements (mm), length 2 n_nodes; zeros when unconverged.
    pub displacement: Vec<f64>,
    /// (R_x, R_y) in N; zeros when unconverged.
    pub reaction: [f64; 2],
    pub converged: bool,
    pub newton_iters: usize,
}

/// Per-step solver output. Converged flags form a prefix: once a step
/// fails, all later steps are unconverged and zero-filled.
#[derive(Debug, Clone)]
pub struct SolutionSeries {
    pub steps: Vec<LoadStep>,
    pub last_converged_step: usize,
}

/// T6 shape function values at a reference point.
pub fn shape_values(xi: f64, eta: f64) -> [f64; 6] {
    let zeta = 1.0 - xi - eta;
    [
        zeta * (2.0 * zeta - 1.0),
        xi * (2.0 * xi - 1.0),
        eta * (2.0 * eta - 1.0),
        4.0 * xi * zeta,
        4.0 * xi * eta,
        4.0 * eta * zeta,
    ]
}

fn shape_gradients(xi: f64, eta: f64) -> [[f64; 2]; 6] {
    let zeta = 1.0 - xi - eta;
    [
        [1.0 - 4.0 * zeta, 1.0 - 4.0 * zeta],
        [4.0 * xi - 1.0, 0.0],
        [0.0, 4.0 * eta - 1.0],
        [4.0 * (zeta - xi), -4.0 * xi],
        [4.0 * eta, 4.0 * xi],
        [-4.0 * eta, 4.0 * (zeta - eta)],
    ]
}

/// Precomputed element data: physical shape gradients per quadrature point
/// and the integration weight (elements are straight-sided, so the Jacobian
/// is constant per element).
struct ElementData {
    nodes: [usize; 6],
    /// grad[qp][node] = physical gradient of N_node at quadrature point qp.
    grad: [[[f64; 2]; 6]; 3],
    /// w * det(J) shared by all quadrature points.
    weight: f64,
}

fn precompute_elements(mesh: &Mesh) -> Result<Vec<ElementData>> {
    let mut out = Vec::with_capacity(mesh.n_elements());
    for (e, tri) in mesh.tris.iter().enumerate() {
        let (p0, p1, p2) = (
            mesh.coords[tri[0]],
            mesh.coords[tri[1]],
            mesh.coords[tri[2]],
        );
        let j = [
            [p1[0] - p0[0], p2[0] - p0[0]],
            [p1[1] - p0[1], p2[1] - p0[1]],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det <= 0.0 {
            return Err(Error::Mesh(format!(
                "element {e} has non-positive Jacobian {det:e}"
            )));
        }
        // J^-T rows
        let jinv_t = [
            [j[1][1] / det, -j[1][0] / det],
            [-j[0][1] / det, j[0][0] / det],
        ];
        let mut grad = [[[0.0; 2]; 6]; 3];
        for (q, qp) in QP.iter().enumerate() {
            let gref = shape_gradients(qp[0], qp[1]);
            for a in 0..6 {
                for i in 0..2 {
                    grad[q][a][i] = jinv_t[i][0] * gref[a][0] + jinv_t[i][1] * gref[a][1];
                }
            }
        }
        out.push(ElementData {
            nodes: *tri,
            grad,
            weight: QW * det,
        });
    }
    Ok(out)
}

/// Internal-force contribution of one element given its 12 local dofs,
/// per unit thickness.
fn element_residual(
    el: &ElementData,
    model: ModelId,
    params: &Params,
    d: &[f64; 12],
) -> Result<[f64; 12]> {
    let mut r = [0.0; 12];
    for q in 0..3 {
        let g = &el.grad[q];
        let mut f = [[1.0, 0.0], [0.0, 1.0]];
        for a in 0..6 {
            for i in 0..2 {
                for jj in 0..2 {
                    f[i][jj] += d[2 * a + i] * g[a][jj];
                }
            }
        }
        let p = piola_condensed_2d(model, f, params)?;
        for a in 0..6 {
            for i in 0..2 {
                r[2 * a + i] += el.weight * (p[i][0] * g[a][0] + p[i][1] * g[a][1]);
            }
        }
    }
    Ok(r)
}

struct Assembler<'m> {
    mesh: &'m Mesh,
    elements: Vec<ElementData>,
    /// Compact index per free dof, usize::MAX for constrained dofs.
    free_index: Vec<usize>,
    free_dofs: Vec<usize>,
}

impl<'m> Assembler<'m> {
    fn new(mesh: &'m Mesh) -> Result<Self> {
        let elements = precompute_elements(mesh)?;
        let n_dof = 2 * mesh.n_nodes();
        let mut free_index = vec![usize::MAX; n_dof];
        let mut free_dofs = Vec::new();
        for node in 0..mesh.n_nodes() {
            if !mesh.is_constrained(node) {
                for c in 0..2 {
                    free_index[2 * node + c] = free_dofs.len();
                    free_dofs.push(2 * node + c);
                }
            }
        }
        Ok(Self {
            mesh,
            elements,
            free_index,
            free_dofs,
        })
    }

    fn gather(&self, el: &ElementData, u: &[f64]) -> [f64; 12] {
        let mut d = [0.0; 12];
        for a in 0..6 {
            d[2 * a] = u[2 * el.nodes[a]];
            d[2 * a + 1] = u[2 * el.nodes[a] + 1];
        }
        d
    }

    /// Full residual over all dofs, per unit thickness.
    fn residual(&self, model: ModelId, params: &Params, u: &[f64]) -> Result<Vec<f64>> {
        let mut r = vec![0.0; 2 * self.mesh.n_nodes()];
        for el in &self.elements {
            let d = self.gather(el, u);
            let re = element_residual(el, model, params, &d)?;
            for a in 0..6 {
                r[2 * el.nodes[a]] += re[2 * a];
                r[2 * el.nodes[a] + 1] += re[2 * a + 1];
            }
        }
        Ok(r)
    }

    fn free_norm(&self, r: &[f64]) -> f64 {
        self.free_dofs
            .iter()
            .map(|&d| r[d] * r[d])
            .sum::<f64>()
            .sqrt()
    }

    fn local_free(&self, el: &ElementData) -> [usize; 12] {
        let mut lf = [usize::MAX; 12];
        for a in 0..6 {
            for c in 0..2 {
                lf[2 * a + c] = self.free_index[2 * el.nodes[a] + c];
            }
        }
        lf
    }
}

/// Element tangent by central differences of the stress with respect to
/// the deformation gradient (step 1e-7 relative per component). Exact up
/// to the differencing error because F is affine in the nodal dofs.
fn element_tangent(
    el: &ElementData,
    model: ModelId,
    params: &Params,
    d: &[f64; 12],
) -> Result<[[f64; 12]; 12]> {
    let mut k = [[0.0; 12]; 12];
    for q in 0..3 {
        let g = &el.grad[q];
        let mut f = [[1.0, 0.0], [0.0, 1.0]];
        for a in 0..6 {
            for i in 0..2 {
                for jj in 0..2 {
                    f[i][jj] += d[2 * a + i] * g[a][jj];
                }
            }
        }
        // dp[i][kk][j][l] = d P_ik / d F_jl
        let mut dp = [[[[0.0; 2]; 2]; 2]; 2];
        for j in 0..2 {
            for l in 0..2 {
                let h = 1e-7 * f[j][l].abs().max(1.0);
                let mut fp = f;
                let mut fm = f;
                fp[j][l] += h;
                fm[j][l] -= h;
                let pp = piola_condensed_2d(model, fp, params)?;
                let pm = piola_condensed_2d(model, fm, params)?;
                let scale = 1.0 / (2.0 * h);
                for i in 0..2 {
                    for kk in 0..2 {
                        dp[i][kk][j][l] = (pp[i][kk] - pm[i][kk]) * scale;
                    }
                }
            }
        }
        for b in 0..6 {
            for j in 0..2 {
                // c[i][kk] = sum_l dp[i][kk][j][l] g_b[l]
                let mut c = [[0.0; 2]; 2];
                for i in 0..2 {
                    for kk in 0..2 {
                        c[i][kk] = dp[i][kk][j][0] * g[b][0] + dp[i][kk][j][1] * g[b][1];
                    }
                }
                for a in 0..6 {
                    for i in 0..2 {
                        k[2 * a + i][2 * b + j] +=
                            el.weight * (c[i][0] * g[a][0] + c[i][1] * g[a][1]);
                    }
                }
            }
        }
    }
    Ok(k)
}

/// Sparse tangent with a fixed sparsity pattern and a precomputed
/// element-to-values scatter map; rebuilt values every Newton iteration.
struct TangentWorkspace {
    mat: SparseColMat<usize, f64>,
    /// Value-array position per element per (row-local, col-local) pair;
    /// u32::MAX marks constrained pairs.
    scatter: Vec<[u32; 144]>,
}

impl TangentWorkspace {
    fn new(asm: &Assembler) -> Result<Self> {
        let n_free = asm.free_dofs.len();
        let mut triplets: Vec<Triplet<usize, usize, f64>> =
            Vec::with_capacity(asm.elements.len() * 144);
        for el in &asm.elements {
            let lf = asm.local_free(el);
            for &gi in lf.iter().filter(|&&v| v != usize::MAX) {
                for &gj in lf.iter().filter(|&&v| v != usize::MAX) {
                    triplets.push(Triplet::new(gi, gj, 1.0));
                }
            }
        }
        let mat = SparseColMat::try_new_from_triplets(n_free, n_free, &triplets)
            .map_err(|e| Error::Numeric(format!("tangent pattern assembly failed: {e:?}")))?;
        let sym = mat.symbolic();
        let col_ptr = sym.col_ptr();
        let row_idx = sym.row_idx();
        let mut scatter = Vec::with_capacity(asm.elements.len());
        for el in &asm.elements {
            let lf = asm.local_free(el);
            let mut positions = [u32::MAX; 144];
            for (il, &gi) in lf.iter().enumerate() {
                if gi == usize::MAX {
                    continue;
                }
                for (jl, &gj) in lf.iter().enumerate() {
                    if gj == usize::MAX {
                        continue;
                    }
                    let lo = col_ptr[gj];
                    let hi = col_ptr[gj + 1];
                    let off = row_idx[lo..hi]
                        .binary_search(&gi)
                        .expect("pattern contains every element pair");
                    positions[il * 12 + jl] = (lo + off) as u32;
                }
            }
            scatter.push(positions);
        }
        Ok(Self { mat, scatter })
    }

    fn assemble(&mut self, asm: &Assembler, model: ModelId, params: &Params, u: &[f64]) -> Result<()> {
        self.mat.val_mut().fill(0.0);
        for (e, el) in asm.elements.iter().enumerate() {
            let d = asm.gather(el, u);
            let ke = element_tangent(el, model, params, &d)?;
            let positions = &self.scatter[e];
            let vals = self.mat.val_mut();
            for il in 0..12 {
                for jl in 0..12 {
                    let p = positions[il * 12 + jl];
                    if p != u32::MAX {
                        vals[p as usize] += ke[il][jl];
                    }
                }
            }
        }
        Ok(())
    }
}

fn set_faer_sequential() {
    static INIT: Once = Once::new();
    INIT.call_once(|| {
        // bit-for-bit determinism independent of the caller's thread budget
        faer::set_global_parallelism(Par::Seq);
    });
}

/// Solves the displacement-controlled load program for one material.
///
/// Individual step failures are not errors: the step and all later ones are
/// marked unconverged and zero-filled. Hard failures (inadmissible
/// parameters, broken mesh) are.
pub fn solve(
    mesh: &Mesh,
    desc: &ExperimentDescriptor,
    model: ModelId,
    params: &Params,
    opts: &SolverOpts,
) -> Result<SolutionSeries> {
    set_faer_sequential();
    // reject bad params up front rather than as a fake non-convergence
    piola_condensed_2d(model, [[1.0, 0.0], [0.0, 1.0]], params)?;

    let asm = Assembler::new(mesh)?;
    let mut ws = TangentWorkspace::new(&asm)?;
    let lambdas = desc.load_program();
    let n_nodes = mesh.n_nodes();
    let mut u = vec![0.0; 2 * n_nodes];
    let mut steps: Vec<LoadStep> = Vec::with_capacity(lambdas.len());
    let mut last_converged = 0usize;
    let mut lambda_prev = 1.0;
    let mut failed = false;

    for (k, &lambda) in lambdas.iter().enumerate() {
        if failed {
            steps.push(LoadStep {
                lambda,
                displacement: vec![0.0; 2 * n_nodes],
                reaction: [0.0; 2],
                converged: false,
                newton_iters: 0,
            });
            continue;
        }
        match advance(
            &asm, &mut ws, mesh, model, params, opts, &mut u, lambda_prev, lambda, 0,
        ) {
            Ok(iters) => {
                let r = asm.residual(model, params, &u)?;
                let reaction = edge_reactions(mesh, desc, &r);
                steps.push(LoadStep {
                    lambda,
                    displacement: u.clone(),
                    reaction,
                    converged: true,
                    newton_iters: iters,
                });
                last_converged = k + 1;
                lambda_prev = lambda;
            }
            Err(_) => {
                failed = true;
                steps.push(LoadStep {
                    lambda,
                    displacement: vec![0.0; 2 * n_nodes],
                    reaction: [0.0; 2],
                    converged: false,
                    newton_iters: 0,
                });
            }
        }
    }
    Ok(SolutionSeries {
        steps,
        last_converged_step: last_converged,
    })
}

/// Advances from lambda_from (with `u` holding its solution) to lambda_to,
/// bisecting the increment on failure. On error `u` is restored.
#[allow(clippy::too_many_arguments)]
fn advance(
    asm: &Assembler,
    ws: &mut TangentWorkspace,
    mesh: &Mesh,
    model: ModelId,
    params: &Params,
    opts: &SolverOpts,
    u: &mut Vec<f64>,
    lambda_from: f64,
    lambda_to: f64,
    depth: usize,
) -> Result<usize> {
    let saved = u.clone();
    let attempt = {
        // affine predictor everywhere, exact Dirichlet data on the boundary
        let dl = lambda_to - lambda_from;
        for node in 0..mesh.n_nodes() {
            let x = mesh.coords[node];
            if mesh.is_constrained(node) {
                u[2 * node] = (lambda_to - 1.0) * x[0];
                u[2 * node + 1] = (lambda_to - 1.0) * x[1];
            } else {
                u[2 * node] += dl * x[0];
                u[2 * node + 1] += dl * x[1];
            }
        }
        newton(asm, ws, model, params, opts, u)
    };
    match attempt {
        Ok(iters) => Ok(iters),
        Err(err) => {
            *u = saved.clone();
            if depth >= opts.max_bisections {
                return Err(err);
            }
            let mid = 0.5 * (lambda_from + lambda_to);
            let i1 = advance(
                asm, ws, mesh, model, params, opts, u, lambda_from, mid, depth + 1,
            )
            .map_err(|e| {
                *u = saved.clone();
                e
            })?;
            let i2 = advance(asm, ws, mesh, model, params, opts, u, mid, lambda_to, depth + 1)
                .map_err(|e| {
                    *u = saved;
                    e
                })?;
            Ok(i1 + i2)
        }
    }
}

fn newton(
    asm: &Assembler,
    ws: &mut TangentWorkspace,
    model: ModelId,
    params: &Params,
    opts: &SolverOpts,
    u: &mut [f64],
) -> Result<usize> {
    let mut r = asm.residual(model, params, u)?;
    let r0 = asm.free_norm(&r);
    let tol = opts.tol_abs + opts.tol_rel * r0;
    let mut rn = r0;
    for iter in 0..=opts.max_iterations {
        if !rn.is_finite() {
            return Err(Error::Numeric("residual is not finite".into()));
        }
        if rn <= tol {
            return Ok(iter);
        }
        if iter == opts.max_iterations {
            break;
        }
        ws.assemble(asm, model, params, u)?;
        let mut rhs = Mat::<f64>::zeros(asm.free_dofs.len(), 1);
        for (fi, &dof) in asm.free_dofs.iter().enumerate() {
            rhs[(fi, 0)] = r[dof];
        }
        // the tangent is symmetric; Cholesky is the fast path and LU covers
        // indefinite states near instabilities
        let du = match ws.mat.sp_cholesky(faer::Side::Lower) {
            Ok(chol) => chol.solve(&rhs),
            Err(_) => ws
                .mat
                .sp_lu()
                .map_err(|e| Error::Numeric(format!("sparse LU failed: {e:?}")))?
                .solve(&rhs),
        };
        if (0..asm.free_dofs.len()).any(|fi| !du[(fi, 0)].is_finite()) {
            return Err(Error::Numeric("newton update is not finite".into()));
        }
        // backtracking line search on the residual norm; the full step wins
        // whenever the problem is mild
        let u_base: Vec<f64> = asm.free_dofs.iter().map(|&d| u[d]).collect();
        let mut accepted = None;
        for alpha in [1.0, 0.5, 0.25, 0.125, 0.0625] {
            for (fi, &dof) in asm.free_dofs.iter().enumerate() {
                u[dof] = u_base[fi] - alpha * du[(fi, 0)];
            }
            match asm.residual(model, params, u) {
                Ok(rt) => {
                    let rtn = asm.free_norm(&rt);
                    if rtn.is_finite() && rtn < rn {
                        accepted = Some((rt, rtn));
                        break;
                    }
                }
                Err(_) => {} // inverted element at this step length; shorten
            }
        }
        match accepted {
            Some((rt, rtn)) => {
                r = rt;
                rn = rtn;
            }
            None => {
                return Err(Error::Numeric(format!(
                    "newton line search failed at residual {rn:e}"
                )));
            }
        }
    }
    Err(Error::Numeric(format!(
        "newton stalled at residual {rn:e} (tolerance {tol:e})"
    )))
}

/// Per-edge reaction forces in N: the assembled residual summed over the
/// right (x) and top (y) edge nodes, times thickness.
fn edge_reactions(mesh: &Mesh, desc: &ExperimentDescriptor, residual: &[f64]) -> [f64; 2] {
    let mut rx = 0.0;
    let mut ry = 0.0;
    for node in 0..mesh.n_nodes() {
        let tag = mesh.boundary_tags[node];
        if tag & TAG_RIGHT != 0 {
            rx += residual[2 * node];
        }
        if tag & TAG_TOP != 0 {
            ry += residual[2 * node + 1];
        }
    }
    [rx * desc.thickness, ry * desc.thickness]
}

/// Sum of the constrained-node residual forces (N/mm); a Newton's-third-law
/// diagnostic that must vanish at converged states.
pub fn constrained_residual_sum(mesh: &Mesh, residual: &[f64]) -> [f64; 2] {
    let mut s = [0.0; 2];
    for node in 0..mesh.n_nodes() {
        if mesh.is_constrained(node) {
            s[0] += residual[2 * node];
            s[1] += residual[2 * node + 1];
        }
    }
    s
}

/// Recomputes the full assembled residual for a stored displacement field;
/// test hook for equilibrium checks.
pub fn assembled_residual(
    mesh: &Mesh,
    model: ModelId,
    params: &Params,
    u: &[f64],
) -> Result<Vec<f64>> {
    Assembler::new(mesh)?.residual(model, params, u)
}

/// Element lookup accelerated by a uniform bin grid; resolves ties by the
/// lowest element index for determinism.
pub struct PointLocator {
    bins_x: usize,
    bins_y: usize,
    min: [f64; 2],
    inv_cell: [f64; 2],
    bins: Vec<Vec<usize>>,
}

impl PointLocator {
    pub fn new(mesh: &Mesh) -> Self {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for p in &mesh.coords {
            for c in 0..2 {
                min[c] = min[c].min(p[c]);
                max[c] = max[c].max(p[c]);
            }
        }
        let target = (mesh.n_elements() as f64).sqrt().ceil() as usize;
        let bins_x = target.clamp(4, 256);
        let bins_y = bins_x;
        let span = [
            (max[0] - min[0]).max(1e-12),
            (max[1] - min[1]).max(1e-12),
        ];
        let inv_cell = [bins_x as f64 / span[0], bins_y as f64 / span[1]];
        let mut bins = vec![Vec::new(); bins_x * bins_y];
        for (e, tri) in mesh.tris.iter().enumerate() {
            let mut lo = [f64::INFINITY; 2];
            let mut hi = [f64::NEG_INFINITY; 2];
            for &n in &tri[..3] {
                for c in 0..2 {
                    lo[c] = lo[c].min(mesh.coords[n][c]);
                    hi[c] = hi[c].max(mesh.coords[n][c]);
                }
            }
            let bx0 = (((lo[0] - min[0]) * inv_cell[0]) as isize).clamp(0, bins_x as isize - 1);
            let bx1 = (((hi[0] - min[0]) * inv_cell[0]) as isize).clamp(0, bins_x as isize - 1);
            let by0 = (((lo[1] - min[1]) * inv_cell[1]) as isize).clamp(0, bins_y as isize - 1);
            let by1 = (((hi[1] - min[1]) * inv_cell[1]) as isize).clamp(0, bins_y as isize - 1);
            for by in by0..=by1 {
                for bx in bx0..=bx1 {
                    bins[by as usize * bins_x + bx as usize].push(e);
                }
            }
        }
        for b in &mut bins {
            b.sort_unstable();
        }
        Self {
            bins_x,
            bins_y,
            min,
            inv_cell,
            bins,
        }
    }

    /// Containing element and reference coordinates of `p`, if any.
    pub fn locate(&self, mesh: &Mesh, p: [f64; 2]) -> Option<(usize, f64, f64)> {
        let bx = (((p[0] - self.min[0]) * self.inv_cell[0]) as isize)
            .clamp(0, self.bins_x as isize - 1) as usize;
        let by = (((p[1] - self.min[1]) * self.inv_cell[1]) as isize)
            .clamp(0, self.bins_y as isize - 1) as usize;
        const TOL: f64 = 1e-9;
        for &e in &self.bins[by * self.bins_x + bx] {
            let t = &mesh.tris[e];
            let (p0, p1, p2) = (mesh.coords[t[0]], mesh.coords[t[1]], mesh.coords[t[2]]);
            let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
            let xi = ((p[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p[1] - p0[1])) / det;
            let eta = ((p1[0] - p0[0]) * (p[1] - p0[1]) - (p[0] - p0[0]) * (p1[1] - p0[1])) / det;
            if xi >= -TOL && eta >= -TOL && xi + eta <= 1.0 + TOL {
                return Some((e, xi, eta));
            }
        }
        None
    }
}

/// Interpolates displacements at the given reference points for every load
/// step, using the element's quadratic shape functions.
///
/// Output layout per step: (u_x(p0), u_y(p0), u_x(p1), ...).
pub fn sample_displacements(
    series: &SolutionSeries,
    mesh: &Mesh,
    points: &[[f64; 2]],
) -> Result<Vec<Vec<f64>>> {
    let locator = PointLocator::new(mesh);
    let locations: Vec<(usize, f64, f64)> = points
        .iter()
        .map(|&p| {
            locator.locate(mesh, p).ok_or_else(|| {
                Error::Descriptor(format!(
                    "sample point ({:.4}, {:.4}) not found in any element; descriptor and mesh disagree",
                    p[0], p[1]
                ))
            })
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(series.steps.len());
    for step in &series.steps {
        let mut row = Vec::with_capacity(2 * points.len());
        for &(e, xi, eta) in &locations {
            let n = shape_values(xi, eta);
            let tri = &mesh.tris[e];
            let mut ux = 0.0;
            let mut uy = 0.0;
            for a in 0..6 {
                ux += n[a] * step.displacement[2 * tri[a]];
                uy += n[a] * step.displacement[2 * tri[a] + 1];
            }
            row.push(ux);
            row.push(uy);
        }
        out.push(row);
    }
    Ok(out)
}
