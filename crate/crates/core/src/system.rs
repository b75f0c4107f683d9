//! Global assembly and solution of the discrete Stokes problem.
//!
//! Velocity unknowns are numbered edge blocks first (`edge·2k + c·k + j`,
//! shared by the two cells of an edge because the edge basis is global), then
//! one interior block per cell. Boundary edge DoFs carry Dirichlet data and
//! are eliminated. The pressure is discontinuous `P_{k-1}` per cell (`P_0` for
//! the reduced method) with zero mean enforced by one Lagrange multiplier.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::element::{Element, LocalMatrices};
use crate::linalg::{lu_solve, minres, relative_residual, sparse_solve, TripletMatrix};
use crate::mesh::PolyMesh;
use crate::polyspace::{edge_legendre, edge_quadrature};
use crate::rt::{rt_interp_for, rt_load};
use crate::{Error, Point, Result};

/// A vector field callback.
pub type VectorField<'a> = &'a (dyn Fn(Point) -> [f64; 2] + Sync);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Standard,
    Robust,
    Reduced,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Standard => "standard",
            Method::Robust => "robust",
            Method::Reduced => "reduced",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Method::Standard),
            "robust" => Ok(Method::Robust),
            "reduced" => Ok(Method::Reduced),
            _ => Err(Error::InvalidArgument(format!("unknown method '{s}'"))),
        }
    }
}

/// How the right-hand side tests the load.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LoadMode {
    /// `(f, Π v)` for `k = 2`, `(f, Q_{k-2} v)` otherwise.
    Standard,
    /// `(f, I^RT v)`.
    Robust,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SolverKind {
    #[default]
    Direct,
    Minres,
}

/// Per-cell data and the global velocity numbering of a mesh.
pub struct Discretization<'m> {
    pub mesh: &'m PolyMesh,
    pub k: usize,
    pub elements: Vec<Element>,
    pub locals: Vec<LocalMatrices>,
    /// `∫_K m_q` for the pressure monomials of each cell.
    pub pressure_means: Vec<DVector<f64>>,
}

impl<'m> Discretization<'m> {
    pub fn new(mesh: &'m PolyMesh, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::UnsupportedDegree(k));
        }
        let data: Vec<(Element, LocalMatrices, DVector<f64>)> = (0..mesh.num_cells())
            .into_par_iter()
            .map(|c| {
                let el = Element::new(mesh.geometry(c), k)?;
                let lm = el.local_matrices();
                let pb = el.basis_of(k - 1);
                let means = DVector::from_fn(pb.dim(), |q, _| el.quad.integrate(|p| pb.eval(p)[q]));
                Ok((el, lm, means))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut elements = Vec::with_capacity(data.len());
        let mut locals = Vec::with_capacity(data.len());
        let mut pressure_means = Vec::with_capacity(data.len());
        for (e, l, m) in data {
            elements.push(e);
            locals.push(l);
            pressure_means.push(m);
        }
        Ok(Discretization {
            mesh,
            k,
            elements,
            locals,
            pressure_means,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.elements.len()
    }

    fn n_interior(&self) -> usize {
        self.k * (self.k - 1)
    }

    pub fn n_velocity(&self) -> usize {
        2 * self.k * self.mesh.num_edges() + self.n_cells() * self.n_interior()
    }

    pub fn n_pressure_per_cell(&self) -> usize {
        self.k * (self.k + 1) / 2
    }

    /// Global index of every local DoF of a cell.
    pub fn local_to_global(&self, cell: usize) -> Vec<usize> {
        let k = self.k;
        let mut map = Vec::with_capacity(self.elements[cell].n_dofs());
        for ce in self.mesh.cell_edges(cell) {
            for c in 0..2 {
                for j in 0..k {
                    map.push(ce.edge * 2 * k + c * k + j);
                }
            }
        }
        let off = 2 * k * self.mesh.num_edges() + cell * self.n_interior();
        map.extend(off..off + self.n_interior());
        map
    }

    pub fn cell_dofs(&self, cell: usize, global: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.elements[cell].n_dofs(),
            self.local_to_global(cell).into_iter().map(|g| global[g]),
        )
    }

    /// Velocity mask of the Dirichlet DoFs.
    pub fn boundary_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n_velocity()];
        for (e, edge) in self.mesh.edges().iter().enumerate() {
            if edge.is_boundary() {
                for i in 0..2 * self.k {
                    mask[e * 2 * self.k + i] = true;
                }
            }
        }
        mask
    }

    /// Global DoF vector of a smooth field.
    pub fn interpolate(&self, u: VectorField) -> DVector<f64> {
        let mut x = DVector::zeros(self.n_velocity());
        let per_cell: Vec<DVector<f64>> = self
            .elements
            .par_iter()
            .map(|el| el.dof_evaluate(u))
            .collect();
        for (c, xc) in per_cell.iter().enumerate() {
            for (l, g) in self.local_to_global(c).into_iter().enumerate() {
                x[g] = xc[l];
            }
        }
        x
    }

    /// Boundary DoF values of `g`; zero elsewhere.
    pub fn boundary_values(&self, g: Option<VectorField>) -> Vec<f64> {
        let mut ub = vec![0.0; self.n_velocity()];
        let Some(g) = g else { return ub };
        let k = self.k;
        for (e, edge) in self.mesh.edges().iter().enumerate() {
            if !edge.is_boundary() {
                continue;
            }
            let cell = edge.cells[0].expect("boundary edge has a cell");
            let el = &self.elements[cell];
            let ge = el
                .cell
                .edges
                .iter()
                .find(|ge| ge.edge == e)
                .expect("edge belongs to its cell");
            let q = edge_quadrature(ge, 2 * k + 8).expect("supported degree");
            for ((&p, &w), &s) in q.rule.points.iter().zip(&q.rule.weights).zip(&q.params) {
                let v = g(p);
                let psi = edge_legendre(k, s);
                for c in 0..2 {
                    for j in 0..k {
                        ub[e * 2 * k + c * k + j] += w * v[c] * psi[j] / ge.length;
                    }
                }
            }
        }
        ub
    }

    /// Per-cell load vectors.
    pub fn loads(&self, f: VectorField, mode: LoadMode) -> Result<Vec<DVector<f64>>> {
        self.elements
            .par_iter()
            .map(|el| match mode {
                LoadMode::Standard => Ok(el.local_load(f)),
                LoadMode::Robust => {
                    let it = rt_interp_for(el)?;
                    rt_load(el, &it, f)
                }
            })
            .collect()
    }
}

/// Assembled saddle-point system with eliminated Dirichlet DoFs.
pub struct GlobalSystem {
    pub matrix: TripletMatrix,
    pub rhs: Vec<f64>,
    /// Unknown index of each velocity DoF, `None` on the boundary.
    pub free: Vec<Option<usize>>,
    pub n_free: usize,
    pub n_pressure: usize,
    /// Full velocity vector holding the Dirichlet values.
    pub boundary_values: Vec<f64>,
    pub nu: f64,
}

impl GlobalSystem {
    pub fn size(&self) -> usize {
        self.n_free + self.n_pressure + 1
    }

    pub fn pressure_offset(&self) -> usize {
        self.n_free
    }

    pub fn multiplier_index(&self) -> usize {
        self.n_free + self.n_pressure
    }
}

/// One cell's contribution to a saddle-point system.
struct CellBlock<'a> {
    vmap: Vec<usize>,
    a: &'a DMatrix<f64>,
    b: DMatrix<f64>,
    f: &'a DVector<f64>,
    p_offset: usize,
    means: Vec<f64>,
}

fn assemble_blocks(
    n_vel: usize,
    n_pressure: usize,
    mask: &[bool],
    ub: Vec<f64>,
    nu: f64,
    blocks: &[CellBlock],
) -> GlobalSystem {
    let mut free = vec![None; n_vel];
    let mut n_free = 0;
    for (i, &b) in mask.iter().enumerate() {
        if !b {
            free[i] = Some(n_free);
            n_free += 1;
        }
    }
    let n = n_free + n_pressure + 1;
    let lam = n_free + n_pressure;
    let mut mat = TripletMatrix::new(n);
    let mut rhs = vec![0.0; n];
    for blk in blocks {
        for (li, &gi) in blk.vmap.iter().enumerate() {
            let Some(ri) = free[gi] else { continue };
            rhs[ri] += blk.f[li];
            for (lj, &gj) in blk.vmap.iter().enumerate() {
                let v = nu * blk.a[(li, lj)];
                match free[gj] {
                    Some(rj) => mat.push(ri, rj, v),
                    None => rhs[ri] -= v * ub[gj],
                }
            }
        }
        for q in 0..blk.b.nrows() {
            let rq = n_free + blk.p_offset + q;
            for (lj, &gj) in blk.vmap.iter().enumerate() {
                let v = blk.b[(q, lj)];
                match free[gj] {
                    Some(rj) => {
                        mat.push(rq, rj, v);
                        mat.push(rj, rq, v);
                    }
                    None => rhs[rq] -= v * ub[gj],
                }
            }
            mat.push(rq, lam, blk.means[q]);
            mat.push(lam, rq, blk.means[q]);
        }
    }
    GlobalSystem {
        matrix: mat,
        rhs,
        free,
        n_free,
        n_pressure,
        boundary_values: ub,
        nu,
    }
}

/// Assembles the full method with per-cell loads and optional Dirichlet data.
pub fn assemble(
    disc: &Discretization,
    nu: f64,
    loads: &[DVector<f64>],
    dirichlet: Option<VectorField>,
) -> GlobalSystem {
    let np = disc.n_pressure_per_cell();
    let blocks: Vec<CellBlock> = (0..disc.n_cells())
        .map(|c| CellBlock {
            vmap: disc.local_to_global(c),
            a: &disc.locals[c].a,
            b: disc.locals[c].b.clone(),
            f: &loads[c],
            p_offset: c * np,
            means: disc.pressure_means[c].iter().copied().collect(),
        })
        .collect();
    assemble_blocks(
        disc.n_velocity(),
        np * disc.n_cells(),
        &disc.boundary_mask(),
        disc.boundary_values(dirichlet),
        nu,
        &blocks,
    )
}

/// Discrete velocity and pressure.
#[derive(Clone, Debug)]
pub struct DiscreteSolution {
    pub method: Method,
    pub k: usize,
    /// Full velocity DoF vector, Dirichlet entries included.
    pub velocity: Vec<f64>,
    /// `P_{k-1}` pressure coefficients per cell.
    pub pressure: Vec<DVector<f64>>,
    /// Cell constants of the reduced method.
    pub pressure_reduced: Option<Vec<f64>>,
    /// `Π^K u_h` coefficients per cell.
    pub projection: Vec<DVector<f64>>,
    /// Relative residual of the solved linear system.
    pub residual: f64,
}

impl DiscreteSolution {
    /// Largest divergence coefficient of `Π^K u_h` over all cells.
    pub fn max_projected_divergence(&self, disc: &Discretization) -> f64 {
        self.projection
            .iter()
            .zip(&disc.elements)
            .map(|(a, el)| el.div_coefficients(a.as_slice()).amax())
            .fold(0.0, f64::max)
    }

    /// Cellwise means of the pressure.
    pub fn pressure_cell_means(&self, disc: &Discretization) -> Vec<f64> {
        self.pressure
            .iter()
            .zip(&disc.pressure_means)
            .zip(&disc.elements)
            .map(|((p, m), el)| p.dot(m) / el.area())
            .collect()
    }
}

fn solve_system(
    sys: &GlobalSystem,
    solver: SolverKind,
    precond: &dyn Fn(&[f64]) -> Vec<f64>,
) -> Result<(Vec<f64>, f64)> {
    let z = match solver {
        SolverKind::Direct => sparse_solve(&sys.matrix, &sys.rhs, 1e-10)?,
        SolverKind::Minres => {
            let (z, it) = minres(&sys.matrix, &sys.rhs, precond, 1e-13, 20 * sys.size())?;
            log::info!("MINRES converged in {it} iterations");
            z
        }
    };
    let res = relative_residual(&sys.matrix, &z, &sys.rhs);
    if !(res < 1e-10) {
        return Err(Error::Solve(format!(
            "relative residual {res:.3e} above 1e-10"
        )));
    }
    Ok((z, res))
}

fn expand_velocity(sys: &GlobalSystem, z: &[f64]) -> Vec<f64> {
    sys.free
        .iter()
        .enumerate()
        .map(|(i, f)| match f {
            Some(r) => z[*r],
            None => sys.boundary_values[i],
        })
        .collect()
}

/// Block diagonal preconditioner: velocity diagonal, scaled cell mass
/// inverses for the pressure and `ν|Ω|` for the multiplier.
fn block_preconditioner(
    sys: &GlobalSystem,
    cell_mass_inv: Vec<DMatrix<f64>>,
    area: f64,
) -> impl Fn(&[f64]) -> Vec<f64> + '_ {
    let mut diag = vec![0.0; sys.n_free];
    for &(i, j, v) in &sys.matrix.entries {
        if i == j && i < sys.n_free {
            diag[i] += v;
        }
    }
    let nu = sys.nu;
    move |r: &[f64]| {
        let mut z = vec![0.0; r.len()];
        for i in 0..sys.n_free {
            z[i] = r[i] / diag[i];
        }
        let mut off = sys.n_free;
        for m in &cell_mass_inv {
            let n = m.nrows();
            for a in 0..n {
                z[off + a] = nu * (0..n).map(|b| m[(a, b)] * r[off + b]).sum::<f64>();
            }
            off += n;
        }
        z[off] = r[off] / (nu * area);
        z
    }
}

fn pressure_mass_inverses(disc: &Discretization, degree: usize) -> Vec<DMatrix<f64>> {
    disc.elements
        .iter()
        .map(|el| {
            let b = el.basis_of(degree);
            let g = crate::polyspace::gram_matrix(&b, &b, &el.quad)
                .expect("cell rule covers the pressure");
            lu_solve(&g, &DMatrix::identity(b.dim(), b.dim())).expect("Gram is SPD")
        })
        .collect()
}

/// Solves the full method.
pub fn solve(
    disc: &Discretization,
    sys: &GlobalSystem,
    method: Method,
    solver: SolverKind,
) -> Result<DiscreteSolution> {
    let area = disc.mesh.total_area();
    let minv = pressure_mass_inverses(disc, disc.k - 1);
    let pc = block_preconditioner(sys, minv, area);
    let (z, residual) = solve_system(sys, solver, &pc)?;
    let velocity = expand_velocity(sys, &z);
    let np = disc.n_pressure_per_cell();
    let pressure = (0..disc.n_cells())
        .map(|c| DVector::from_column_slice(&z[sys.n_free + c * np..sys.n_free + (c + 1) * np]))
        .collect();
    let projection = projections(disc, &velocity);
    Ok(DiscreteSolution {
        method,
        k: disc.k,
        velocity,
        pressure,
        pressure_reduced: None,
        projection,
        residual,
    })
}

fn projections(disc: &Discretization, velocity: &[f64]) -> Vec<DVector<f64>> {
    (0..disc.n_cells())
        .map(|c| &disc.elements[c].pack.pi_star * disc.cell_dofs(c, velocity))
        .collect()
}

/// Solves the reduced method (edge and `G⊕` DoFs, piecewise constant
/// pressure) and recovers the full pressure cell by cell.
pub fn solve_reduced(
    disc: &Discretization,
    nu: f64,
    loads: &[DVector<f64>],
    dirichlet: Option<VectorField>,
    solver: SolverKind,
) -> Result<DiscreteSolution> {
    let k = disc.k;
    let n_edge = 2 * k * disc.mesh.num_edges();
    let n_perp = disc.elements[0].layout.n_perp();
    let n_red = n_edge + disc.n_cells() * n_perp;
    let exts: Vec<DMatrix<f64>> = disc
        .elements
        .par_iter()
        .map(|el| el.reduced_extension())
        .collect();
    let a_red: Vec<DMatrix<f64>> = exts
        .iter()
        .zip(&disc.locals)
        .map(|(e, lm)| e.transpose() * &lm.a * e)
        .collect();
    let f_red: Vec<DVector<f64>> = exts
        .iter()
        .zip(loads)
        .map(|(e, f)| e.transpose() * f)
        .collect();
    let blocks: Vec<CellBlock> = (0..disc.n_cells())
        .map(|c| {
            let full = disc.local_to_global(c);
            let nr = disc.elements[c].layout.reduced_len();
            let mut vmap: Vec<usize> = full[..disc.elements[c].layout.n_edge_dofs()].to_vec();
            vmap.extend((0..n_perp).map(|i| n_edge + c * n_perp + i));
            debug_assert_eq!(vmap.len(), nr);
            CellBlock {
                vmap,
                a: &a_red[c],
                b: disc.locals[c].b.rows(0, 1) * &exts[c],
                f: &f_red[c],
                p_offset: c,
                means: vec![disc.elements[c].area()],
            }
        })
        .collect();
    let full_mask = disc.boundary_mask();
    let mut mask = full_mask[..n_edge].to_vec();
    mask.resize(n_red, false);
    let full_ub = disc.boundary_values(dirichlet);
    let mut ub = full_ub[..n_edge].to_vec();
    ub.resize(n_red, 0.0);
    let sys = assemble_blocks(n_red, disc.n_cells(), &mask, ub, nu, &blocks);
    let area = disc.mesh.total_area();
    let minv = disc
        .elements
        .iter()
        .map(|el| DMatrix::from_element(1, 1, 1.0 / el.area()))
        .collect();
    let pc = block_preconditioner(&sys, minv, area);
    let (z, residual) = solve_system(&sys, solver, &pc)?;
    let reduced = expand_velocity(&sys, &z);

    // Full DoFs through the cell extensions.
    let mut velocity = vec![0.0; disc.n_velocity()];
    for c in 0..disc.n_cells() {
        let xr = DVector::from_iterator(
            blocks[c].vmap.len(),
            blocks[c].vmap.iter().map(|&g| reduced[g]),
        );
        let x = &exts[c] * xr;
        for (l, g) in disc.local_to_global(c).into_iter().enumerate() {
            velocity[g] = x[l];
        }
    }
    let p0: Vec<f64> = z[sys.n_free..sys.n_free + disc.n_cells()].to_vec();
    let pressure = recover_pressure(disc, nu, loads, &velocity, &p0)?;
    let projection = projections(disc, &velocity);
    Ok(DiscreteSolution {
        method: Method::Reduced,
        k,
        velocity,
        pressure,
        pressure_reduced: Some(p0),
        projection,
        residual,
    })
}

/// Adds the zero-mean pressure part on every cell: on the local space with
/// only `G` moments, `(div v, p^⊥)_K = F_K(v) - ν a_K(u_h, v)`.
pub fn recover_pressure(
    disc: &Discretization,
    nu: f64,
    loads: &[DVector<f64>],
    velocity: &[f64],
    p0: &[f64],
) -> Result<Vec<DVector<f64>>> {
    (0..disc.n_cells())
        .into_par_iter()
        .map(|c| {
            let el = &disc.elements[c];
            let lm = &disc.locals[c];
            let x = disc.cell_dofs(c, velocity);
            let ax = &lm.a * &x;
            let ng = el.layout.n_grad();
            let np = el.n_pressure();
            let mut m = DMatrix::zeros(ng, ng);
            let mut r = DMatrix::zeros(ng, 1);
            for g in 0..ng {
                let col = el.layout.grad(g);
                for q in 1..np {
                    m[(g, q - 1)] = lm.b[(q, col)];
                }
                r[(g, 0)] = loads[c][col] - nu * ax[col];
            }
            let coef = lu_solve(&m, &r).ok_or_else(|| Error::SingularLocal {
                cell: c,
                what: "local pressure recovery".into(),
            })?;
            let means = &disc.pressure_means[c];
            let mut p = DVector::zeros(np);
            p[0] = p0[c];
            for q in 1..np {
                p[q] = coef[(q - 1, 0)];
                p[0] -= coef[(q - 1, 0)] * means[q] / el.area();
            }
            Ok(p)
        })
        .collect()
}

/// Runs one method end to end.
pub fn solve_method(
    disc: &Discretization,
    method: Method,
    nu: f64,
    f: VectorField,
    dirichlet: Option<VectorField>,
    solver: SolverKind,
) -> Result<DiscreteSolution> {
    match method {
        Method::Standard | Method::Robust => {
            let mode = if method == Method::Robust {
                LoadMode::Robust
            } else {
                LoadMode::Standard
            };
            let loads = disc.loads(f, mode)?;
            let sys = assemble(disc, nu, &loads, dirichlet);
            solve(disc, &sys, method, solver)
        }
        Method::Reduced => {
            let loads = disc.loads(f, LoadMode::Standard)?;
            solve_reduced(disc, nu, &loads, dirichlet, solver)
        }
    }
}

/// Discrete inf-sup constant `min_q sup_v b(v, q) / (‖v‖_a ‖q‖_0)` over
/// zero-mean pressures, by dense linear algebra. Meant for small meshes.
pub fn inf_sup_constant(disc: &Discretization) -> Result<f64> {
    let loads: Vec<DVector<f64>> = disc
        .elements
        .iter()
        .map(|el| DVector::zeros(el.n_dofs()))
        .collect();
    let sys = assemble(disc, 1.0, &loads, None);
    let nf = sys.n_free;
    let np = sys.n_pressure;
    let mut a = DMatrix::<f64>::zeros(nf, nf);
    let mut b = DMatrix::<f64>::zeros(np, nf);
    for &(i, j, v) in &sys.matrix.entries {
        if i < nf && j < nf {
            a[(i, j)] += v;
        } else if i >= nf && i < nf + np && j < nf {
            b[(i - nf, j)] += v;
        }
    }
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::Solve("velocity block is not positive definite".into()))?;
    let s: DMatrix<f64> = &b * chol.solve(&b.transpose());
    // Pressure mass matrix and its Cholesky factor, cell by cell.
    let mut l_inv = DMatrix::<f64>::zeros(np, np);
    let npc = disc.n_pressure_per_cell();
    for (c, el) in disc.elements.iter().enumerate() {
        let pb = el.basis_of(disc.k - 1);
        let g = crate::polyspace::gram_matrix(&pb, &pb, &el.quad)?;
        let l = g.cholesky().expect("Gram is SPD").l();
        let li = l.try_inverse().expect("triangular factor is invertible");
        l_inv
            .view_mut((c * npc, c * npc), (npc, npc))
            .copy_from(&li);
    }
    let t = &l_inv * s * l_inv.transpose();
    let t = (&t + t.transpose()) * 0.5;
    let mut ev: Vec<f64> = t.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    // The constant pressure is in the kernel of b on the constrained space.
    Ok(ev.get(1).copied().unwrap_or(0.0).max(0.0).sqrt())
}
