//! Local virtual element machinery on one polygonal cell.
//!
//! Degrees of freedom of a velocity `v` on a cell with `n_e` edges, in order:
//!
//! * per local edge `e`, component `c` and `j < k`: `(1/h_F) ∫_F v_c ψ_j`,
//!   stored at `e·2k + c·k + j`, with the edge Legendre basis of
//!   [`edge_legendre`] in the global edge parameter;
//! * interior moments `(1/|K|) ∫_K v · g_i` against the [`GradSplitBasis`]
//!   fields, the `G⊕` part first.
//!
//! Polynomial coefficient vectors are over scaled monomials of the cell (see
//! [`crate::polyspace`]). Vector polynomials list component 0 then 1;
//! symmetric tensors list the `S11`, `S12`, `S22` blocks, where `S12` has ones
//! in both off-diagonal slots.

use nalgebra::{DMatrix, DVector};

use crate::linalg::lu_solve;
use crate::mesh::CellGeometry;
use crate::polyspace::{
    cell_quadrature, deriv_matrix, dim, edge_legendre, edge_quadrature, gram_matrix,
    EdgeQuadrature, GradSplitBasis, MonomialBasis, QuadratureRule,
};
use crate::{Error, Point, Result};

/// Position of every local degree of freedom.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DofLayout {
    pub k: usize,
    pub n_edges: usize,
}

impl DofLayout {
    pub fn new(k: usize, n_edges: usize) -> Self {
        DofLayout { k, n_edges }
    }

    pub fn edge(&self, e: usize, c: usize, j: usize) -> usize {
        e * 2 * self.k + c * self.k + j
    }

    pub fn n_edge_dofs(&self) -> usize {
        2 * self.k * self.n_edges
    }

    pub fn n_perp(&self) -> usize {
        dim(self.k as isize - 3)
    }

    pub fn n_grad(&self) -> usize {
        dim(self.k as isize - 1) - 1
    }

    pub fn n_interior(&self) -> usize {
        self.k * (self.k - 1)
    }

    pub fn perp(&self, i: usize) -> usize {
        self.n_edge_dofs() + i
    }

    pub fn grad(&self, i: usize) -> usize {
        self.n_edge_dofs() + self.n_perp() + i
    }

    pub fn len(&self) -> usize {
        self.n_edge_dofs() + self.n_interior()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Length of the reduced layout: edge blocks and the `G⊕` block.
    pub fn reduced_len(&self) -> usize {
        self.n_edge_dofs() + self.n_perp()
    }
}

/// Matrices mapping a DoF vector to polynomial data.
#[derive(Clone, Debug)]
pub struct ProjectorPack {
    /// Coefficients of `Π^K v` in `P_k(K; R²)`.
    pub pi_star: DMatrix<f64>,
    /// Multiplier of the divergence constraint in the projector problem, in `P_{k-1}(K)`.
    pub p_mul: DMatrix<f64>,
    /// Coefficients of `Q_{k-1} ε(v)` in the symmetric tensor basis.
    pub eps: DMatrix<f64>,
    /// Coefficients of `Q_{k-1} div v`.
    pub div: DMatrix<f64>,
    /// Moments `∫_K v · φ_r` for the vector monomials `φ_r` of degree `k - 2`.
    pub mom: DMatrix<f64>,
}

/// Local matrices of the bilinear forms.
#[derive(Clone, Debug)]
pub struct LocalMatrices {
    /// Consistency plus stabilization, without the viscosity.
    pub a: DMatrix<f64>,
    /// Stabilization part of `a`.
    pub s: DMatrix<f64>,
    /// `b[q][i] = (div φ_i, m_q)_K` for the pressure monomials `m_q`.
    pub b: DMatrix<f64>,
}

/// Everything computed once per cell.
#[derive(Clone, Debug)]
pub struct Element {
    pub cell: CellGeometry,
    pub k: usize,
    pub layout: DofLayout,
    /// Scaled monomials of degree `k`.
    pub basis: MonomialBasis,
    pub split: GradSplitBasis,
    /// Cell rule exact to degree `2k + 3`.
    pub quad: QuadratureRule,
    /// DoFs of the vector monomials of degree `k`, one column each.
    pub dmat: DMatrix<f64>,
    pub pack: ProjectorPack,
    /// `(div v, m_q)_K` from the DoFs.
    pub div_moments: DMatrix<f64>,
    /// Gram matrix of the tensor basis used by `pack.eps`.
    pub eps_gram: DMatrix<f64>,
    edge_quads: Vec<EdgeQuadrature>,
}

fn block_diag(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let r: usize = blocks.iter().map(|b| b.nrows()).sum();
    let c: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut m = DMatrix::zeros(r, c);
    let (mut i, mut j) = (0, 0);
    for b in blocks {
        m.view_mut((i, j), (b.nrows(), b.ncols())).copy_from(b);
        i += b.nrows();
        j += b.ncols();
    }
    m
}

/// Symmetric gradient of the vector monomial `m_α e_c`.
fn eps_of(c: usize, g: [f64; 2]) -> [[f64; 2]; 2] {
    if c == 0 {
        [[g[0], 0.5 * g[1]], [0.5 * g[1], 0.0]]
    } else {
        [[0.0, 0.5 * g[0]], [0.5 * g[0], g[1]]]
    }
}

impl Element {
    pub fn new(cell: CellGeometry, k: usize) -> Result<Self> {
        if !(2..=4).contains(&k) {
            return Err(Error::UnsupportedDegree(k));
        }
        let layout = DofLayout::new(k, cell.num_edges());
        let basis = MonomialBasis::for_cell(&cell, k);
        let split = GradSplitBasis::new(k)?;
        let quad = cell_quadrature(&cell, 2 * k + 3)?;
        let edge_quads = cell
            .edges
            .iter()
            .map(|e| edge_quadrature(e, 2 * k + 3))
            .collect::<Result<Vec<_>>>()?;
        let mut el = Element {
            cell,
            k,
            layout,
            basis,
            split,
            quad,
            dmat: DMatrix::zeros(0, 0),
            pack: ProjectorPack {
                pi_star: DMatrix::zeros(0, 0),
                p_mul: DMatrix::zeros(0, 0),
                eps: DMatrix::zeros(0, 0),
                div: DMatrix::zeros(0, 0),
                mom: DMatrix::zeros(0, 0),
            },
            div_moments: DMatrix::zeros(0, 0),
            eps_gram: DMatrix::zeros(0, 0),
            edge_quads,
        };
        el.dmat = el.monomial_dofs();
        el.pack.mom = el.moment_matrix()?;
        el.div_moments = el.div_moment_matrix();
        el.solve_projector()?;
        el.build_eps_div()?;
        Ok(el)
    }

    pub fn area(&self) -> f64 {
        self.cell.area
    }

    pub fn h(&self) -> f64 {
        self.cell.diameter
    }

    pub fn n_dofs(&self) -> usize {
        self.layout.len()
    }

    pub fn n_poly(&self) -> usize {
        dim(self.k as isize)
    }

    pub fn n_pressure(&self) -> usize {
        dim(self.k as isize - 1)
    }

    /// Scaled monomials of degree `d` on this cell.
    pub fn basis_of(&self, d: usize) -> MonomialBasis {
        self.basis.with_degree(d)
    }

    fn gram(&self, a: usize, b: usize) -> DMatrix<f64> {
        gram_matrix(&self.basis_of(a), &self.basis_of(b), &self.quad)
            .expect("cell rule covers degree 2k")
    }

    /// `(1/h_F) ∫_F m_α ψ_j` for monomials of degree `d`, shape `k x dim(d)`.
    pub(crate) fn edge_monomial_moments(&self, e: usize, d: usize) -> DMatrix<f64> {
        let eq = &self.edge_quads[e];
        let b = self.basis_of(d);
        let h = self.cell.edges[e].length;
        let mut m = DMatrix::zeros(self.k, b.dim());
        for ((&p, &w), &s) in eq.rule.points.iter().zip(&eq.rule.weights).zip(&eq.params) {
            let vals = b.eval(p);
            let psi = edge_legendre(self.k, s);
            for j in 0..self.k {
                for (a, v) in vals.iter().enumerate() {
                    m[(j, a)] += w * psi[j] * v / h;
                }
            }
        }
        m
    }

    fn monomial_dofs(&self) -> DMatrix<f64> {
        let (k, nk) = (self.k, self.n_poly());
        let nk2 = dim(k as isize - 2);
        let mut d = DMatrix::zeros(self.n_dofs(), 2 * nk);
        for e in 0..self.layout.n_edges {
            let m = self.edge_monomial_moments(e, k);
            for c in 0..2 {
                for j in 0..k {
                    for a in 0..nk {
                        d[(self.layout.edge(e, c, j), c * nk + a)] = m[(j, a)];
                    }
                }
            }
        }
        let g = self.gram(k, k - 2);
        let t = &self.split.coeffs;
        for i in 0..self.layout.n_interior() {
            for c in 0..2 {
                for a in 0..nk {
                    let s: f64 = (0..nk2).map(|b| g[(a, b)] * t[(c * nk2 + b, i)]).sum();
                    d[(self.layout.n_edge_dofs() + i, c * nk + a)] = s / self.area();
                }
            }
        }
        d
    }

    fn moment_matrix(&self) -> Result<DMatrix<f64>> {
        let n_int = self.layout.n_interior();
        let tt = self.split.coeffs.transpose();
        let inv = lu_solve(&tt, &DMatrix::identity(n_int, n_int)).ok_or_else(|| {
            Error::SingularLocal {
                cell: self.cell.index,
                what: "interior moment basis".into(),
            }
        })?;
        let mut mom = DMatrix::zeros(n_int, self.n_dofs());
        mom.view_mut((0, self.layout.n_edge_dofs()), (n_int, n_int))
            .copy_from(&(inv * self.area()));
        Ok(mom)
    }

    /// Row vector giving `Σ_F h_F Σ_j coef[c][j] · dof(F, c, j)` summed over
    /// the given per-edge coefficient arrays.
    fn add_edge_row(&self, row: &mut [f64], e: usize, coef: &[[f64; 4]; 2]) {
        let h = self.cell.edges[e].length;
        for c in 0..2 {
            for j in 0..self.k {
                row[self.layout.edge(e, c, j)] += h * coef[c][j];
            }
        }
    }

    /// `(div v, m_q)_K = -(v, ∇m_q)_K + Σ_F (v·n, m_q)_F`.
    fn div_moment_matrix(&self) -> DMatrix<f64> {
        let k = self.k;
        let np = self.n_pressure();
        let nk2 = dim(k as isize - 2);
        let h = self.h();
        let dx = deriv_matrix(k - 1, 0);
        let dy = deriv_matrix(k - 1, 1);
        let mut r = DMatrix::zeros(np, self.n_dofs());
        let mom = &self.pack.mom;
        for q in 0..np {
            let mut row = vec![0.0; self.n_dofs()];
            for b in 0..nk2 {
                for col in 0..self.n_dofs() {
                    row[col] -= (dx[(b, q)] * mom[(b, col)] + dy[(b, q)] * mom[(nk2 + b, col)]) / h;
                }
            }
            for e in 0..self.layout.n_edges {
                let bm = self.edge_monomial_moments(e, k - 1);
                let n = self.cell.edges[e].normal;
                let mut coef = [[0.0; 4]; 2];
                for j in 0..k {
                    coef[0][j] = n[0] * bm[(j, q)];
                    coef[1][j] = n[1] * bm[(j, q)];
                }
                self.add_edge_row(&mut row, e, &coef);
            }
            for (col, v) in row.into_iter().enumerate() {
                r[(q, col)] = v;
            }
        }
        r
    }

    /// Mean of `rot v` and of `v` from the DoFs, as rows.
    fn rigid_rows(&self) -> (Vec<f64>, [Vec<f64>; 2]) {
        let n = self.n_dofs();
        let mut rot = vec![0.0; n];
        for (e, edge) in self.cell.edges.iter().enumerate() {
            let t = edge.tangent;
            rot[self.layout.edge(e, 0, 0)] += edge.length * t[0] / self.area();
            rot[self.layout.edge(e, 1, 0)] += edge.length * t[1] / self.area();
        }
        let nk2 = dim(self.k as isize - 2);
        let mean = [
            self.pack
                .mom
                .row(0)
                .iter()
                .map(|v| v / self.area())
                .collect(),
            self.pack
                .mom
                .row(nk2)
                .iter()
                .map(|v| v / self.area())
                .collect(),
        ];
        (rot, mean)
    }

    fn solve_projector(&mut self) -> Result<()> {
        let k = self.k;
        let nk = self.n_poly();
        let np = self.n_pressure();
        let nk2 = dim(k as isize - 2);
        let n = self.n_dofs();
        let h = self.h();
        let area = self.area();
        let (w_rot, w_mean) = (area, area / (h * h));

        // Direct quadrature of the form on the vector monomials.
        let mut m = DMatrix::zeros(2 * nk, 2 * nk);
        let mut c_mat = DMatrix::zeros(np, 2 * nk);
        let mut rot_w = vec![0.0; 2 * nk];
        let mut mean_w = [vec![0.0; 2 * nk], vec![0.0; 2 * nk]];
        let pb = self.basis_of(k - 1);
        for (&p, &wq) in self.quad.points.iter().zip(&self.quad.weights) {
            let g = self.basis.eval_grad(p);
            let vals = self.basis.eval(p);
            let pv = pb.eval(p);
            let eps: Vec<[[f64; 2]; 2]> = (0..2 * nk).map(|i| eps_of(i / nk, g[i % nk])).collect();
            for i in 0..2 * nk {
                let (ci, ai) = (i / nk, i % nk);
                for j in i..2 * nk {
                    let (a, b) = (&eps[i], &eps[j]);
                    let v = a[0][0] * b[0][0] + 2.0 * a[0][1] * b[0][1] + a[1][1] * b[1][1];
                    m[(i, j)] += wq * v;
                }
                let div = g[ai][ci];
                for q in 0..np {
                    c_mat[(q, i)] += wq * div * pv[q];
                }
                let rot = if ci == 0 { -g[ai][1] } else { g[ai][0] };
                rot_w[i] += wq * rot / area;
                mean_w[ci][i] += wq * vals[ai] / area;
            }
        }
        for i in 0..2 * nk {
            for j in i..2 * nk {
                let extra = w_rot * rot_w[i] * rot_w[j]
                    + w_mean * (mean_w[0][i] * mean_w[0][j] + mean_w[1][i] * mean_w[1][j]);
                m[(i, j)] += extra;
                m[(j, i)] = m[(i, j)];
            }
        }

        // Right-hand sides from the DoFs by integration by parts.
        let (rot_row, mean_rows) = self.rigid_rows();
        let dx1 = deriv_matrix(k - 1, 0);
        let dy1 = deriv_matrix(k - 1, 1);
        let dxk = deriv_matrix(k, 0);
        let dyk = deriv_matrix(k, 1);
        let dxx = &dx1 * &dxk / (h * h);
        let dxy = &dx1 * &dyk / (h * h);
        let dyy = &dy1 * &dyk / (h * h);
        let mut rm = DMatrix::zeros(2 * nk, n);
        for i in 0..2 * nk {
            let (ci, a) = (i / nk, i % nk);
            let mut row = vec![0.0; n];
            // -(v, div ε(w_i)) through the interior moments.
            for b in 0..nk2 {
                let (d0, d1) = if ci == 0 {
                    (dxx[(b, a)] + 0.5 * dyy[(b, a)], 0.5 * dxy[(b, a)])
                } else {
                    (0.5 * dxy[(b, a)], 0.5 * dxx[(b, a)] + dyy[(b, a)])
                };
                for col in 0..n {
                    row[col] -= d0 * self.pack.mom[(b, col)] + d1 * self.pack.mom[(nk2 + b, col)];
                }
            }
            // Σ_F (v, ε(w_i) n)_F through the edge moments.
            for (e, edge) in self.cell.edges.iter().enumerate() {
                let eq = &self.edge_quads[e];
                let nrm = edge.normal;
                let mut coef = [[0.0; 4]; 2];
                for ((&p, &wq), &s) in eq.rule.points.iter().zip(&eq.rule.weights).zip(&eq.params) {
                    let g = self.basis.eval_grad(p)[a];
                    let t = eps_of(ci, g);
                    let tn = [
                        t[0][0] * nrm[0] + t[0][1] * nrm[1],
                        t[1][0] * nrm[0] + t[1][1] * nrm[1],
                    ];
                    let psi = edge_legendre(k, s);
                    for c in 0..2 {
                        for j in 0..k {
                            coef[c][j] += wq * tn[c] * psi[j] / edge.length;
                        }
                    }
                }
                self.add_edge_row(&mut row, e, &coef);
            }
            for col in 0..n {
                row[col] += w_rot * rot_w[i] * rot_row[col]
                    + w_mean
                        * (mean_w[0][i] * mean_rows[0][col] + mean_w[1][i] * mean_rows[1][col]);
            }
            for (col, v) in row.into_iter().enumerate() {
                rm[(i, col)] = v;
            }
        }

        let size = 2 * nk + np;
        let mut sys = DMatrix::zeros(size, size);
        sys.view_mut((0, 0), (2 * nk, 2 * nk)).copy_from(&m);
        sys.view_mut((2 * nk, 0), (np, 2 * nk)).copy_from(&c_mat);
        sys.view_mut((0, 2 * nk), (2 * nk, np))
            .copy_from(&c_mat.transpose());
        let mut rhs = DMatrix::zeros(size, n);
        rhs.view_mut((0, 0), (2 * nk, n)).copy_from(&rm);
        rhs.view_mut((2 * nk, 0), (np, n))
            .copy_from(&self.div_moments);
        let sol = lu_solve(&sys, &rhs).ok_or_else(|| Error::SingularLocal {
            cell: self.cell.index,
            what: "projector saddle system".into(),
        })?;
        self.pack.pi_star = sol.rows(0, 2 * nk).into_owned();
        self.pack.p_mul = sol.rows(2 * nk, np).into_owned();
        Ok(())
    }

    fn build_eps_div(&mut self) -> Result<()> {
        let k = self.k;
        let np = self.n_pressure();
        let nk2 = dim(k as isize - 2);
        let n = self.n_dofs();
        let h = self.h();
        let g1 = self.gram(k - 1, k - 1);
        let g1x2 = &g1 * 2.0;
        self.eps_gram = block_diag(&[&g1, &g1x2, &g1]);
        let dx = deriv_matrix(k - 1, 0);
        let dy = deriv_matrix(k - 1, 1);
        let mut r = DMatrix::zeros(3 * np, n);
        let edge_b: Vec<DMatrix<f64>> = (0..self.layout.n_edges)
            .map(|e| self.edge_monomial_moments(e, k - 1))
            .collect();
        for blk in 0..3 {
            for q in 0..np {
                let mut row = vec![0.0; n];
                // div τ for τ = S m_q.
                let (d0, d1): (Vec<f64>, Vec<f64>) = match blk {
                    0 => ((0..nk2).map(|b| dx[(b, q)] / h).collect(), vec![0.0; nk2]),
                    1 => (
                        (0..nk2).map(|b| dy[(b, q)] / h).collect(),
                        (0..nk2).map(|b| dx[(b, q)] / h).collect(),
                    ),
                    _ => (vec![0.0; nk2], (0..nk2).map(|b| dy[(b, q)] / h).collect()),
                };
                for b in 0..nk2 {
                    for col in 0..n {
                        row[col] -=
                            d0[b] * self.pack.mom[(b, col)] + d1[b] * self.pack.mom[(nk2 + b, col)];
                    }
                }
                for (e, edge) in self.cell.edges.iter().enumerate() {
                    let nr = edge.normal;
                    let (s0, s1) = match blk {
                        0 => (nr[0], 0.0),
                        1 => (nr[1], nr[0]),
                        _ => (0.0, nr[1]),
                    };
                    let mut coef = [[0.0; 4]; 2];
                    for j in 0..k {
                        coef[0][j] = s0 * edge_b[e][(j, q)];
                        coef[1][j] = s1 * edge_b[e][(j, q)];
                    }
                    self.add_edge_row(&mut row, e, &coef);
                }
                for (col, v) in row.into_iter().enumerate() {
                    r[(blk * np + q, col)] = v;
                }
            }
        }
        let eps = lu_solve(&self.eps_gram, &r).ok_or_else(|| Error::SingularLocal {
            cell: self.cell.index,
            what: "tensor Gram matrix".into(),
        })?;
        let div = lu_solve(&g1, &self.div_moments).ok_or_else(|| Error::SingularLocal {
            cell: self.cell.index,
            what: "pressure Gram matrix".into(),
        })?;
        self.pack.eps = eps;
        self.pack.div = div;
        Ok(())
    }

    /// DoFs of a vector field, with edge and cell rules exact to `degree`.
    pub fn dof_evaluate_with(
        &self,
        u: impl Fn(Point) -> [f64; 2],
        degree: usize,
    ) -> Result<DVector<f64>> {
        let k = self.k;
        let mut x = DVector::zeros(self.n_dofs());
        for (e, edge) in self.cell.edges.iter().enumerate() {
            let eq = edge_quadrature(edge, degree)?;
            for ((&p, &w), &s) in eq.rule.points.iter().zip(&eq.rule.weights).zip(&eq.params) {
                let v = u(p);
                let psi = edge_legendre(k, s);
                for c in 0..2 {
                    for j in 0..k {
                        x[self.layout.edge(e, c, j)] += w * v[c] * psi[j] / edge.length;
                    }
                }
            }
        }
        let quad = cell_quadrature(&self.cell, degree)?;
        let b2 = self.basis_of(k - 2);
        let nk2 = b2.dim();
        let t = &self.split.coeffs;
        let off = self.layout.n_edge_dofs();
        for (&p, &w) in quad.points.iter().zip(&quad.weights) {
            let v = u(p);
            let vals = b2.eval(p);
            for i in 0..self.layout.n_interior() {
                let mut g = [0.0; 2];
                for b in 0..nk2 {
                    g[0] += t[(b, i)] * vals[b];
                    g[1] += t[(nk2 + b, i)] * vals[b];
                }
                x[off + i] += w * (v[0] * g[0] + v[1] * g[1]) / self.area();
            }
        }
        Ok(x)
    }

    /// DoFs of a smooth field with the default rule of degree `2k + 8`.
    pub fn dof_evaluate(&self, u: impl Fn(Point) -> [f64; 2]) -> DVector<f64> {
        self.dof_evaluate_with(u, 2 * self.k + 8)
            .expect("default degree is supported")
    }

    /// Local stiffness (without `ν`) and divergence matrices.
    pub fn local_matrices(&self) -> LocalMatrices {
        let n = self.n_dofs();
        let consistency = self.pack.eps.transpose() * &self.eps_gram * &self.pack.eps;
        let mut s_dof = DMatrix::zeros(n, n);
        for i in 0..self.layout.n_edge_dofs() {
            s_dof[(i, i)] = 1.0;
        }
        let np = self.layout.n_perp();
        if np > 0 {
            let perp = self.split.perp();
            let b2 = self.basis_of(self.k - 2);
            let g = gram_matrix(&b2, &b2, &self.quad).expect("cell rule covers degree 2k");
            let vg = block_diag(&[&g, &g]);
            let gp = perp.transpose() * vg * &perp;
            let gp_inv =
                lu_solve(&gp, &DMatrix::identity(np, np)).expect("G⊕ basis is independent");
            let scale = self.area() * self.area() / (self.h() * self.h());
            let off = self.layout.perp(0);
            s_dof
                .view_mut((off, off), (np, np))
                .copy_from(&(gp_inv * scale));
        }
        let proj = DMatrix::identity(n, n) - &self.dmat * &self.pack.pi_star;
        let s = proj.transpose() * s_dof * &proj;
        let mut a = consistency + &s;
        a = (&a + a.transpose()) * 0.5;
        LocalMatrices {
            a,
            s,
            b: self.div_moments.clone(),
        }
    }

    /// Moments `∫_K f · φ` over the vector monomials of degree `d`.
    pub fn load_moments(
        &self,
        f: impl Fn(Point) -> [f64; 2],
        d: usize,
        degree: usize,
    ) -> Result<DVector<f64>> {
        let b = self.basis_of(d);
        let nd = b.dim();
        let quad = cell_quadrature(&self.cell, degree)?;
        let mut out = DVector::zeros(2 * nd);
        for (&p, &w) in quad.points.iter().zip(&quad.weights) {
            let v = f(p);
            let vals = b.eval(p);
            for a in 0..nd {
                out[a] += w * v[0] * vals[a];
                out[nd + a] += w * v[1] * vals[a];
            }
        }
        Ok(out)
    }

    /// Standard load: `(f, Π v)` for `k = 2`, `(f, Q_{k-2} v)` for `k ≥ 3`.
    pub fn local_load(&self, f: impl Fn(Point) -> [f64; 2]) -> DVector<f64> {
        let degree = 2 * self.k + 8;
        if self.k == 2 {
            let fm = self
                .load_moments(f, self.k, degree)
                .expect("supported degree");
            self.pack.pi_star.transpose() * fm
        } else {
            let d = self.k - 2;
            let fm = self.load_moments(f, d, degree).expect("supported degree");
            let b = self.basis_of(d);
            let g = gram_matrix(&b, &b, &self.quad).expect("cell rule covers degree 2k");
            let vg = block_diag(&[&g, &g]);
            let c = lu_solve(&vg, &DMatrix::from_column_slice(fm.len(), 1, fm.as_slice()))
                .expect("Gram is SPD");
            self.pack.mom.transpose() * c.column(0)
        }
    }

    /// Maps reduced DoFs (edge and `G⊕` blocks) to full DoFs of a field whose
    /// divergence is constant on the cell. The `G` moments follow from
    /// `(v, ∇q)_K = (v·n, q - Q_0 q)_∂K`.
    pub fn reduced_extension(&self) -> DMatrix<f64> {
        let k = self.k;
        let ne = self.layout.n_edge_dofs();
        let nr = self.layout.reduced_len();
        let mut ext = DMatrix::zeros(self.n_dofs(), nr);
        for i in 0..nr {
            ext[(i, i)] = 1.0;
        }
        let pb = self.basis_of(k - 1);
        let means: Vec<f64> = (0..pb.dim())
            .map(|q| self.quad.integrate(|p| pb.eval(p)[q]) / self.area())
            .collect();
        let edge_b: Vec<DMatrix<f64>> = (0..self.layout.n_edges)
            .map(|e| self.edge_monomial_moments(e, k - 1))
            .collect();
        for g in 0..self.layout.n_grad() {
            let q = g + 1;
            let mut row = vec![0.0; self.n_dofs()];
            for (e, edge) in self.cell.edges.iter().enumerate() {
                let nrm = edge.normal;
                let mut coef = [[0.0; 4]; 2];
                for j in 0..k {
                    // (1/h_F) ∫ (m_q - Q_0 m_q) ψ_j; ψ_0 is the only one with nonzero mean.
                    let b = edge_b[e][(j, q)] - if j == 0 { means[q] } else { 0.0 };
                    coef[0][j] = nrm[0] * b;
                    coef[1][j] = nrm[1] * b;
                }
                self.add_edge_row(&mut row, e, &coef);
            }
            let scale = self.h() / self.area();
            for col in 0..ne {
                ext[(self.layout.grad(g), col)] = scale * row[col];
            }
        }
        ext
    }

    /// Value of the vector polynomial with `P_k` coefficients `a` at `p`.
    pub fn eval_vector(&self, a: &[f64], p: Point) -> [f64; 2] {
        let nk = self.n_poly();
        let vals = self.basis.eval(p);
        let mut v = [0.0; 2];
        for i in 0..nk {
            v[0] += a[i] * vals[i];
            v[1] += a[nk + i] * vals[i];
        }
        v
    }

    /// Symmetric gradient of the vector polynomial with coefficients `a` at `p`.
    pub fn eval_eps(&self, a: &[f64], p: Point) -> [[f64; 2]; 2] {
        let nk = self.n_poly();
        let g = self.basis.eval_grad(p);
        let mut e = [[0.0; 2]; 2];
        for i in 0..nk {
            let t0 = eps_of(0, g[i]);
            let t1 = eps_of(1, g[i]);
            for r in 0..2 {
                for c in 0..2 {
                    e[r][c] += a[i] * t0[r][c] + a[nk + i] * t1[r][c];
                }
            }
        }
        e
    }

    /// `P_{k-1}` coefficients of the divergence of a `P_k` vector polynomial.
    pub fn div_coefficients(&self, a: &[f64]) -> DVector<f64> {
        let nk = self.n_poly();
        let dx = deriv_matrix(self.k, 0);
        let dy = deriv_matrix(self.k, 1);
        let a0 = DVector::from_column_slice(&a[..nk]);
        let a1 = DVector::from_column_slice(&a[nk..2 * nk]);
        (dx * a0 + dy * a1) / self.h()
    }
}

/// Projector matrices of one cell.
pub fn compute_projector(cell: &CellGeometry, k: usize) -> Result<ProjectorPack> {
    Ok(Element::new(cell.clone(), k)?.pack)
}
