//! Raviart-Thomas reconstruction on the centroid fan of a cell.
//!
//! On each subtriangle the field lies in `RT_{k-1} = P_{k-1}² + x̂ P̃_{k-1}`
//! (homogeneous part in the cell's scaled variables). The cell space keeps
//! normal components continuous across the fan spokes and the divergence a
//! single polynomial of `P_{k-1}(K)`. Every field is stored as one `P_k(K; R²)`
//! coefficient vector per subtriangle, in the cell's monomial basis.

use nalgebra::{DMatrix, DVector};

use crate::element::Element;
use crate::linalg::{lu_solve, null_space, numeric_rank};
use crate::polyspace::{
    deriv_matrix, dim, edge_legendre, gram_matrix, index, triangle_quadrature, unit_interval_rule,
};
use crate::{Error, Point, Result};

const RANK_TOL: f64 = 1e-10;

/// Constrained piecewise RT space of one cell.
#[derive(Clone, Debug)]
pub struct RtSpace {
    pub k: usize,
    pub triangles: Vec<[Point; 3]>,
    /// Per-subtriangle `P_k²` coefficients of each basis field: block `t`
    /// holds rows `t·2n_k .. (t+1)·2n_k`, one column per basis field.
    pub coeffs: DMatrix<f64>,
    /// Per-subtriangle Gram matrices of the vector monomials of degree `k`.
    grams: Vec<DMatrix<f64>>,
}

impl RtSpace {
    pub fn dim(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Expected dimension `#F(T_K)·k + k(k-1) + (#T_K - 1)(dim G⊕ - 1)`.
    pub fn expected_dim(k: usize, n_edges: usize, n_triangles: usize) -> usize {
        let n_sub_edges = if n_triangles == 1 { 3 } else { 2 * n_triangles };
        let perp = dim(k as isize - 3) as isize;
        let d = (n_sub_edges * k + k * (k - 1)) as isize + (n_triangles as isize - 1) * (perp - 1);
        debug_assert!(n_triangles == 1 || n_triangles == n_edges);
        d as usize
    }

    fn block(&self, m: &DMatrix<f64>, t: usize, nk2: usize) -> DMatrix<f64> {
        m.rows(t * nk2, nk2).into_owned()
    }

    /// `∫_K u · v` for piecewise fields given as stacked coefficient columns.
    fn inner(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        let n2 = self.grams[0].nrows();
        let mut out = DMatrix::zeros(a.ncols(), b.ncols());
        for (t, g) in self.grams.iter().enumerate() {
            out += self.block(a, t, n2).transpose() * g * self.block(b, t, n2);
        }
        out
    }
}

fn vec_gram(g: &DMatrix<f64>) -> DMatrix<f64> {
    let n = g.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(g);
    m.view_mut((n, n), (n, n)).copy_from(g);
    m
}

/// `P_k²` coefficients of the local `RT_{k-1}` basis, one column per field.
fn local_rt_basis(k: usize) -> DMatrix<f64> {
    let nk = dim(k as isize);
    let nk1 = dim(k as isize - 1);
    let mut r = DMatrix::zeros(2 * nk, 2 * nk1 + k);
    for c in 0..2 {
        for a in 0..nk1 {
            r[(c * nk + a, c * nk1 + a)] = 1.0;
        }
    }
    // x̂ m for the monomials m of degree exactly k - 1.
    for b in 0..k {
        let a = k - 1 - b;
        let col = 2 * nk1 + b;
        r[(index(a + 1, b), col)] = 1.0;
        r[(nk + index(a, b + 1), col)] = 1.0;
    }
    r
}

/// Builds the constrained space by a null-space computation over the product
/// of the subtriangle spaces.
pub fn build_rt_space(el: &Element) -> Result<RtSpace> {
    let k = el.k;
    let nk = el.n_poly();
    let nk1 = el.n_pressure();
    let triangles = el.cell.subtriangulate()?;
    let nt = triangles.len();
    let local = local_rt_basis(k);
    let nl = local.ncols();
    let n = nt * nl;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    if nt > 1 {
        // Spoke i runs from the centroid to vertex i, between triangles i-1 and i.
        let (s, w) = unit_interval_rule(2 * k)?;
        let c = el.cell.centroid;
        for i in 0..nt {
            let v = el.cell.vertices[i];
            let len = ((v[0] - c[0]).powi(2) + (v[1] - c[1]).powi(2)).sqrt();
            let nrm = [(v[1] - c[1]) / len, -(v[0] - c[0]) / len];
            let (ta, tb) = (i, (i + nt - 1) % nt);
            for j in 0..k {
                let mut row = vec![0.0; n];
                for (&sq, &wq) in s.iter().zip(&w) {
                    let p = [c[0] + sq * (v[0] - c[0]), c[1] + sq * (v[1] - c[1])];
                    let vals = el.basis.eval(p);
                    let psi = edge_legendre(k, sq)[j];
                    for col in 0..nl {
                        let mut vn = 0.0;
                        for a in 0..nk {
                            vn += (local[(a, col)] * nrm[0] + local[(nk + a, col)] * nrm[1])
                                * vals[a];
                        }
                        row[ta * nl + col] += wq * vn * psi;
                        row[tb * nl + col] -= wq * vn * psi;
                    }
                }
                rows.push(row);
            }
        }
        // Divergence equal on every subtriangle.
        let dx = deriv_matrix(k, 0);
        let dy = deriv_matrix(k, 1);
        let div_local = (&dx * local.rows(0, nk) + &dy * local.rows(nk, nk)) / el.h();
        for t in 1..nt {
            for q in 0..nk1 {
                let mut row = vec![0.0; n];
                for col in 0..nl {
                    row[t * nl + col] += div_local[(q, col)];
                    row[col] -= div_local[(q, col)];
                }
                rows.push(row);
            }
        }
    }
    let cons = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    let ns = null_space(&cons, RANK_TOL);

    // Lift to per-subtriangle P_k² coefficients.
    let mut coeffs = DMatrix::zeros(nt * 2 * nk, ns.ncols());
    for t in 0..nt {
        let block = &local * ns.rows(t * nl, nl);
        coeffs
            .view_mut((t * 2 * nk, 0), (2 * nk, ns.ncols()))
            .copy_from(&block);
    }
    let grams = triangles
        .iter()
        .map(|tri| {
            let q = triangle_quadrature(tri, 2 * k + 3)?;
            Ok(vec_gram(&gram_matrix(&el.basis, &el.basis, &q)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let space = RtSpace {
        k,
        triangles,
        coeffs,
        grams,
    };
    let expected = RtSpace::expected_dim(k, el.layout.n_edges, nt);
    if space.dim() != expected {
        return Err(Error::SingularLocal {
            cell: el.cell.index,
            what: format!(
                "RT space has dimension {} instead of {expected}",
                space.dim()
            ),
        });
    }
    Ok(space)
}

/// Interpolation from velocity DoFs to the RT space.
#[derive(Clone, Debug)]
pub struct RtInterp {
    pub space: RtSpace,
    /// Per-subtriangle `P_k²` coefficients of `I^RT v` as a function of the DoFs.
    pub matrix: DMatrix<f64>,
    /// Coordinates of `I^RT v` in the space basis as a function of the DoFs.
    pub coords: DMatrix<f64>,
    /// Rows of the DoF functionals applied to the space basis.
    pub dof_matrix: DMatrix<f64>,
    /// Coefficients of the bubble fields in the space basis.
    pub bubbles: DMatrix<f64>,
}

impl RtInterp {
    /// Coefficients of `I^RT v` on subtriangle `t`.
    pub fn triangle_coeffs(&self, x: &DVector<f64>, t: usize) -> DVector<f64> {
        let n2 = self.space.grams[0].nrows();
        self.matrix.rows(t * n2, n2) * x
    }
}

/// Matches boundary normal moments, moments against `P_{k-2}(K; R²)` and the
/// bubble moments of `Π^K v`.
pub fn rt_interpolation_matrix(el: &Element, space: RtSpace) -> Result<RtInterp> {
    let k = el.k;
    let nk = el.n_poly();
    let nk2 = dim(k as isize - 2);
    let n = el.n_dofs();
    let area = el.area();
    let nt = space.n_triangles();
    let nb_edges = el.layout.n_edges;

    // (a) boundary normal moments; cell edge e is the outer edge of subtriangle e.
    let mut la = DMatrix::zeros(nb_edges * k, space.dim());
    let mut ea = DMatrix::zeros(nb_edges * k, n);
    for (e, edge) in el.cell.edges.iter().enumerate() {
        let t = if nt == 1 { 0 } else { e };
        let em = el.edge_monomial_moments(e, k);
        let block = space.coeffs.rows(t * 2 * nk, 2 * nk);
        let nrm = edge.normal;
        let rows = (&em * block.rows(0, nk)) * nrm[0] + (&em * block.rows(nk, nk)) * nrm[1];
        la.view_mut((e * k, 0), (k, space.dim())).copy_from(&rows);
        for j in 0..k {
            ea[(e * k + j, el.layout.edge(e, 0, j))] = nrm[0];
            ea[(e * k + j, el.layout.edge(e, 1, j))] = nrm[1];
        }
    }
    // (b) interior moments against the vector monomials of degree k - 2.
    let mut emb = DMatrix::zeros(nt * 2 * nk, 2 * nk2);
    for t in 0..nt {
        for c in 0..2 {
            for b in 0..nk2 {
                emb[(t * 2 * nk + c * nk + b, c * nk2 + b)] = 1.0;
            }
        }
    }
    let lb = space.inner(&emb, &space.coeffs) / area;
    let mut lab = DMatrix::zeros(la.nrows() + lb.nrows(), space.dim());
    lab.view_mut((0, 0), la.shape()).copy_from(&la);
    lab.view_mut((la.nrows(), 0), lb.shape()).copy_from(&lb);
    if numeric_rank(&lab, RANK_TOL) != lab.nrows() {
        return Err(Error::SingularLocal {
            cell: el.cell.index,
            what: "RT boundary and interior moments".into(),
        });
    }
    // (c) bubbles: the fields annihilated by (a) and (b).
    let bubbles = null_space(&lab, RANK_TOL);
    let bubble_fields = &space.coeffs * &bubbles;
    let mut poly = DMatrix::zeros(nt * 2 * nk, 2 * nk);
    for t in 0..nt {
        poly.view_mut((t * 2 * nk, 0), (2 * nk, 2 * nk))
            .fill_with_identity();
    }
    let w = space.inner(&bubble_fields, &poly) / area;
    let lc = space.inner(&bubble_fields, &space.coeffs) / area;

    let nrows = lab.nrows() + lc.nrows();
    if nrows != space.dim() {
        return Err(Error::SingularLocal {
            cell: el.cell.index,
            what: "RT degrees of freedom are not unisolvent".into(),
        });
    }
    let mut l = DMatrix::zeros(nrows, space.dim());
    l.view_mut((0, 0), lab.shape()).copy_from(&lab);
    l.view_mut((lab.nrows(), 0), lc.shape()).copy_from(&lc);
    let mut rhs = DMatrix::zeros(nrows, n);
    rhs.view_mut((0, 0), ea.shape()).copy_from(&ea);
    rhs.view_mut((ea.nrows(), 0), (2 * nk2, n))
        .copy_from(&(&el.pack.mom / area));
    rhs.view_mut((lab.nrows(), 0), (lc.nrows(), n))
        .copy_from(&(w * &el.pack.pi_star));
    let y = lu_solve(&l, &rhs).ok_or_else(|| Error::SingularLocal {
        cell: el.cell.index,
        what: "RT degrees of freedom are not unisolvent".into(),
    })?;
    let matrix = &space.coeffs * &y;
    Ok(RtInterp {
        space,
        matrix,
        coords: y,
        dof_matrix: l,
        bubbles,
    })
}

/// `F[i] = ∫_K f · I^RT φ_i`.
pub fn rt_load(
    el: &Element,
    interp: &RtInterp,
    f: impl Fn(Point) -> [f64; 2],
) -> Result<DVector<f64>> {
    let nk = el.n_poly();
    let mut fm = DVector::zeros(interp.space.n_triangles() * 2 * nk);
    for (t, tri) in interp.space.triangles.iter().enumerate() {
        let q = triangle_quadrature(tri, 2 * el.k + 8)?;
        for (&p, &w) in q.points.iter().zip(&q.weights) {
            let v = f(p);
            let vals = el.basis.eval(p);
            for a in 0..nk {
                fm[t * 2 * nk + a] += w * v[0] * vals[a];
                fm[t * 2 * nk + nk + a] += w * v[1] * vals[a];
            }
        }
    }
    Ok(interp.matrix.transpose() * fm)
}

/// Space and interpolation in one call.
pub fn rt_interp_for(el: &Element) -> Result<RtInterp> {
    rt_interpolation_matrix(el, build_rt_space(el)?)
}
