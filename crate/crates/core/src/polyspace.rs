//! Scaled monomials, quadrature and the `G ⊕ G⊕` split of vector polynomials.
//!
//! A monomial of degree `k` on a cell is `m_α(x) = ((x - x_K) / h_K)^α`,
//! listed in graded lexicographic order: `1, x̂, ŷ, x̂², x̂ŷ, ŷ², ...`. Because
//! the order is graded, the coefficients of a polynomial of degree `d` are a
//! prefix of its coefficients in any basis of degree `≥ d`. Vector polynomials
//! store the first component's coefficients followed by the second's.

use nalgebra::{DMatrix, DVector};

use crate::mesh::{CellGeometry, EdgeGeometry};
use crate::{Error, Point, Result};

/// Highest exactness degree the quadrature builders accept.
pub const MAX_QUADRATURE_DEGREE: usize = 60;

/// Number of monomials of degree at most `k`; zero for negative degrees.
pub fn dim(k: isize) -> usize {
    if k < 0 {
        0
    } else {
        let k = k as usize;
        (k + 1) * (k + 2) / 2
    }
}

/// Exponent pair of the `i`-th monomial.
pub fn exponent(i: usize) -> (usize, usize) {
    let mut d = 0;
    while (d + 1) * (d + 2) / 2 <= i {
        d += 1;
    }
    let b = i - d * (d + 1) / 2;
    (d - b, b)
}

/// Position of `x̂^a ŷ^b` in graded lexicographic order.
pub fn index(a: usize, b: usize) -> usize {
    let d = a + b;
    d * (d + 1) / 2 + b
}

/// Scaled monomials of degree `≤ degree` around `center` with scale `scale`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonomialBasis {
    pub degree: usize,
    pub center: Point,
    pub scale: f64,
}

impl MonomialBasis {
    pub fn new(degree: usize, center: Point, scale: f64) -> Self {
        MonomialBasis {
            degree,
            center,
            scale,
        }
    }

    /// Basis centred at the cell centroid and scaled by its diameter.
    pub fn for_cell(cell: &CellGeometry, degree: usize) -> Self {
        Self::new(degree, cell.centroid, cell.diameter)
    }

    pub fn dim(&self) -> usize {
        dim(self.degree as isize)
    }

    pub fn with_degree(&self, degree: usize) -> Self {
        MonomialBasis { degree, ..*self }
    }

    pub fn local(&self, p: Point) -> Point {
        [
            (p[0] - self.center[0]) / self.scale,
            (p[1] - self.center[1]) / self.scale,
        ]
    }

    /// Values of every basis monomial at `p`.
    pub fn eval(&self, p: Point) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(p, &mut out);
        out
    }

    pub fn eval_into(&self, p: Point, out: &mut [f64]) {
        let [x, y] = self.local(p);
        out[0] = 1.0;
        for d in 1..=self.degree {
            let prev = (d - 1) * d / 2;
            let cur = d * (d + 1) / 2;
            // x̂^(d-b) ŷ^b from the previous degree: multiply by x̂ except for the last entry.
            for b in 0..d {
                out[cur + b] = out[prev + b] * x;
            }
            out[cur + d] = out[prev + d - 1] * y;
        }
    }

    /// Physical gradients of every basis monomial at `p`.
    pub fn eval_grad(&self, p: Point) -> Vec<[f64; 2]> {
        let vals = self.with_degree(self.degree.saturating_sub(1)).eval(p);
        (0..self.dim())
            .map(|i| {
                let (a, b) = exponent(i);
                let gx = if a > 0 {
                    a as f64 * vals[index(a - 1, b)]
                } else {
                    0.0
                };
                let gy = if b > 0 {
                    b as f64 * vals[index(a, b - 1)]
                } else {
                    0.0
                };
                [gx / self.scale, gy / self.scale]
            })
            .collect()
    }

    /// Value matrix with one row per point.
    pub fn eval_basis(&self, pts: &[Point]) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(pts.len(), n);
        let mut row = vec![0.0; n];
        for (i, &p) in pts.iter().enumerate() {
            self.eval_into(p, &mut row);
            for j in 0..n {
                m[(i, j)] = row[j];
            }
        }
        m
    }

    /// Evaluates the polynomial with the given coefficients at `p`.
    pub fn eval_poly(&self, coeffs: &[f64], p: Point) -> f64 {
        let vals = self.eval(p);
        coeffs.iter().zip(&vals).map(|(c, v)| c * v).sum()
    }
}

/// Matrix of `∂/∂x̂` (`axis = 0`) or `∂/∂ŷ` (`axis = 1`) from degree `deg` to
/// degree `deg - 1` coefficients, in scaled variables.
pub fn deriv_matrix(deg: usize, axis: usize) -> DMatrix<f64> {
    let rows = dim(deg as isize - 1);
    let mut m = DMatrix::zeros(rows, dim(deg as isize));
    for i in 0..dim(deg as isize) {
        let (a, b) = exponent(i);
        match axis {
            0 if a > 0 => m[(index(a - 1, b), i)] = a as f64,
            1 if b > 0 => m[(index(a, b - 1), i)] = b as f64,
            _ => {}
        }
    }
    m
}

/// Matrix of multiplication by `x̂` or `ŷ` from degree `deg` to `deg + 1`.
pub fn mul_matrix(deg: usize, axis: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim(deg as isize + 1), dim(deg as isize));
    for i in 0..dim(deg as isize) {
        let (a, b) = exponent(i);
        let j = if axis == 0 {
            index(a + 1, b)
        } else {
            index(a, b + 1)
        };
        m[(j, i)] = 1.0;
    }
    m
}

/// Points and weights of a quadrature rule in physical coordinates.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }

    fn extend(&mut self, other: QuadratureRule) {
        self.points.extend(other.points);
        self.weights.extend(other.weights);
    }
}

fn check_degree(degree: usize) -> Result<()> {
    if degree > MAX_QUADRATURE_DEGREE {
        return Err(Error::QuadratureTooLow {
            have: MAX_QUADRATURE_DEGREE,
            need: degree,
        });
    }
    Ok(())
}

/// `n`-point Gauss-Legendre rule on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wi;
        w[n - 1 - i] = 0.5 * wi;
    }
    (x, w)
}

/// Rule on the unit interval exact for polynomials of degree `degree`.
pub fn unit_interval_rule(degree: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    check_degree(degree)?;
    Ok(gauss_legendre(degree / 2 + 1))
}

/// Collapsed tensor Gauss rule on a triangle with the given exactness.
pub fn triangle_quadrature(tri: &[Point; 3], degree: usize) -> Result<QuadratureRule> {
    check_degree(degree)?;
    let (x, w) = gauss_legendre(degree / 2 + 1);
    let (xu, wu) = gauss_legendre(degree.div_ceil(2) + 1);
    let [v0, v1, v2] = *tri;
    let two_area = (v1[0] - v0[0]) * (v2[1] - v0[1]) - (v2[0] - v0[0]) * (v1[1] - v0[1]);
    let mut points = Vec::with_capacity(x.len() * xu.len());
    let mut weights = Vec::with_capacity(x.len() * xu.len());
    for (&u, &wu) in xu.iter().zip(&wu) {
        for (&v, &wv) in x.iter().zip(&w) {
            let a = u * (1.0 - v);
            let b = u * v;
            points.push([
                v0[0] + a * (v1[0] - v0[0]) + b * (v2[0] - v0[0]),
                v0[1] + a * (v1[1] - v0[1]) + b * (v2[1] - v0[1]),
            ]);
            weights.push(wu * wv * u * two_area);
        }
    }
    Ok(QuadratureRule {
        points,
        weights,
        degree,
    })
}

/// Composite rule over the centroid fan of the cell.
pub fn cell_quadrature(cell: &CellGeometry, degree: usize) -> Result<QuadratureRule> {
    let mut rule = QuadratureRule {
        points: Vec::new(),
        weights: Vec::new(),
        degree,
    };
    for t in cell.subtriangulate()? {
        rule.extend(triangle_quadrature(&t, degree)?);
    }
    Ok(rule)
}

/// Gauss-Legendre rule on an edge, with the global edge parameter of each point.
#[derive(Clone, Debug)]
pub struct EdgeQuadrature {
    pub rule: QuadratureRule,
    pub params: Vec<f64>,
}

pub fn edge_quadrature(edge: &EdgeGeometry, degree: usize) -> Result<EdgeQuadrature> {
    let (s, w) = unit_interval_rule(degree)?;
    let points = s.iter().map(|&t| edge.point_at(t)).collect();
    let weights = w.iter().map(|&wi| wi * edge.length).collect();
    Ok(EdgeQuadrature {
        rule: QuadratureRule {
            points,
            weights,
            degree,
        },
        params: s,
    })
}

/// Edge basis `ψ_j(s) = √(2j+1) P_j(2s - 1)`, `j < n`, orthonormal for the
/// mean inner product `(1/h_F) ∫_F`.
pub fn edge_legendre(n: usize, s: f64) -> Vec<f64> {
    let t = 2.0 * s - 1.0;
    let mut p = Vec::with_capacity(n);
    for j in 0..n {
        let v = match j {
            0 => 1.0,
            1 => t,
            _ => ((2 * j - 1) as f64 * t * p[j - 1] - (j - 1) as f64 * p[j - 2]) / j as f64,
        };
        p.push(v);
    }
    p.iter()
        .enumerate()
        .map(|(j, v)| v * ((2 * j + 1) as f64).sqrt())
        .collect()
}

/// `G[i][j] = ∫ a_i b_j` with the given rule.
pub fn gram_matrix(
    a: &MonomialBasis,
    b: &MonomialBasis,
    quad: &QuadratureRule,
) -> Result<DMatrix<f64>> {
    if quad.degree < a.degree + b.degree {
        return Err(Error::QuadratureTooLow {
            have: quad.degree,
            need: a.degree + b.degree,
        });
    }
    let va = a.eval_basis(&quad.points);
    let vb = b.eval_basis(&quad.points);
    let w = DVector::from_column_slice(&quad.weights);
    let mut wb = vb;
    for (mut row, wi) in wb.row_iter_mut().zip(w.iter()) {
        row *= *wi;
    }
    Ok(va.transpose() * wb)
}

/// L² projection of `f` onto `P_k(K)` as scaled-monomial coefficients.
pub fn l2_project(cell: &CellGeometry, f: impl Fn(Point) -> f64, k: usize) -> Result<DVector<f64>> {
    let basis = MonomialBasis::for_cell(cell, k);
    let quad = cell_quadrature(cell, 2 * k + 6)?;
    let gram = gram_matrix(&basis, &basis, &quad)?;
    let mut rhs = DVector::zeros(basis.dim());
    let mut vals = vec![0.0; basis.dim()];
    for (&p, &w) in quad.points.iter().zip(&quad.weights) {
        basis.eval_into(p, &mut vals);
        let fv = f(p);
        for (r, v) in rhs.iter_mut().zip(&vals) {
            *r += w * fv * v;
        }
    }
    // Jacobi scaling keeps thin cells well conditioned.
    let d = gram.diagonal().map(|v| 1.0 / v.sqrt());
    let scaled = DMatrix::from_fn(gram.nrows(), gram.ncols(), |i, j| {
        d[i] * gram[(i, j)] * d[j]
    });
    let chol = scaled.cholesky().ok_or_else(|| Error::SingularLocal {
        cell: cell.index,
        what: "monomial Gram matrix".into(),
    })?;
    Ok(chol.solve(&rhs.component_mul(&d)).component_mul(&d))
}

/// L² projection of `f` onto `P_{n-1}(F)` in the edge Legendre basis.
pub fn l2_project_edge(
    edge: &EdgeGeometry,
    f: impl Fn(Point) -> f64,
    n: usize,
) -> Result<DVector<f64>> {
    let q = edge_quadrature(edge, 2 * n + 6)?;
    let mut c = DVector::zeros(n);
    for ((&p, &w), &s) in q.rule.points.iter().zip(&q.rule.weights).zip(&q.params) {
        let fv = f(p);
        for (cj, psi) in c.iter_mut().zip(edge_legendre(n, s)) {
            *cj += w * fv * psi / edge.length;
        }
    }
    Ok(c)
}

/// Basis of `P_{k-2}(K; R²)` split as `x̂⊥ P_{k-3}` (the `G⊕` part) followed
/// by `h_K ∇ P_{k-1}` without constants (the `G` part). Columns are vector
/// monomial coefficients of degree `k - 2`, with `x̂⊥ = (ŷ, -x̂)`.
#[derive(Clone, Debug)]
pub struct GradSplitBasis {
    pub k: usize,
    pub coeffs: DMatrix<f64>,
    pub n_perp: usize,
    pub n_grad: usize,
}

impl GradSplitBasis {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::UnsupportedDegree(k));
        }
        let nv = dim(k as isize - 2);
        let n_perp = dim(k as isize - 3);
        let n_grad = dim(k as isize - 1) - 1;
        let mut coeffs = DMatrix::zeros(2 * nv, n_perp + n_grad);
        for i in 0..n_perp {
            let (a, b) = exponent(i);
            coeffs[(index(a, b + 1), i)] = 1.0;
            coeffs[(nv + index(a + 1, b), i)] = -1.0;
        }
        for i in 1..=n_grad {
            let (a, b) = exponent(i);
            let col = n_perp + i - 1;
            if a > 0 {
                coeffs[(index(a - 1, b), col)] = a as f64;
            }
            if b > 0 {
                coeffs[(nv + index(a, b - 1), col)] = b as f64;
            }
        }
        Ok(GradSplitBasis {
            k,
            coeffs,
            n_perp,
            n_grad,
        })
    }

    pub fn len(&self) -> usize {
        self.n_perp + self.n_grad
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The `G⊕` columns.
    pub fn perp(&self) -> DMatrix<f64> {
        self.coeffs.columns(0, self.n_perp).into_owned()
    }

    /// The `G` columns.
    pub fn grad(&self) -> DMatrix<f64> {
        self.coeffs.columns(self.n_perp, self.n_grad).into_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{self, PolyMesh, Rect};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit_square() -> CellGeometry {
        PolyMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![vec![0, 1, 2, 3]],
        )
        .unwrap()
        .geometry(0)
    }

    fn regular_hexagon() -> CellGeometry {
        let pts = (0..6)
            .map(|i| {
                let t = std::f64::consts::PI * i as f64 / 3.0;
                [0.3 + t.cos(), -0.2 + t.sin()]
            })
            .collect();
        PolyMesh::new(pts, vec![(0..6).collect()])
            .unwrap()
            .geometry(0)
    }

    #[test]
    fn exponent_index_roundtrip() {
        for i in 0..dim(8) {
            let (a, b) = exponent(i);
            assert_eq!(index(a, b), i);
        }
        assert_eq!(exponent(3), (2, 0));
        assert_eq!(exponent(5), (0, 2));
        assert_eq!(dim(2), 6);
        assert_eq!(dim(-1), 0);
    }

    #[test]
    fn eval_examples() {
        let b = MonomialBasis::new(2, [0.5, 0.5], 2f64.sqrt());
        let v = b.eval([1.0, 1.0]);
        assert_relative_eq!(v[index(1, 1)], 0.125, epsilon = 1e-15);
        let vc = b.eval([0.5, 0.5]);
        assert_eq!(vc[0], 1.0);
        assert!(vc[1..].iter().all(|&x| x == 0.0));

        let h = 0.7;
        let b = MonomialBasis::new(1, [0.1, 0.2], h);
        let p = [0.1 + h, 0.2];
        assert_relative_eq!(b.eval(p)[1], 1.0, epsilon = 1e-15);
        let g = b.eval_grad(p);
        assert_eq!(g[0], [0.0, 0.0]);
        assert_relative_eq!(g[1][0], 1.0 / h, epsilon = 1e-15);
        assert_eq!(g[1][1], 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let b = MonomialBasis::new(4, [0.2, -0.1], 0.8);
        let p = [0.45, 0.3];
        let g = b.eval_grad(p);
        let eps = 1e-6;
        let fx: Vec<f64> = b
            .eval([p[0] + eps, p[1]])
            .iter()
            .zip(b.eval([p[0] - eps, p[1]]))
            .map(|(a, c)| (a - c) / (2.0 * eps))
            .collect();
        let fy: Vec<f64> = b
            .eval([p[0], p[1] + eps])
            .iter()
            .zip(b.eval([p[0], p[1] - eps]))
            .map(|(a, c)| (a - c) / (2.0 * eps))
            .collect();
        for i in 0..b.dim() {
            assert_relative_eq!(g[i][0], fx[i], epsilon = 1e-8);
            assert_relative_eq!(g[i][1], fy[i], epsilon = 1e-8);
        }
    }

    #[test]
    fn deriv_and_mul_matrices() {
        let b = MonomialBasis::new(3, [0.0, 0.0], 1.0);
        let c: Vec<f64> = (0..10).map(|i| (i as f64 * 0.37).sin()).collect();
        let dx = deriv_matrix(3, 0) * DVector::from_column_slice(&c);
        let p = [0.3, -0.4];
        let direct: f64 = b.eval_grad(p).iter().zip(&c).map(|(g, c)| g[0] * c).sum();
        assert_relative_eq!(
            b.with_degree(2).eval_poly(dx.as_slice(), p),
            direct,
            epsilon = 1e-14
        );
        let my = mul_matrix(3, 1) * DVector::from_column_slice(&c);
        assert_relative_eq!(
            b.with_degree(4).eval_poly(my.as_slice(), p),
            p[1] * b.eval_poly(&c, p),
            epsilon = 1e-14
        );
    }

    #[test]
    fn gauss_legendre_moments() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for d in 0..(2 * n) {
                let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d as i32)).sum();
                assert_relative_eq!(s, 1.0 / (d as f64 + 1.0), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn triangle_rule_exactness() {
        // ∫_T x^a y^b on the reference triangle is a! b! / (a + b + 2)!.
        let fact = |n: usize| (1..=n).map(|i| i as f64).product::<f64>();
        let t = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        for deg in [0, 1, 5, 12, 20] {
            let q = triangle_quadrature(&t, deg).unwrap();
            for a in 0..=deg {
                for b in 0..=(deg - a) {
                    let exact = fact(a) * fact(b) / fact(a + b + 2);
                    let got = q.integrate(|p| p[0].powi(a as i32) * p[1].powi(b as i32));
                    assert!(
                        ((got - exact) / exact).abs() < 1e-13,
                        "deg {deg} a {a} b {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn cell_rule_examples() {
        let sq = unit_square();
        let q = cell_quadrature(&sq, 7).unwrap();
        assert_relative_eq!(q.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(
            q.integrate(|p| p[0] * p[0] * p[1] * p[1]),
            1.0 / 9.0,
            epsilon = 1e-14
        );
        let hex = regular_hexagon();
        let q = cell_quadrature(&hex, 5).unwrap();
        assert_relative_eq!(q.weights.iter().sum::<f64>(), hex.area, epsilon = 1e-14);
        assert!(q.integrate(|p| p[0] - hex.centroid[0]).abs() < 1e-15);
        assert!(cell_quadrature(&hex, MAX_QUADRATURE_DEGREE + 1).is_err());
    }

    #[test]
    fn edge_rule_examples() {
        let sq = unit_square();
        let e = &sq.edges[0];
        let q = edge_quadrature(e, 3).unwrap();
        assert_relative_eq!(q.rule.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(q.rule.integrate(|p| p[0].powi(3)), 0.25, epsilon = 1e-15);
        let hex = regular_hexagon();
        let e = &hex.edges[2];
        let q = edge_quadrature(e, 6).unwrap();
        assert_relative_eq!(
            q.rule.weights.iter().sum::<f64>(),
            e.length,
            epsilon = 1e-15
        );
        for k in 2..=4 {
            let q = edge_quadrature(e, 2 * k).unwrap();
            let mut g = DMatrix::<f64>::zeros(k, k);
            for (&w, &s) in q.rule.weights.iter().zip(&q.params) {
                let psi = edge_legendre(k, s);
                for i in 0..k {
                    for j in 0..k {
                        g[(i, j)] += w * psi[i] * psi[j] / e.length;
                    }
                }
            }
            assert!((g - DMatrix::identity(k, k)).amax() < 1e-14);
        }
    }

    #[test]
    fn gram_examples() {
        let sq = unit_square();
        let q = cell_quadrature(&sq, 4).unwrap();
        let b0 = MonomialBasis::for_cell(&sq, 0);
        let g = gram_matrix(&b0, &b0, &q).unwrap();
        assert_relative_eq!(g[(0, 0)], 1.0, epsilon = 1e-15);

        // Closed-form oracle: centred at (1/2, 1/2), h = √2, so with
        // s = x - 1/2, ∫ s² = 1/12 over the unit square and every odd moment vanishes.
        let b1 = MonomialBasis::for_cell(&sq, 1);
        let g = gram_matrix(&b1, &b1, &q).unwrap();
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.0, 0.0, 0.0, 1.0 / 24.0, 0.0, 0.0, 0.0, 1.0 / 24.0],
        );
        assert!((g - expected).amax() < 1e-13);

        let b3 = MonomialBasis::for_cell(&sq, 3);
        assert!(matches!(
            gram_matrix(&b3, &b3, &q),
            Err(Error::QuadratureTooLow { .. })
        ));
    }

    #[test]
    fn projection_examples() {
        let sq = unit_square();
        let c = l2_project(&sq, |p| p[0].sin(), 0).unwrap();
        assert_relative_eq!(c[0], 1.0 - 1f64.cos(), epsilon = 1e-9);
        assert_relative_eq!(c[0], 0.45970, epsilon = 1e-5);
        let e = &sq.edges[0];
        let c = l2_project_edge(e, |p| p[0], 1).unwrap();
        assert_relative_eq!(c[0], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn grad_split_dimensions() {
        let g2 = GradSplitBasis::new(2).unwrap();
        assert_eq!((g2.n_perp, g2.n_grad), (0, 2));
        let g3 = GradSplitBasis::new(3).unwrap();
        assert_eq!((g3.n_perp, g3.n_grad), (1, 5));
        assert!(GradSplitBasis::new(1).is_err());
        for k in 2..=4 {
            let g = GradSplitBasis::new(k).unwrap();
            assert_eq!(crate::linalg::numeric_rank(&g.coeffs, 1e-10), k * (k - 1));
        }
    }

    #[test]
    fn perp_part_of_constant_is_divergence_free() {
        // div(x̂⊥ q) = ∂x̂(ŷ q) - ∂ŷ(x̂ q) = ŷ ∂x̂ q - x̂ ∂ŷ q, zero for constant q
        // and of degree deg q otherwise.
        for k in 3..=4 {
            let g = GradSplitBasis::new(k).unwrap();
            let nv = dim(k as isize - 2);
            let dx = deriv_matrix(k - 2, 0);
            let dy = deriv_matrix(k - 2, 1);
            for col in 0..g.n_perp {
                let c = g.coeffs.column(col);
                let div = &dx * c.rows(0, nv) + &dy * c.rows(nv, nv);
                let deg = exponent(col).0 + exponent(col).1;
                for (i, v) in div.iter().enumerate() {
                    let (a, b) = exponent(i);
                    if deg == 0 || a + b > deg {
                        assert!(v.abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn gradsplit_not_orthogonal() {
        // (ŷ, -x̂) · h∇(x̂²) = 2x̂ŷ integrates to zero, but (ŷ, -x̂) · h∇(x̂ŷ) = ŷ² - x̂²
        // does not vanish on a non-square rectangle.
        let g = GradSplitBasis::new(3).unwrap();
        let sq = PolyMesh::new(
            vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]],
            vec![vec![0, 1, 2, 3]],
        )
        .unwrap()
        .geometry(0);
        let q = cell_quadrature(&sq, 6).unwrap();
        let b = MonomialBasis::for_cell(&sq, 1);
        let gram = gram_matrix(&b, &b, &q).unwrap();
        let mut vgram = DMatrix::zeros(6, 6);
        vgram.view_mut((0, 0), (3, 3)).copy_from(&gram);
        vgram.view_mut((3, 3), (3, 3)).copy_from(&gram);
        let cross = g.perp().transpose() * vgram * g.grad();
        assert!(cross.amax() > 1e-3);
    }

    fn random_cell(seed: u64) -> CellGeometry {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(3..9);
        let (sx, sy) = (rng.random_range(0.5..2.0), rng.random_range(0.5..2.0));
        // Points on a stretched circle form a convex polygon.
        let pts: Vec<Point> = (0..n)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * (i as f64 + rng.random_range(-0.3..0.3))
                    / n as f64;
                [sx * t.cos() + 3.0, sy * t.sin() - 1.0]
            })
            .collect();
        PolyMesh::new(pts, vec![(0..n).collect()])
            .unwrap()
            .geometry(0)
    }

    #[test]
    fn gradsplit_rank_on_random_cells() {
        // The coefficient matrix is cell independent; check the physical fields too.
        for seed in 0..20 {
            let cell = random_cell(seed);
            for k in 2..=4 {
                let g = GradSplitBasis::new(k).unwrap();
                let b = MonomialBasis::for_cell(&cell, k - 2);
                let q = cell_quadrature(&cell, 2 * k).unwrap();
                let gram = gram_matrix(&b, &b, &q).unwrap();
                let n = b.dim();
                let mut vgram = DMatrix::zeros(2 * n, 2 * n);
                vgram.view_mut((0, 0), (n, n)).copy_from(&gram);
                vgram.view_mut((n, n), (n, n)).copy_from(&gram);
                let m = g.coeffs.transpose() * vgram * &g.coeffs;
                assert_eq!(crate::linalg::numeric_rank(&m, 1e-10), k * (k - 1));
            }
        }
    }

    #[test]
    fn mesh_cells_integrate_monomials() {
        let m = mesh::hex_dominant(3, Rect::new(0.0, 0.0, 2.0, 1.0)).unwrap();
        let mut total = 0.0;
        for c in 0..m.num_cells() {
            let q = cell_quadrature(&m.geometry(c), 6).unwrap();
            total += q.integrate(|p| p[0].powi(3) * p[1].powi(3));
        }
        assert_relative_eq!(total, 1.0, epsilon = 1e-13);
    }

    proptest! {
        #[test]
        fn projection_reproduces_polynomials(seed in 0u64..1000, k in 0usize..5) {
            let cell = random_cell(seed);
            let b = MonomialBasis::for_cell(&cell, k);
            let c: Vec<f64> = (0..b.dim()).map(|i| ((seed as f64 + 1.0) * (i as f64 + 0.5)).sin()).collect();
            let got = l2_project(&cell, |p| b.eval_poly(&c, p), k).unwrap();
            for (g, e) in got.iter().zip(&c) {
                prop_assert!((g - e).abs() < 1e-9, "{} vs {}", g, e);
            }
            // Coefficients inherit the monomial Gram conditioning on thin
            // cells; pointwise the reproduction is exact to round-off.
            let q = cell_quadrature(&cell, 2 * k).unwrap();
            for &p in &q.points {
                prop_assert!((b.eval_poly(got.as_slice(), p) - b.eval_poly(&c, p)).abs() < 1e-12);
            }
        }

        #[test]
        fn cell_rule_weights_sum_to_area(seed in 0u64..1000, deg in 0usize..20) {
            let cell = random_cell(seed);
            let q = cell_quadrature(&cell, deg).unwrap();
            prop_assert!((q.weights.iter().sum::<f64>() / cell.area - 1.0).abs() < 1e-13);
        }
    }
}
