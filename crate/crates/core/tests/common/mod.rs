//! Independent oracles and the fixture file they populate.
//!
//! Nothing here calls the library's quadrature, bases or projectors; values
//! come from closed forms, brute-force enumeration or a separate
//! Gauss-Legendre implementation. `STOKESVEM_WRITE_FIXTURES=1` rewrites
//! `tests/fixtures/oracles.json` from these oracles.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use serde_json::{json, Value};
use stokesvem::mesh::{self, CellKind, PolyMesh};
use stokesvem::Point;

pub const FIXTURE_PATH: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/oracles.json");

/// Gauss-Legendre nodes and weights on [0, 1] by Newton iteration.
pub fn gauss(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out
}

/// `P_j(t)` by the three-term recursion.
pub fn legendre(j: usize, t: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, t);
    if j == 0 {
        return 1.0;
    }
    for n in 2..=j {
        let p2 = ((2 * n - 1) as f64 * t * p1 - (n - 1) as f64 * p0) / n as f64;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Orthonormal edge basis on the unit parameter.
pub fn psi(j: usize, s: f64) -> f64 {
    ((2 * j + 1) as f64).sqrt() * legendre(j, 2.0 * s - 1.0)
}

/// Tensor Gauss integral over an axis-aligned box.
pub fn box_integral(
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    n: usize,
    f: impl Fn(f64, f64) -> f64,
) -> f64 {
    let g = gauss(n);
    let mut s = 0.0;
    for &(a, wa) in &g {
        for &(b, wb) in &g {
            s += wa * wb * f(x0 + a * (x1 - x0), y0 + b * (y1 - y0));
        }
    }
    s * (x1 - x0) * (y1 - y0)
}

/// Vertex, edge and triangle counts of an `nx × ny` split grid.
pub fn grid_counts(nx: usize, ny: usize) -> (usize, usize, usize) {
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut edges = BTreeSet::new();
    let mut tris = 0;
    for j in 0..ny {
        for i in 0..nx {
            for t in [
                [id(i, j), id(i + 1, j), id(i + 1, j + 1)],
                [id(i, j), id(i + 1, j + 1), id(i, j + 1)],
            ] {
                tris += 1;
                for e in 0..3 {
                    let (a, b) = (t[e], t[(e + 1) % 3]);
                    edges.insert((a.min(b), a.max(b)));
                }
            }
        }
    }
    ((nx + 1) * (ny + 1), edges.len(), tris)
}

/// Whether `p` lies strictly inside the polygon.
pub fn strictly_inside(poly: &[Point], p: Point) -> bool {
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        let dot = (p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1]);
        let len2 = (b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2);
        if cross.abs() < 1e-14 && dot >= -1e-14 && dot <= len2 + 1e-14 {
            return false;
        }
    }
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

pub fn unit_square_mesh() -> PolyMesh {
    PolyMesh::new(
        vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        vec![vec![0, 1, 2, 3]],
    )
    .unwrap()
}

/// `∫_0^1 ((x - 1/2)/√2)^a dx`.
fn scaled_moment(a: i32) -> f64 {
    (0.5f64.powi(a + 1) - (-0.5f64).powi(a + 1)) / ((a + 1) as f64 * 2f64.sqrt().powi(a))
}

/// Gram matrix of the degree-1 scaled monomials on the unit square.
pub fn gram_k1_unit_square() -> Vec<f64> {
    let exps = [(0, 0), (1, 0), (0, 1)];
    let mut g = Vec::new();
    for &(a1, b1) in &exps {
        for &(a2, b2) in &exps {
            g.push(scaled_moment(a1 + a2) * scaled_moment(b1 + b2));
        }
    }
    g
}

/// DoFs of `(sin y, cos x)` on the unit square cell, k = 2.
pub fn sin_cos_dofs() -> Vec<f64> {
    let m = unit_square_mesh();
    let cell = &m.cells()[0];
    let verts = m.vertices();
    let u = |p: Point| [p[1].sin(), p[0].cos()];
    let g = gauss(30);
    let mut dofs = Vec::new();
    for e in 0..cell.len() {
        let (a, b) = (cell[e], cell[(e + 1) % cell.len()]);
        let (lo, hi) = (a.min(b), a.max(b));
        let (p0, p1) = (verts[lo], verts[hi]);
        for c in 0..2 {
            for j in 0..2 {
                let mut s = 0.0;
                for &(t, w) in &g {
                    let p = [p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1])];
                    s += w * u(p)[c] * psi(j, t);
                }
                dofs.push(s);
            }
        }
    }
    // Interior moments against the scaled gradients of x and y.
    dofs.push(box_integral(0.0, 1.0, 0.0, 1.0, 30, |_, y| y.sin()));
    dofs.push(box_integral(0.0, 1.0, 0.0, 1.0, 30, |x, _| x.cos()));
    dofs
}

pub fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// `∫ f·v` over the unit square for a vector polynomial in the scaled
/// monomials of degree `k` centred at (1/2, 1/2) with scale √2.
pub fn integrate_against_poly(coeffs: &[f64], k: usize, f: impl Fn(f64, f64) -> [f64; 2]) -> f64 {
    let exps: Vec<(i32, i32)> = (0..=k as i32)
        .flat_map(|d| (0..=d).map(move |b| (d - b, b)))
        .collect();
    let n = exps.len();
    let h = 2f64.sqrt();
    box_integral(0.0, 1.0, 0.0, 1.0, 20, |x, y| {
        let (xs, ys) = ((x - 0.5) / h, (y - 0.5) / h);
        let mut v = [0.0; 2];
        for (i, &(a, b)) in exps.iter().enumerate() {
            let m = xs.powi(a) * ys.powi(b);
            v[0] += coeffs[i] * m;
            v[1] += coeffs[n + i] * m;
        }
        let fv = f(x, y);
        fv[0] * v[0] + fv[1] * v[1]
    })
}

/// Constrained RT dimension by count: edge normal moments per fan edge,
/// interior P_{k-2}² moments and one bubble block per extra subtriangle.
pub fn rt_dimension_count(k: usize, n_sub_edges: usize, n_tri: usize) -> usize {
    let perp = (k - 1) * (k - 2) / 2;
    (n_sub_edges * k + k * (k - 1)) + (n_tri - 1) * perp - (n_tri - 1)
}

/// The oracle values, keyed by fixture name.
pub fn compute_fixtures(load_values: Vec<f64>) -> BTreeMap<String, Value> {
    let mut m = BTreeMap::new();
    let (v, e, t) = grid_counts(4, 4);
    m.insert("grid_4x4_counts".into(), json!([t, e, v]));
    let poly = mesh::lshape(2, CellKind::Polygons).unwrap();
    let inside = (0..poly.num_cells())
        .filter(|&c| strictly_inside(&poly.cell_points(c), [0.0, 0.0]))
        .count();
    m.insert("lshape_cells_containing_corner".into(), json!(inside));
    m.insert(
        "monomial_11_at_corner".into(),
        json!((0.5 / 2f64.sqrt()).powi(2)),
    );
    m.insert("gram_k1_unit_square".into(), json!(gram_k1_unit_square()));
    m.insert("sin_projection_k0".into(), json!(1.0 - 1f64.cos()));
    m.insert("sin_cos_dofs_k2".into(), json!(sin_cos_dofs()));
    m.insert(
        "div_x2_unit_square".into(),
        json!(box_integral(0.0, 1.0, 0.0, 1.0, 4, |x, _| 2.0 * x)),
    );
    m.insert("noflow_load_random_k2".into(), json!(load_values));
    m.insert(
        "rt_dims_tri_square_hexagon_k2".into(),
        json!([
            rt_dimension_count(2, 3, 1),
            rt_dimension_count(2, 8, 4),
            rt_dimension_count(2, 12, 6)
        ]),
    );
    m
}

/// `∫ f·Π v` for five seeded DoF vectors, `f = (0, 1 - y + 3y²)`.
pub fn noflow_load_oracle() -> Vec<f64> {
    let m = unit_square_mesh();
    let el = stokesvem::element::Element::new(m.geometry(0), 2).unwrap();
    (0..5)
        .map(|s| {
            let x = nalgebra::DVector::from_vec(random_vector(el.n_dofs(), 100 + s));
            let a = &el.pack.pi_star * x;
            integrate_against_poly(a.as_slice(), 2, |_, y| [0.0, 1.0 - y + 3.0 * y * y])
        })
        .collect()
}

pub fn load_fixtures() -> BTreeMap<String, Value> {
    let text = std::fs::read_to_string(FIXTURE_PATH).expect("fixture file");
    serde_json::from_str(&text).expect("fixture json")
}

pub fn write_fixtures() {
    let map = compute_fixtures(noflow_load_oracle());
    let text = serde_json::to_string_pretty(&map).unwrap();
    std::fs::create_dir_all(std::path::Path::new(FIXTURE_PATH).parent().unwrap()).unwrap();
    std::fs::write(FIXTURE_PATH, text + "\n").unwrap();
}

pub fn floats(v: &Value) -> Vec<f64> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect()
}

/// Checks the library against every fixture. Returns failures.
pub fn check_library_against_fixtures(fx: &BTreeMap<String, Value>) -> Vec<String> {
    use stokesvem::element::Element;
    use stokesvem::polyspace::{
        cell_quadrature, edge_legendre, edge_quadrature, gram_matrix, l2_project, MonomialBasis,
    };
    use stokesvem::rt::build_rt_space;
    let mut fails = Vec::new();
    let mut close = |name: &str, got: &[f64], want: &[f64], tol: f64| {
        let bad = got.len() != want.len()
            || got
                .iter()
                .zip(want)
                .any(|(g, w)| (g - w).abs() > tol * w.abs().max(1.0));
        if bad {
            fails.push(format!("{name}: got {got:?}, want {want:?}"));
        }
    };

    let g = mesh::uniform_triangles(4, 4, mesh::Rect::UNIT).unwrap();
    let counts = [
        g.num_cells() as f64,
        g.num_edges() as f64,
        g.num_vertices() as f64,
    ];
    close(
        "grid_4x4_counts",
        &counts,
        &floats(&fx["grid_4x4_counts"]),
        0.0,
    );

    let poly = mesh::lshape(2, CellKind::Polygons).unwrap();
    let inside = (0..poly.num_cells())
        .filter(|&c| strictly_inside(&poly.cell_points(c), [0.0, 0.0]))
        .count();
    close(
        "lshape_cells_containing_corner",
        &[inside as f64],
        &[fx["lshape_cells_containing_corner"].as_f64().unwrap()],
        0.0,
    );

    let sq = unit_square_mesh();
    let cell = sq.geometry(0);
    let b1 = MonomialBasis::for_cell(&cell, 2);
    close(
        "monomial_11_at_corner",
        &[b1.eval([1.0, 1.0])[4]],
        &[fx["monomial_11_at_corner"].as_f64().unwrap()],
        1e-15,
    );

    let b = MonomialBasis::for_cell(&cell, 1);
    let q = cell_quadrature(&cell, 2).unwrap();
    let gm = gram_matrix(&b, &b, &q).unwrap();
    let got: Vec<f64> = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| gm[(i, j)])
        .collect();
    close(
        "gram_k1_unit_square",
        &got,
        &floats(&fx["gram_k1_unit_square"]),
        1e-13,
    );

    let c0 = l2_project(&cell, |p| p[0].sin(), 0).unwrap();
    close(
        "sin_projection_k0",
        &[c0[0]],
        &[fx["sin_projection_k0"].as_f64().unwrap()],
        1e-9,
    );

    let el = Element::new(cell.clone(), 2).unwrap();
    let d = el.dof_evaluate(|p| [p[1].sin(), p[0].cos()]);
    close(
        "sin_cos_dofs_k2",
        d.as_slice(),
        &floats(&fx["sin_cos_dofs_k2"]),
        1e-10,
    );

    // Edge Legendre orthonormality under a degree-2k rule.
    for k in 2..=4 {
        let eq = edge_quadrature(&cell.edges[0], 2 * k).unwrap();
        for i in 0..k {
            for j in 0..k {
                let s: f64 = eq
                    .rule
                    .weights
                    .iter()
                    .zip(&eq.params)
                    .map(|(w, &t)| w * edge_legendre(k, t)[i] * edge_legendre(k, t)[j])
                    .sum::<f64>()
                    / cell.edges[0].length;
                close(
                    "edge_legendre_gram",
                    &[s],
                    &[if i == j { 1.0 } else { 0.0 }],
                    1e-13,
                );
            }
        }
    }

    let x2 = el.dof_evaluate(|p| [p[0] * p[0], 0.0]);
    let div = &el.pack.div * &x2;
    let pb = el.basis_of(1);
    let mean_div = el.quad.integrate(|p| pb.eval_poly(div.as_slice(), p));
    close(
        "div_x2_unit_square",
        &[mean_div],
        &[fx["div_x2_unit_square"].as_f64().unwrap()],
        1e-12,
    );

    let f = |p: Point| [0.0, 1.0 - p[1] + 3.0 * p[1] * p[1]];
    let load = el.local_load(f);
    let got: Vec<f64> = (0..5)
        .map(|s| {
            load.dot(&nalgebra::DVector::from_vec(random_vector(
                el.n_dofs(),
                100 + s,
            )))
        })
        .collect();
    close(
        "noflow_load_random_k2",
        &got,
        &floats(&fx["noflow_load_random_k2"]),
        1e-10,
    );

    let tri = PolyMesh::new(
        vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        vec![vec![0, 1, 2]],
    )
    .unwrap();
    let hex = PolyMesh::new(
        (0..6)
            .map(|i| {
                let t = std::f64::consts::PI * i as f64 / 3.0;
                [t.cos(), t.sin()]
            })
            .collect(),
        vec![(0..6).collect()],
    )
    .unwrap();
    let dims: Vec<f64> = [&tri, &sq, &hex]
        .iter()
        .map(|m| {
            build_rt_space(&Element::new(m.geometry(0), 2).unwrap())
                .unwrap()
                .dim() as f64
        })
        .collect();
    close(
        "rt_dims_tri_square_hexagon_k2",
        &dims,
        &floats(&fx["rt_dims_tri_square_hexagon_k2"]),
        0.0,
    );
    fails
}

/// Recomputes every oracle and compares with the frozen file.
pub fn check_oracles_against_fixtures(fx: &BTreeMap<String, Value>) -> Vec<String> {
    let fresh = compute_fixtures(noflow_load_oracle());
    let mut fails = Vec::new();
    for (k, v) in &fresh {
        let Some(stored) = fx.get(k) else {
            fails.push(format!("{k}: missing from fixture file"));
            continue;
        };
        let a: Vec<f64> = match v {
            Value::Array(_) => floats(v),
            _ => vec![v.as_f64().unwrap()],
        };
        let b: Vec<f64> = match stored {
            Value::Array(_) => floats(stored),
            _ => vec![stored.as_f64().unwrap()],
        };
        if a.len() != b.len()
            || a.iter()
                .zip(&b)
                .any(|(x, y)| (x - y).abs() > 1e-14 * y.abs().max(1.0))
        {
            fails.push(format!("{k}: oracle {a:?} differs from fixture {b:?}"));
        }
    }
    fails
}
