//! Experiment drivers: manufactured solutions, error norms, convergence
//! tables, Ra sweeps and CSV output.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::mesh::{self, CellKind, PolyMesh, Rect};
use crate::polyspace::cell_quadrature;
use crate::system::{solve_method, DiscreteSolution, Discretization, Method, SolverKind};
use crate::{Error, Point, Result};

type Field<T> = Box<dyn Fn(Point) -> T + Send + Sync>;

/// Exact Stokes pair `(u, p)`; the load is `f = -(ν/2)Δu - ∇p`.
pub struct Manufactured {
    pub name: &'static str,
    pub nu: f64,
    u: Field<[f64; 2]>,
    grad_u: Field<[[f64; 2]; 2]>,
    lap_u: Field<[f64; 2]>,
    p: Field<f64>,
    grad_p: Field<[f64; 2]>,
}

/// Dense univariate polynomial, lowest degree first.
#[derive(Clone, Debug)]
struct Poly1(Vec<f64>);

impl Poly1 {
    fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    fn deriv(&self) -> Poly1 {
        Poly1(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| i as f64 * c)
                .collect(),
        )
    }
}

impl Manufactured {
    pub fn u(&self, x: Point) -> [f64; 2] {
        (self.u)(x)
    }

    pub fn grad_u(&self, x: Point) -> [[f64; 2]; 2] {
        (self.grad_u)(x)
    }

    pub fn eps(&self, x: Point) -> [[f64; 2]; 2] {
        let g = self.grad_u(x);
        let off = 0.5 * (g[0][1] + g[1][0]);
        [[g[0][0], off], [off, g[1][1]]]
    }

    pub fn p(&self, x: Point) -> f64 {
        (self.p)(x)
    }

    pub fn f(&self, x: Point) -> [f64; 2] {
        let l = (self.lap_u)(x);
        let g = (self.grad_p)(x);
        [-0.5 * self.nu * l[0] - g[0], -0.5 * self.nu * l[1] - g[1]]
    }

    /// Velocity from the stream function `ψ = A(x) B(y)`.
    fn from_stream(
        name: &'static str,
        nu: f64,
        a: Poly1,
        b: Poly1,
        p: Field<f64>,
        grad_p: Field<[f64; 2]>,
    ) -> Self {
        let d = |q: &Poly1| {
            [
                q.clone(),
                q.deriv(),
                q.deriv().deriv(),
                q.deriv().deriv().deriv(),
            ]
        };
        let (a, b) = (d(&a), d(&b));
        let (a1, b1) = (a.clone(), b.clone());
        let (a2, b2) = (a.clone(), b.clone());
        Manufactured {
            name,
            nu,
            u: Box::new(move |[x, y]| [a[0].eval(x) * b[1].eval(y), -a[1].eval(x) * b[0].eval(y)]),
            grad_u: Box::new(move |[x, y]| {
                [
                    [a1[1].eval(x) * b1[1].eval(y), a1[0].eval(x) * b1[2].eval(y)],
                    [
                        -a1[2].eval(x) * b1[0].eval(y),
                        -a1[1].eval(x) * b1[1].eval(y),
                    ],
                ]
            }),
            lap_u: Box::new(move |[x, y]| {
                [
                    a2[2].eval(x) * b2[1].eval(y) + a2[0].eval(x) * b2[3].eval(y),
                    -a2[3].eval(x) * b2[0].eval(y) - a2[1].eval(x) * b2[2].eval(y),
                ]
            }),
            p,
            grad_p,
        }
    }

    /// Smooth solution on the L-shaped domain:
    /// `ψ = (x³-x)²(y³-y)²`, `p = 1/(x²+1) - π/4`.
    pub fn lshape(nu: f64) -> Self {
        let sq = Poly1(vec![0.0, 0.0, 1.0, 0.0, -2.0, 0.0, 1.0]);
        Self::from_stream(
            "lshape",
            nu,
            sq.clone(),
            sq,
            Box::new(|[x, _]| 1.0 / (x * x + 1.0) - std::f64::consts::FRAC_PI_4),
            Box::new(|[x, _]| [-2.0 * x / (x * x + 1.0).powi(2), 0.0]),
        )
    }

    /// Smooth solution on the unit square:
    /// `ψ = x²(1-x)² y²(1-y)²`, `p = sin(πx) cos(πy)`.
    pub fn square(nu: f64) -> Self {
        use std::f64::consts::PI;
        let q = Poly1(vec![0.0, 0.0, 1.0, -2.0, 1.0]);
        Self::from_stream(
            "square",
            nu,
            q.clone(),
            q,
            Box::new(|[x, y]| (PI * x).sin() * (PI * y).cos()),
            Box::new(|[x, y]| {
                [
                    PI * (PI * x).cos() * (PI * y).cos(),
                    -PI * (PI * x).sin() * (PI * y).sin(),
                ]
            }),
        )
    }

    /// No-flow problem: `u = 0`, `f = (0, Ra(1 - y + 3y²))`, balanced by
    /// `p = -Ra(y³ - y²/2 + y - 7/12)`.
    pub fn noflow(ra: f64, nu: f64) -> Self {
        Manufactured {
            name: "noflow",
            nu,
            u: Box::new(|_| [0.0, 0.0]),
            grad_u: Box::new(|_| [[0.0; 2]; 2]),
            lap_u: Box::new(|_| [0.0, 0.0]),
            p: Box::new(move |[_, y]| -ra * (y * y * y - 0.5 * y * y + y - 7.0 / 12.0)),
            grad_p: Box::new(move |[_, y]| [0.0, -ra * (3.0 * y * y - y + 1.0)]),
        }
    }

    /// Divergence-free polynomial velocity of degree `k` with a pressure of
    /// degree `k - 1`. Supported for `k ∈ {2, 3}`.
    pub fn patch(k: usize, nu: f64) -> Result<Self> {
        match k {
            2 => Ok(Manufactured {
                name: "patch",
                nu,
                u: Box::new(|[x, y]| [x * x, -2.0 * x * y]),
                grad_u: Box::new(|[x, y]| [[2.0 * x, 0.0], [-2.0 * y, -2.0 * x]]),
                lap_u: Box::new(|_| [2.0, 0.0]),
                p: Box::new(|[x, y]| x + y - 1.0),
                grad_p: Box::new(|_| [1.0, 1.0]),
            }),
            3 => Ok(Manufactured {
                name: "patch",
                nu,
                u: Box::new(|[x, y]| [x * x * x - 3.0 * x * y * y, -3.0 * x * x * y + y * y * y]),
                grad_u: Box::new(|[x, y]| {
                    [
                        [3.0 * x * x - 3.0 * y * y, -6.0 * x * y],
                        [-6.0 * x * y, -3.0 * x * x + 3.0 * y * y],
                    ]
                }),
                lap_u: Box::new(|_| [0.0, 0.0]),
                p: Box::new(|[x, y]| x * x - y * y),
                grad_p: Box::new(|[x, y]| [2.0 * x, -2.0 * y]),
            }),
            _ => Err(Error::UnsupportedDegree(k)),
        }
    }
}

/// One refinement level of a run.
#[derive(Clone, Debug, Default)]
pub struct ErrorRow {
    pub method: String,
    pub k: usize,
    pub level: usize,
    pub cells: usize,
    pub h: f64,
    pub err_u_l2: f64,
    pub err_eps: f64,
    pub err_p: f64,
    pub err_p_reduced: Option<f64>,
    pub order_u: Option<f64>,
    pub order_eps: Option<f64>,
    pub order_p: Option<f64>,
    pub order_p_reduced: Option<f64>,
    pub ra: Option<f64>,
    /// `‖p + p_h‖`, reported for the no-flow example.
    pub err_p_flipped: Option<f64>,
}

/// Error rows of a run with observed orders filled in.
#[derive(Clone, Debug, Default)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
}

/// `log₂(e_prev/e)` when `h` halves within 5%.
pub fn observed_order(h_prev: f64, h: f64, e_prev: f64, e: f64) -> Option<f64> {
    let ratio = h_prev / h;
    if (ratio / 2.0 - 1.0).abs() > 0.05 || !(e > 0.0) || !(e_prev > 0.0) {
        return None;
    }
    Some((e_prev / e).ln() / ratio.ln())
}

impl ErrorReport {
    /// Fills in orders between consecutive rows sharing method, k and Ra.
    pub fn compute_orders(&mut self) {
        for i in 1..self.rows.len() {
            let (a, b) = self.rows.split_at_mut(i);
            let prev = &a[i - 1];
            let cur = &mut b[0];
            if prev.method != cur.method || prev.k != cur.k || prev.ra != cur.ra {
                continue;
            }
            cur.order_u = observed_order(prev.h, cur.h, prev.err_u_l2, cur.err_u_l2);
            cur.order_eps = observed_order(prev.h, cur.h, prev.err_eps, cur.err_eps);
            cur.order_p = observed_order(prev.h, cur.h, prev.err_p, cur.err_p);
            cur.order_p_reduced = match (prev.err_p_reduced, cur.err_p_reduced) {
                (Some(x), Some(y)) => observed_order(prev.h, cur.h, x, y),
                _ => None,
            };
        }
    }

    pub const CSV_HEADER: &'static str =
        "method,k,level,cells,h,err_u_L2,err_eps,err_p,err_p_reduced,\
order_u,order_eps,order_p,order_p_reduced,ra,err_p_flipped";

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6e}")).unwrap_or_default();
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{:.6e},{:.6e},{:.6e},{:.6e},{},{},{},{},{},{},{}",
                r.method,
                r.k,
                r.level,
                r.cells,
                r.h,
                r.err_u_l2,
                r.err_eps,
                r.err_p,
                opt(r.err_p_reduced),
                opt(r.order_u),
                opt(r.order_eps),
                opt(r.order_p),
                opt(r.order_p_reduced),
                opt(r.ra),
                opt(r.err_p_flipped),
            );
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }

    /// Plain-text table with an order row under each error row.
    pub fn format_table(&self) -> String {
        let mut s = String::new();
        let cells: Vec<String> = self.rows.iter().map(|r| r.cells.to_string()).collect();
        let _ = writeln!(
            s,
            "{:<24}| {}",
            "#cells",
            cells
                .iter()
                .map(|c| format!("{c:>10}"))
                .collect::<Vec<_>>()
                .join(" | ")
        );
        let mut block = |label: &str,
                         err: &dyn Fn(&ErrorRow) -> Option<f64>,
                         ord: &dyn Fn(&ErrorRow) -> Option<f64>| {
            if self.rows.iter().all(|r| err(r).is_none()) {
                return;
            }
            let e: Vec<String> = self
                .rows
                .iter()
                .map(|r| {
                    err(r)
                        .map(|v| format!("{v:>10.4e}"))
                        .unwrap_or_else(|| format!("{:>10}", "--"))
                })
                .collect();
            let o: Vec<String> = self
                .rows
                .iter()
                .map(|r| {
                    ord(r)
                        .map(|v| format!("{v:>10.2}"))
                        .unwrap_or_else(|| format!("{:>10}", "--"))
                })
                .collect();
            let _ = writeln!(s, "{label:<24}| {}", e.join(" | "));
            let _ = writeln!(s, "{:<24}| {}", "  order", o.join(" | "));
        };
        block("|u - Pi u_h|", &|r| Some(r.err_u_l2), &|r| r.order_u);
        block("|p - p~_h|", &|r| r.err_p_reduced, &|r| r.order_p_reduced);
        block("|eps(u) - eps(Pi u_h)|", &|r| Some(r.err_eps), &|r| {
            r.order_eps
        });
        block("|p - p_h|", &|r| Some(r.err_p), &|r| r.order_p);
        s
    }
}

fn l2_norm_sq<F>(disc: &Discretization, degree: usize, f: F) -> f64
where
    F: Fn(usize, Point) -> f64 + Sync,
{
    disc.elements
        .par_iter()
        .enumerate()
        .map(|(c, el)| {
            let q = cell_quadrature(&el.cell, degree).expect("supported degree");
            q.integrate(|x| f(c, x))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum()
}

/// Broken L² errors of the projected velocity, its symmetric gradient and
/// the pressure. The exact pressure is shifted to zero mean first.
pub fn error_norms(
    disc: &Discretization,
    sol: &DiscreteSolution,
    exact: &Manufactured,
) -> ErrorRow {
    let deg = 2 * disc.k + 6;
    let area = disc.mesh.total_area();
    let p_mean = l2_norm_sq(disc, deg, |_, x| exact.p(x)) / area;
    let err_u = l2_norm_sq(disc, deg, |c, x| {
        let v = disc.elements[c].eval_vector(sol.projection[c].as_slice(), x);
        let u = exact.u(x);
        (u[0] - v[0]).powi(2) + (u[1] - v[1]).powi(2)
    });
    let err_eps = l2_norm_sq(disc, deg, |c, x| {
        let e = disc.elements[c].eval_eps(sol.projection[c].as_slice(), x);
        let ex = exact.eps(x);
        (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| (ex[i][j] - e[i][j]).powi(2))
            .sum()
    });
    let pressure_at = |c: usize, x: Point| {
        let pb = disc.elements[c].basis_of(disc.k - 1);
        pb.eval_poly(sol.pressure[c].as_slice(), x)
    };
    let err_p = l2_norm_sq(disc, deg, |c, x| {
        (exact.p(x) - p_mean - pressure_at(c, x)).powi(2)
    });
    let err_p_reduced = sol
        .pressure_reduced
        .as_ref()
        .map(|p0| l2_norm_sq(disc, deg, |c, x| (exact.p(x) - p_mean - p0[c]).powi(2)).sqrt());
    ErrorRow {
        method: sol.method.to_string(),
        k: disc.k,
        cells: disc.n_cells(),
        h: disc.mesh.h_max(),
        err_u_l2: err_u.sqrt(),
        err_eps: err_eps.sqrt(),
        err_p: err_p.sqrt(),
        err_p_reduced,
        ..Default::default()
    }
}

/// `‖p + p_h‖` with `p` shifted to zero mean.
pub fn flipped_pressure_error(
    disc: &Discretization,
    sol: &DiscreteSolution,
    exact: &Manufactured,
) -> f64 {
    let deg = 2 * disc.k + 6;
    let p_mean = l2_norm_sq(disc, deg, |_, x| exact.p(x)) / disc.mesh.total_area();
    l2_norm_sq(disc, deg, |c, x| {
        let ph = disc.elements[c]
            .basis_of(disc.k - 1)
            .eval_poly(sol.pressure[c].as_slice(), x);
        (exact.p(x) - p_mean + ph).powi(2)
    })
    .sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Example {
    Noflow,
    Lshape,
    Patch,
    Custom,
}

impl std::str::FromStr for Example {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noflow" => Ok(Example::Noflow),
            "lshape" => Ok(Example::Lshape),
            "patch" => Ok(Example::Patch),
            "custom" => Ok(Example::Custom),
            _ => Err(Error::InvalidArgument(format!("unknown example '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshKind {
    Tri,
    Hex,
}

impl std::str::FromStr for MeshKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tri" => Ok(MeshKind::Tri),
            "hex" => Ok(MeshKind::Hex),
            _ => Err(Error::InvalidArgument(format!("unknown mesh kind '{s}'"))),
        }
    }
}

/// Settings shared by the example drivers.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub method: Method,
    pub k: usize,
    pub levels: usize,
    /// Subdivisions of the coarsest level; doubled per level.
    pub n0: usize,
    pub mesh: MeshKind,
    pub ra: Vec<f64>,
    pub nu: f64,
    pub solver: SolverKind,
    pub mesh_file: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            method: Method::Standard,
            k: 2,
            levels: 4,
            n0: 4,
            mesh: MeshKind::Tri,
            ra: vec![1.0],
            nu: 1.0,
            solver: SolverKind::Direct,
            mesh_file: None,
        }
    }
}

/// Mesh of level `level` for an example.
pub fn level_mesh(example: Example, cfg: &RunConfig, level: usize) -> Result<PolyMesh> {
    let n = cfg.n0 << level;
    match (example, cfg.mesh) {
        (Example::Lshape, MeshKind::Tri) => mesh::lshape(n, CellKind::Triangles),
        (Example::Lshape, MeshKind::Hex) => mesh::lshape(n, CellKind::Polygons),
        (_, MeshKind::Tri) => mesh::uniform_triangles(n, n, Rect::UNIT),
        (_, MeshKind::Hex) => mesh::hex_dominant(n, Rect::UNIT),
    }
}

fn solve_row(
    mesh: &PolyMesh,
    cfg: &RunConfig,
    exact: &Manufactured,
    dirichlet: bool,
    level: usize,
) -> Result<ErrorRow> {
    let disc = Discretization::new(mesh, cfg.k)?;
    let f = |x: Point| exact.f(x);
    let g = |x: Point| exact.u(x);
    let bc: Option<&(dyn Fn(Point) -> [f64; 2] + Sync)> = if dirichlet { Some(&g) } else { None };
    let sol = solve_method(&disc, cfg.method, exact.nu, &f, bc, cfg.solver)?;
    let mut row = error_norms(&disc, &sol, exact);
    row.level = level;
    log::info!(
        "{} {} k={} level={} cells={} eps-err={:.3e} p-err={:.3e}",
        exact.name,
        cfg.method,
        cfg.k,
        level,
        row.cells,
        row.err_eps,
        row.err_p
    );
    Ok(row)
}

fn run_levels(
    example: Example,
    cfg: &RunConfig,
    exact: &Manufactured,
    dirichlet: bool,
) -> Result<ErrorReport> {
    let mut report = ErrorReport::default();
    if let Some(path) = &cfg.mesh_file {
        let mesh = PolyMesh::load(path)?;
        report
            .rows
            .push(solve_row(&mesh, cfg, exact, dirichlet, 0)?);
    } else {
        for level in 0..cfg.levels {
            let mesh = level_mesh(example, cfg, level)?;
            report
                .rows
                .push(solve_row(&mesh, cfg, exact, dirichlet, level)?);
        }
    }
    report.compute_orders();
    Ok(report)
}

/// Example 6.1 style sweep: one row per (Ra, level).
pub fn run_example_noflow(cfg: &RunConfig) -> Result<ErrorReport> {
    if cfg.method == Method::Reduced {
        return Err(Error::InvalidArgument(
            "noflow runs the standard or robust method".into(),
        ));
    }
    let mut report = ErrorReport::default();
    for &ra in &cfg.ra {
        let exact = Manufactured::noflow(ra, cfg.nu);
        for level in 0..cfg.levels {
            let mesh = match &cfg.mesh_file {
                Some(p) if level == 0 => PolyMesh::load(p)?,
                Some(_) => break,
                None => level_mesh(Example::Noflow, cfg, level)?,
            };
            let disc = Discretization::new(&mesh, cfg.k)?;
            let f = |x: Point| exact.f(x);
            let sol = solve_method(&disc, cfg.method, cfg.nu, &f, None, cfg.solver)?;
            let mut row = error_norms(&disc, &sol, &exact);
            row.level = level;
            row.ra = Some(ra);
            row.err_p_flipped = Some(flipped_pressure_error(&disc, &sol, &exact));
            report.rows.push(row);
        }
    }
    report.compute_orders();
    Ok(report)
}

/// Smooth solution on the L-shaped domain.
pub fn run_example_lshape(cfg: &RunConfig) -> Result<ErrorReport> {
    run_levels(Example::Lshape, cfg, &Manufactured::lshape(cfg.nu), false)
}

/// Smooth solution on the unit square (or a mesh file of it).
pub fn run_example_custom(cfg: &RunConfig) -> Result<ErrorReport> {
    run_levels(Example::Custom, cfg, &Manufactured::square(cfg.nu), false)
}

/// Polynomial pair with exact Dirichlet data.
pub fn run_example_patch(cfg: &RunConfig) -> Result<ErrorReport> {
    run_levels(
        Example::Patch,
        cfg,
        &Manufactured::patch(cfg.k, cfg.nu)?,
        true,
    )
}

pub fn run_example(example: Example, cfg: &RunConfig) -> Result<ErrorReport> {
    match example {
        Example::Noflow => run_example_noflow(cfg),
        Example::Lshape => run_example_lshape(cfg),
        Example::Patch => run_example_patch(cfg),
        Example::Custom => run_example_custom(cfg),
    }
}

/// Differences between the reduced and the full method on one mesh.
#[derive(Clone, Copy, Debug)]
pub struct Equivalence {
    /// Max-norm difference of the velocity DoF vectors.
    pub velocity: f64,
    /// `‖p̃_h - Q⁰ p_h‖₀`.
    pub pressure_reduced: f64,
    /// `‖p_h^rec - p_h‖₀`.
    pub pressure: f64,
}

pub fn reduced_equivalence(
    mesh: &PolyMesh,
    k: usize,
    exact: &Manufactured,
    dirichlet: bool,
    solver: SolverKind,
) -> Result<Equivalence> {
    let disc = Discretization::new(mesh, k)?;
    let f = |x: Point| exact.f(x);
    let g = |x: Point| exact.u(x);
    let bc: Option<&(dyn Fn(Point) -> [f64; 2] + Sync)> = if dirichlet { Some(&g) } else { None };
    let full = solve_method(&disc, Method::Standard, exact.nu, &f, bc, solver)?;
    let red = solve_method(&disc, Method::Reduced, exact.nu, &f, bc, solver)?;
    let velocity = full
        .velocity
        .iter()
        .zip(&red.velocity)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let means = full.pressure_cell_means(&disc);
    let p0 = red.pressure_reduced.as_ref().expect("reduced solve");
    let pressure_reduced = disc
        .elements
        .iter()
        .enumerate()
        .map(|(c, el)| (means[c] - p0[c]).powi(2) * el.area())
        .sum::<f64>()
        .sqrt();
    let pressure = l2_norm_sq(&disc, 2 * k + 2, |c, x| {
        let pb = disc.elements[c].basis_of(k - 1);
        (pb.eval_poly(full.pressure[c].as_slice(), x) - pb.eval_poly(red.pressure[c].as_slice(), x))
            .powi(2)
    })
    .sqrt();
    Ok(Equivalence {
        velocity,
        pressure_reduced,
        pressure,
    })
}

/// Outcome of one acceptance check.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Whether the last two observed orders lie within `target ± 0.25`.
pub fn orders_pass(orders: &[Option<f64>], target: f64) -> bool {
    let known: Vec<f64> = orders.iter().flatten().copied().collect();
    known.len() >= 2
        && known[known.len() - 2..]
            .iter()
            .all(|o| (o - target).abs() <= 0.25)
}

fn fmt_orders(orders: &[Option<f64>]) -> String {
    orders
        .iter()
        .map(|o| o.map(|v| format!("{v:.2}")).unwrap_or_else(|| "--".into()))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Checks for a finished run.
pub fn check_report(
    example: Example,
    method: Method,
    k: usize,
    report: &ErrorReport,
) -> Vec<Check> {
    let mut out = Vec::new();
    match example {
        Example::Patch => {
            let worst = report
                .rows
                .iter()
                .map(|r| r.err_u_l2.max(r.err_eps).max(r.err_p))
                .fold(0.0, f64::max);
            out.push(Check {
                name: "patch reproduction".into(),
                pass: worst < 1e-9,
                detail: format!("max error {worst:.3e}"),
            });
        }
        Example::Noflow => {
            if method == Method::Robust {
                let worst = report.rows.iter().map(|r| r.err_eps).fold(0.0, f64::max);
                out.push(Check {
                    name: "robust velocity error".into(),
                    pass: worst < 1e-7,
                    detail: format!("max eps-error {worst:.3e}"),
                });
            } else {
                let mut worst: f64 = 0.0;
                for a in &report.rows {
                    for b in &report.rows {
                        if a.level == b.level
                            && a.ra.unwrap_or(0.0) > 0.0
                            && b.ra.unwrap_or(0.0) > a.ra.unwrap_or(0.0)
                        {
                            let expect = b.ra.unwrap() / a.ra.unwrap();
                            worst = worst.max(((b.err_eps / a.err_eps) / expect - 1.0).abs());
                        }
                    }
                }
                out.push(Check {
                    name: "standard error linear in Ra".into(),
                    pass: worst < 0.01,
                    detail: format!("max relative deviation {worst:.3e}"),
                });
            }
        }
        Example::Lshape | Example::Custom => {
            let eps: Vec<_> = report.rows.iter().map(|r| r.order_eps).collect();
            let p: Vec<_> = report.rows.iter().map(|r| r.order_p).collect();
            let target = k as f64;
            out.push(Check {
                name: "eps-error order".into(),
                pass: orders_pass(&eps, target),
                detail: fmt_orders(&eps),
            });
            out.push(Check {
                name: "pressure order".into(),
                pass: orders_pass(&p, target),
                detail: fmt_orders(&p),
            });
            if method == Method::Reduced {
                let pr: Vec<_> = report.rows.iter().map(|r| r.order_p_reduced).collect();
                out.push(Check {
                    name: "reduced pressure order".into(),
                    pass: orders_pass(&pr, 1.0),
                    detail: fmt_orders(&pr),
                });
            }
        }
    }
    out
}
