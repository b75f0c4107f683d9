//! Acceptance suite: one `[PASS]`/`[FAIL]` line per criterion.

mod common;

use std::time::{Duration, Instant};

use nalgebra::DVector;
use stokesvem::element::Element;
use stokesvem::harness::{
    self, orders_pass, reduced_equivalence, run_example_custom, run_example_lshape,
    run_example_noflow, run_example_patch, Manufactured, MeshKind, RunConfig,
};
use stokesvem::linalg::numeric_rank;
use stokesvem::mesh::{self, CellKind, PolyMesh, Rect};
use stokesvem::rt::rt_interp_for;
use stokesvem::system::{Discretization, Method, SolverKind};

struct Outcome {
    pass: bool,
    detail: String,
}

fn run(id: &str, title: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let out = f();
    let dt = t.elapsed();
    let in_time = dt <= budget;
    let pass = out.pass && in_time;
    println!(
        "[{}] {id} {title}: {} ({:.1}s of {}s){}",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        dt.as_secs_f64(),
        budget.as_secs(),
        if in_time { "" } else { " over time budget" }
    );
    pass
}

fn random(n: usize, seed: u64) -> DVector<f64> {
    DVector::from_vec(common::random_vector(n, seed))
}

fn ac1() -> Outcome {
    let meshes = [
        mesh::uniform_triangles(6, 6, Rect::UNIT).unwrap(),
        mesh::hex_dominant(4, Rect::UNIT).unwrap(),
        mesh::lshape(2, CellKind::Triangles).unwrap(),
        mesh::lshape(2, CellKind::Polygons).unwrap(),
    ];
    let (mut cells, mut repro, mut comm, mut bad_kernel) = (0, 0.0f64, 0.0f64, 0);
    for m in &meshes {
        for c in 0..m.num_cells() {
            cells += 1;
            for k in 2..=3 {
                let el = Element::new(m.geometry(c), k).unwrap();
                let id = nalgebra::DMatrix::<f64>::identity(2 * el.n_poly(), 2 * el.n_poly());
                repro = repro.max((&el.pack.pi_star * &el.dmat - id).amax());
                let x = random(el.n_dofs(), (c * 7 + k) as u64);
                let lhs = el.div_coefficients((&el.pack.pi_star * &x).as_slice());
                let rhs = &el.pack.div * &x;
                comm = comm.max((lhs - &rhs).amax() / rhs.amax().max(1.0));
                let a = el.local_matrices().a;
                if el.n_dofs() - numeric_rank(&a, 1e-10) != 3 {
                    bad_kernel += 1;
                }
            }
        }
    }
    Outcome {
        pass: cells >= 100 && repro < 1e-10 && comm < 1e-10 && bad_kernel == 0,
        detail: format!(
            "{cells} cells, k=2,3: reproduction {repro:.1e}, div-commutation {comm:.1e}, kernel deficiency != 3 on {bad_kernel} cells"
        ),
    }
}

fn ac2() -> Outcome {
    let mut worst = 0.0f64;
    let mut runs = 0;
    for mesh in [MeshKind::Tri, MeshKind::Hex] {
        for k in 2..=3 {
            for method in [Method::Standard, Method::Robust, Method::Reduced] {
                let cfg = RunConfig {
                    k,
                    levels: 2,
                    n0: 2,
                    mesh,
                    method,
                    ..Default::default()
                };
                let rep = run_example_patch(&cfg).unwrap();
                for r in &rep.rows {
                    worst = worst.max(r.err_u_l2).max(r.err_eps).max(r.err_p);
                    runs += 1;
                }
            }
        }
    }
    Outcome {
        pass: worst < 1e-9,
        detail: format!("{runs} solves, max error {worst:.1e}"),
    }
}

fn fmt(o: &[Option<f64>]) -> String {
    o.iter()
        .map(|v| v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "--".into()))
        .collect::<Vec<_>>()
        .join(" ")
}

fn ac3() -> Outcome {
    let cfg = RunConfig {
        levels: 4,
        n0: 4,
        ..Default::default()
    };
    let sq = run_example_custom(&cfg).unwrap();
    let ls = run_example_lshape(&RunConfig {
        method: Method::Reduced,
        ..cfg
    })
    .unwrap();
    let col = |rep: &harness::ErrorReport,
               f: fn(&harness::ErrorRow) -> Option<f64>|
     -> Vec<Option<f64>> { rep.rows.iter().map(f).collect() };
    let (se, sp) = (col(&sq, |r| r.order_eps), col(&sq, |r| r.order_p));
    let (le, lp, lr) = (
        col(&ls, |r| r.order_eps),
        col(&ls, |r| r.order_p),
        col(&ls, |r| r.order_p_reduced),
    );
    let pass = orders_pass(&se, 2.0)
        && orders_pass(&sp, 2.0)
        && orders_pass(&le, 2.0)
        && orders_pass(&lp, 2.0)
        && orders_pass(&lr, 1.0);
    Outcome {
        pass,
        detail: format!(
            "square eps [{}] p [{}]; L-shape eps [{}] p [{}] p~ [{}]",
            fmt(&se),
            fmt(&sp),
            fmt(&le),
            fmt(&lp),
            fmt(&lr)
        ),
    }
}

fn ac4() -> Outcome {
    let ras = vec![1.0, 1e2, 1e4, 1e6];
    let base = RunConfig {
        levels: 1,
        n0: 16,
        ra: ras.clone(),
        ..Default::default()
    };
    let robust = run_example_noflow(&RunConfig {
        method: Method::Robust,
        ..base.clone()
    })
    .unwrap();
    let standard = run_example_noflow(&RunConfig {
        method: Method::Standard,
        ..base
    })
    .unwrap();
    let worst_robust = robust.rows.iter().map(|r| r.err_eps).fold(0.0, f64::max);
    let mut worst_lin = 0.0f64;
    for w in standard.rows.windows(2) {
        let expect = w[1].ra.unwrap() / w[0].ra.unwrap();
        worst_lin = worst_lin.max((w[1].err_eps / w[0].err_eps / expect - 1.0).abs());
    }
    let sign_ok = robust
        .rows
        .iter()
        .all(|r| r.err_p < r.err_p_flipped.unwrap());
    Outcome {
        pass: worst_robust < 1e-7 && worst_lin < 0.01 && standard.rows[0].err_eps > 0.0 && sign_ok,
        detail: format!(
            "robust max eps-error {worst_robust:.1e}; standard eps-error {:.3e} at Ra=1, linearity deviation {worst_lin:.1e}; corrected pressure sign {}",
            standard.rows[0].err_eps,
            if sign_ok { "confirmed" } else { "NOT confirmed" }
        ),
    }
}

fn ac5() -> Outcome {
    let cases: Vec<(&str, PolyMesh, bool)> = vec![
        (
            "tri4",
            mesh::uniform_triangles(4, 4, Rect::UNIT).unwrap(),
            false,
        ),
        (
            "tri8",
            mesh::uniform_triangles(8, 8, Rect::UNIT).unwrap(),
            false,
        ),
        (
            "tri16",
            mesh::uniform_triangles(16, 16, Rect::UNIT).unwrap(),
            false,
        ),
        ("hex4", mesh::hex_dominant(4, Rect::UNIT).unwrap(), false),
        ("hex8", mesh::hex_dominant(8, Rect::UNIT).unwrap(), false),
        (
            "lshape-tri4",
            mesh::lshape(4, CellKind::Triangles).unwrap(),
            true,
        ),
        (
            "lshape-poly4",
            mesh::lshape(4, CellKind::Polygons).unwrap(),
            true,
        ),
    ];
    let (mut du, mut dp0, mut dp) = (0.0f64, 0.0f64, 0.0f64);
    let mut n = 0;
    for (_, m, lshape) in &cases {
        for k in 2..=3 {
            let ex = if *lshape {
                Manufactured::lshape(1.0)
            } else {
                Manufactured::square(1.0)
            };
            let e = reduced_equivalence(m, k, &ex, false, SolverKind::Direct).unwrap();
            du = du.max(e.velocity);
            dp0 = dp0.max(e.pressure_reduced);
            dp = dp.max(e.pressure);
            n += 1;
        }
    }
    // Patch meshes with Dirichlet data as well.
    for kind in [MeshKind::Tri, MeshKind::Hex] {
        for k in 2..=3 {
            let cfg = RunConfig {
                k,
                n0: 2,
                mesh: kind,
                ..Default::default()
            };
            for level in 0..2 {
                let m = harness::level_mesh(harness::Example::Patch, &cfg, level).unwrap();
                let e = reduced_equivalence(
                    &m,
                    k,
                    &Manufactured::patch(k, 1.0).unwrap(),
                    true,
                    SolverKind::Direct,
                )
                .unwrap();
                du = du.max(e.velocity);
                dp0 = dp0.max(e.pressure_reduced);
                dp = dp.max(e.pressure);
                n += 1;
            }
        }
    }
    Outcome {
        pass: du < 1e-9 && dp0 < 1e-9 && dp < 1e-8,
        detail: format!("{n} mesh/degree pairs: velocity {du:.1e}, cell-mean pressure {dp0:.1e}, recovered pressure {dp:.1e}"),
    }
}

fn ac6() -> Outcome {
    let m = mesh::hex_dominant(6, Rect::UNIT).unwrap();
    let mut worst = 0.0f64;
    for k in 2..=3 {
        let d = Discretization::new(&m, k).unwrap();
        let interps: Vec<_> = d
            .elements
            .iter()
            .map(|el| rt_interp_for(el).unwrap())
            .collect();
        for s in 0..50 {
            let v = common::random_vector(d.n_velocity(), 1000 + s);
            for (c, el) in d.elements.iter().enumerate() {
                let x = d.cell_dofs(c, &v);
                let div = &el.pack.div * &x;
                for t in 0..interps[c].space.n_triangles() {
                    let a = interps[c].triangle_coeffs(&x, t);
                    let got = el.div_coefficients(a.as_slice());
                    worst = worst.max((got - &div).amax() / div.amax().max(1.0));
                }
            }
        }
    }
    Outcome {
        pass: worst < 1e-10,
        detail: format!(
            "{} cells, 50 vectors, k=2,3: max residual {worst:.1e}",
            m.num_cells()
        ),
    }
}

fn ac7() -> Outcome {
    let fx = common::load_fixtures();
    let mut fails = common::check_oracles_against_fixtures(&fx);
    fails.extend(common::check_library_against_fixtures(&fx));
    Outcome {
        pass: fails.is_empty(),
        detail: if fails.is_empty() {
            format!(
                "{} frozen oracle fixtures reproduced by oracles and library",
                fx.len()
            )
        } else {
            fails.join("; ")
        },
    }
}

fn main() {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .try_init();
    let s = Duration::from_secs;
    let results = [
        run("AC1", "projector identities", s(10), ac1),
        run("AC2", "patch test", s(10), ac2),
        run("AC3", "convergence orders", s(120), ac3),
        run("AC4", "pressure robustness", s(30), ac4),
        run("AC5", "reduced-method equivalence", s(60), ac5),
        run("AC6", "RT commutation", s(60), ac6),
        run("AC7", "oracle fixtures", s(60), ac7),
    ];
    let failed = results.iter().filter(|&&p| !p).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
