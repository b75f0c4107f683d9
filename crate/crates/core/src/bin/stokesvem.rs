use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use stokesvem::harness::{self, check_report, Example, MeshKind, RunConfig};
use stokesvem::system::{Method, SolverKind};

/// Divergence-free nonconforming VEM for 2D Stokes flow.
#[derive(Parser, Debug)]
#[command(name = "stokesvem", version)]
struct Args {
    /// noflow | lshape | patch | custom
    #[arg(long, default_value = "lshape")]
    example: Example,
    /// standard | robust | reduced
    #[arg(long, default_value = "standard")]
    method: Method,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 4)]
    levels: usize,
    /// Subdivisions of the coarsest mesh; doubled per level.
    #[arg(long, default_value_t = 4)]
    n0: usize,
    /// Comma-separated Ra values for the noflow example.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    ra: Vec<f64>,
    /// tri | hex
    #[arg(long, default_value = "tri")]
    mesh: MeshKind,
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Single mesh in JSON form, used instead of the generated sequence.
    #[arg(long)]
    mesh_file: Option<PathBuf>,
    /// Preconditioned MINRES instead of the sparse direct solver.
    #[arg(long)]
    minres: bool,
    /// Run the acceptance checks for the example; exit code 2 on failure.
    #[arg(long)]
    check: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let cfg = RunConfig {
        method: args.method,
        k: args.k,
        levels: args.levels,
        n0: args.n0,
        mesh: args.mesh,
        ra: args.ra,
        nu: args.nu,
        solver: if args.minres {
            SolverKind::Minres
        } else {
            SolverKind::Direct
        },
        mesh_file: args.mesh_file,
    };
    let report = match harness::run_example(args.example, &cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    print!("{}", report.format_table());
    if let Some(path) = &args.out {
        if let Err(e) = report.write_csv(path) {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    if args.example == Example::Noflow {
        for r in &report.rows {
            let (a, b) = (r.err_p, r.err_p_flipped.unwrap_or(f64::NAN));
            let small = if a <= b { "p - p_h" } else { "p + p_h" };
            println!(
                "Ra={:e} level={}: |p - p_h|={a:.3e} |p + p_h|={b:.3e} ({small} is small)",
                r.ra.unwrap_or(0.0),
                r.level
            );
        }
    }
    if args.check {
        let checks = check_report(args.example, cfg.method, cfg.k, &report);
        let mut ok = true;
        for c in &checks {
            println!(
                "[{}] {}: {}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            );
            ok &= c.pass;
        }
        if !ok {
            return ExitCode::from(2);
        }
    }
    ExitCode::SUCCESS
}
