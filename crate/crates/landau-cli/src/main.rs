use std::error::Error;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use landau::diagnostics::functionals;
use landau::grid::{DistributionField, VelocityGrid};
use landau::integrator::{self_convergence_orders, time_ladder, SnapshotPolicy};
use landau::io::{write_dump_file, DiagnosticsCsv};
use landau::operator::equilibrium_residual;
use landau::scenario::{load_config, run_scenario, InitialDatum, ScenarioConfig};
use landau::theory_checks::{build_mollifier, coefficient_derivative_probe, verify_lemma21, verify_mollifier_bounds};

type CliResult<T> = std::result::Result<T, Box<dyn Error>>;

#[derive(Parser)]
#[command(name = "landau", version, about = "Spatially homogeneous Landau equation solver and estimate checks")]
struct Cli {
    /// Worker threads for the numerical kernels (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutDir {
    /// Directory for CSV reports and dumps
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write diagnostics.csv (plus optional field dumps)
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: OutDir,
        /// none, all, or every:k (every k-th diagnostics record)
        #[arg(long, default_value = "none")]
        snapshots: SnapshotPolicy,
    },
    /// Exact check of both shell sums against 24
    CheckLemmas {
        #[arg(long, default_value_t = 60)]
        max_exhaustive: u32,
        #[arg(long, default_value_t = 10_000)]
        max_shell: u32,
        #[command(flatten)]
        out: OutDir,
    },
    /// Build the iterated-convolution cutoffs and bound their derivatives
    CheckMollifier {
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5")]
        orders: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        lambda_max: u32,
        /// Sample spacing; defaults to 1/(8N) per order
        #[arg(long)]
        h: Option<f64>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Derivative growth of the convolved coefficients
    CheckCoefficients {
        /// Take γ, grid and datum from a scenario instead of the Maxwellian defaults
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 32)]
        n: usize,
        #[arg(long = "V", default_value_t = 8.0)]
        half_width: f64,
        #[arg(long, default_value_t = 4)]
        beta_max: u32,
        /// Constant B in the G bracket
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        /// Largest admitted ratio between per-order constants (γ > 0)
        #[arg(long, default_value_t = 10.0)]
        max_spread: f64,
        /// Largest admitted R(|β| ≥ 3) / R(|β| = 2) (γ = 0)
        #[arg(long, default_value_t = 1e-8)]
        quadratic_tol: f64,
        #[command(flatten)]
        out: OutDir,
    },
    /// Residual of both operator forms on the Maxwellian at two resolutions
    EquilibriumResidual {
        #[arg(long, default_value_t = 16)]
        coarse: usize,
        #[arg(long, default_value_t = 32)]
        fine: usize,
        #[arg(long = "V", default_value_t = 8.0)]
        half_width: f64,
        #[arg(long, value_delimiter = ',', default_value = "0,1")]
        gamma: Vec<f64>,
        /// Largest admitted residual on the fine grid
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[command(flatten)]
        out: OutDir,
    },
    /// Repeat a scenario over step-size or grid refinements and estimate orders
    ConvergenceLadder {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = Axis::Dt)]
        axis: Axis,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        /// Steps on the coarsest rung (dt axis); defaults to the stability limit at t = 0
        #[arg(long)]
        base_steps: Option<usize>,
        /// Fail unless every observed order is within 20% of this value
        #[arg(long)]
        expect_order: Option<f64>,
        #[command(flatten)]
        out: OutDir,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Axis {
    Dt,
    N,
}

/// Collects named pass/fail outcomes; the process exits nonzero if any failed.
#[derive(Default)]
struct Verdict {
    failed: Vec<String>,
}

impl Verdict {
    fn check(&mut self, name: impl Into<String>, ok: bool) {
        let name = name.into();
        println!("{} {name}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed.push(name);
        }
    }
}

fn create(out: &Path, name: &str) -> CliResult<BufWriter<File>> {
    fs::create_dir_all(out)?;
    Ok(BufWriter::new(File::create(out.join(name))?))
}

fn run(config: &Path, out: &Path, snapshots: SnapshotPolicy) -> CliResult<Verdict> {
    let (cfg, base) = load_config(config)?;
    fs::create_dir_all(out)?;
    let mut csv = DiagnosticsCsv::create(&out.join("diagnostics.csv"))?;
    let mut dumps = 0usize;
    let state = run_scenario(&cfg, &base, snapshots, |rec, snap| {
        csv.write(rec)?;
        if let Some(f) = snap {
            write_dump_file(&out.join(format!("snapshot_{dumps:05}.bin")), rec.t, f)?;
            dumps += 1;
        }
        Ok(())
    })?;
    println!(
        "t = {} after {} steps ({} clipped), {} snapshots in {}",
        state.t,
        state.step_count,
        state.clipped_steps,
        dumps,
        out.display()
    );
    Ok(Verdict::default())
}

fn check_lemmas(max_exhaustive: u32, max_shell: u32, out: &Path) -> CliResult<Verdict> {
    let rep = verify_lemma21(max_exhaustive, max_shell)?;
    rep.write_csv(create(out, "shell_sums.csv")?)?;
    println!(
        "{} multi-indices checked exactly, shells to {}; largest sums {:.6} and {:.6}",
        rep.multi_indices_checked, rep.max_shell, rep.max_value[0], rep.max_value[1]
    );
    let mut v = Verdict::default();
    v.check("both sums stay at or below 24", !rep.exceeded);
    v.check("shell sums dominate restricted sums", !rep.shell_below_restricted);
    Ok(v)
}

fn check_mollifier(orders: &[usize], lambda_max: u32, h: Option<f64>, out: &Path) -> CliResult<Verdict> {
    let mut v = Verdict::default();
    let mut w = csv::Writer::from_writer(create(out, "mollifier_invariants.csv")?);
    w.write_record(["N", "h", "min", "max", "center", "plateau_error", "outside_max", "integral"])?;
    for &order in orders {
        let h = h.unwrap_or(1.0 / (8.0 * order as f64));
        let psi = build_mollifier(order, h)?;
        let inv = psi.invariants();
        w.write_record(
            [order as f64, h, inv.min, inv.max, inv.center, inv.plateau_error, inv.outside_max, inv.integral].map(|x| x.to_string()),
        )?;
        v.check(format!("N={order}: plateau, support and range invariants"), inv.hold());
        let rep = verify_mollifier_bounds(&psi, lambda_max);
        rep.write_csv(create(out, &format!("mollifier_N{order}.csv"))?)?;
        for r in &rep.rows {
            v.check(
                format!("N={order} |λ|={}: sup {:.4e} vs (LN)^k {:.4e}, ratio {:.4}", r.derivative_order, r.sup, r.bound, r.ratio),
                r.pass,
            );
        }
    }
    w.flush()?;
    Ok(v)
}

#[allow(clippy::too_many_arguments)]
fn check_coefficients(
    config: Option<&Path>,
    gamma: f64,
    n: usize,
    half_width: f64,
    beta_max: u32,
    b: f64,
    max_spread: f64,
    quadratic_tol: f64,
    out: &Path,
) -> CliResult<Verdict> {
    let (f, gamma) = match config {
        Some(path) => {
            let (cfg, base) = load_config(path)?;
            (cfg.initial_field(&base)?, cfg.gamma)
        }
        None => {
            let grid = VelocityGrid::new(n, half_width)?;
            let datum = InitialDatum::Maxwellian {
                mass: 1.0,
                velocity: [0.0; 3],
                temperature: 1.0,
            };
            (datum.discretize(grid, Path::new("."))?, gamma)
        }
    };
    let rep = coefficient_derivative_probe(&f, gamma, beta_max, b)?;
    rep.write_csv(create(out, "coefficients.csv")?)?;
    let mut v = Verdict::default();
    for (k, c) in rep.abar_order_constants() {
        println!("|β| = {k}: fitted constant {c:.4e}");
    }
    if gamma == 0.0 {
        let scale = rep.max_r_abar(2);
        let worst = (3..=beta_max).map(|k| rep.max_r_abar(k)).fold(0.0, f64::max) / scale;
        v.check(format!("γ = 0: higher derivatives of ā vanish ({worst:.3e} ≤ {quadratic_tol:e})"), worst <= quadratic_tol);
    } else {
        let spread = rep.abar_spread(2, beta_max);
        v.check(format!("fitted constants within a factor {max_spread} (spread {spread:.3})"), spread <= max_spread);
    }
    v.check("all fitted constants finite", rep.rows.iter().all(|r| r.c_abar.is_finite() && r.c_cbar.is_finite()));
    Ok(v)
}

fn equilibrium(coarse: usize, fine: usize, half_width: f64, gammas: &[f64], tol: f64, out: &Path) -> CliResult<Verdict> {
    let mut w = csv::Writer::from_writer(create(out, "equilibrium_residual.csv")?);
    w.write_record(["gamma", "n", "nondivergence", "divergence"])?;
    let mut v = Verdict::default();
    for &gamma in gammas {
        let c = equilibrium_residual(VelocityGrid::new(coarse, half_width)?, gamma)?;
        let f = equilibrium_residual(VelocityGrid::new(fine, half_width)?, gamma)?;
        for r in [&c, &f] {
            w.write_record([gamma.to_string(), r.n.to_string(), format!("{:e}", r.nondivergence), format!("{:e}", r.divergence)])?;
        }
        for (form, a, b) in [("nondivergence", c.nondivergence, f.nondivergence), ("divergence", c.divergence, f.divergence)] {
            v.check(format!("γ = {gamma} {form}: {a:.3e} at n={coarse} → {b:.3e} at n={fine} decreases"), b < a);
            v.check(format!("γ = {gamma} {form}: {b:.3e} ≤ {tol:e} at n={fine}"), b <= tol);
        }
    }
    w.flush()?;
    Ok(v)
}

/// Samples a field onto a grid with twice the spacing and the same box.
fn restrict(f: &DistributionField, coarse: VelocityGrid) -> CliResult<DistributionField> {
    let n = coarse.n();
    let r = f.grid.n() / n;
    let values = (0..coarse.len())
        .map(|k| {
            let (i, j, l) = (k % n, (k / n) % n, k / (n * n));
            f.values[f.grid.index(r * i, r * j, r * l)]
        })
        .collect();
    Ok(DistributionField::new(coarse, values)?)
}

fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

fn ladder(config: &Path, axis: Axis, levels: usize, base_steps: Option<usize>, expect: Option<f64>, out: &Path) -> CliResult<Verdict> {
    let (cfg, base) = load_config(config)?;
    let mut w = csv::Writer::from_writer(create(out, "ladder.csv")?);
    w.write_record(["axis", "level", "n", "steps", "dt", "mass_drift", "energy_drift", "self_diff", "order"])?;
    let orders = match axis {
        Axis::Dt => {
            let it = cfg.integrator()?;
            let f0 = cfg.initial_field(&base)?;
            let steps = match base_steps {
                Some(s) => s,
                None => {
                    let coeffs = it.operator().coefficients(&f0)?;
                    (cfg.t_end / it.dt_limit(&coeffs)?).ceil() as usize
                }
            };
            let rungs = time_ladder(&it, &f0, cfg.t_end, steps, levels)?;
            let orders = self_convergence_orders(&rungs);
            for (k, r) in rungs.iter().enumerate() {
                let diff = rungs.get(k + 1).map(|next| relative_l2(&r.field.values, &next.field.values));
                w.write_record([
                    "dt".into(),
                    k.to_string(),
                    cfg.grid.n.to_string(),
                    r.steps.to_string(),
                    format!("{:e}", r.dt),
                    format!("{:e}", r.mass_drift),
                    format!("{:e}", r.energy_drift),
                    diff.map(|d| format!("{d:e}")).unwrap_or_default(),
                    orders.get(k).map(|p| p.to_string()).unwrap_or_default(),
                ])?;
            }
            orders
        }
        Axis::N => {
            let mut finals: Vec<DistributionField> = Vec::new();
            let mut drifts = Vec::new();
            for k in 0..levels {
                let mut c: ScenarioConfig = cfg.clone();
                c.grid.n = cfg.grid.n << k;
                let f0 = c.initial_field(&base)?;
                let start = functionals(&f0);
                let state = run_scenario(&c, &base, SnapshotPolicy::None, |_, _| Ok(()))?;
                let end = functionals(&state.f);
                drifts.push((
                    state.step_count,
                    state.last_dt,
                    (end.mass - start.mass).abs() / start.mass,
                    (end.energy - start.energy).abs() / start.energy,
                ));
                finals.push(state.f);
            }
            let base_grid = finals[0].grid;
            let diffs: Vec<f64> = finals
                .windows(2)
                .map(|p| -> CliResult<f64> {
                    let a = restrict(&p[0], base_grid)?;
                    let b = restrict(&p[1], base_grid)?;
                    Ok(relative_l2(&a.values, &b.values))
                })
                .collect::<CliResult<_>>()?;
            let orders: Vec<f64> = diffs.windows(2).map(|d| (d[0] / d[1]).log2()).collect();
            for (k, (steps, dt, dm, de)) in drifts.iter().enumerate() {
                w.write_record([
                    "n".into(),
                    k.to_string(),
                    (cfg.grid.n << k).to_string(),
                    steps.to_string(),
                    format!("{dt:e}"),
                    format!("{dm:e}"),
                    format!("{de:e}"),
                    diffs.get(k).map(|d| format!("{d:e}")).unwrap_or_default(),
                    orders.get(k).map(|p| p.to_string()).unwrap_or_default(),
                ])?;
            }
            orders
        }
    };
    w.flush()?;
    println!("observed orders: {orders:?}");
    let mut v = Verdict::default();
    if let Some(p) = expect {
        v.check(format!("at least one order estimate (needs {} levels)", 3), !orders.is_empty());
        for (k, q) in orders.iter().enumerate() {
            v.check(format!("rung {k}: order {q:.3} within 20% of {p}"), (q / p - 1.0).abs() <= 0.2);
        }
    }
    Ok(v)
}

fn dispatch(cli: Cli) -> CliResult<Verdict> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global()?;
    }
    match cli.command {
        Command::Run { config, out, snapshots } => run(&config, &out.out, snapshots),
        Command::CheckLemmas {
            max_exhaustive,
            max_shell,
            out,
        } => check_lemmas(max_exhaustive, max_shell, &out.out),
        Command::CheckMollifier { orders, lambda_max, h, out } => check_mollifier(&orders, lambda_max, h, &out.out),
        Command::CheckCoefficients {
            config,
            gamma,
            n,
            half_width,
            beta_max,
            b,
            max_spread,
            quadratic_tol,
            out,
        } => check_coefficients(config.as_deref(), gamma, n, half_width, beta_max, b, max_spread, quadratic_tol, &out.out),
        Command::EquilibriumResidual {
            coarse,
            fine,
            half_width,
            gamma,
            tol,
            out,
        } => equilibrium(coarse, fine, half_width, &gamma, tol, &out.out),
        Command::ConvergenceLadder {
            config,
            axis,
            levels,
            base_steps,
            expect_order,
            out,
        } => ladder(&config, axis, levels, base_steps, expect_order, &out.out),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(v) if v.failed.is_empty() => ExitCode::SUCCESS,
        Ok(v) => {
            eprintln!("{} check(s) failed:", v.failed.len());
            for name in &v.failed {
                eprintln!("  {name}");
            }
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
