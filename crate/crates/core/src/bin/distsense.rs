//! Command-line front-end: closed-form tables, entanglement-gain sweeps,
//! robustness and thermal-noise maps, and Monte-Carlo Cramer-Rao runs, all
//! emitted as plot-ready CSV or JSON with the resolved configuration echoed
//! on a '#' header line. Identical invocations (and seeds) produce
//! byte-identical output.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use distsense::fisher::{
    entanglement_gain, gfi_closed_form, heterodyne_fi, optimal_measurement_params,
    qfi_phase_difference, separable_fi_balanced, separable_fi_unbalanced, EgMode,
};
use distsense::optimizer::SeedParams;
use distsense::{
    crb_experiment, fir, noniso_sweep, optimize_separable, optimize_two_mode, Ecgm, Error,
    ProbeSpec,
};

#[derive(Parser)]
#[command(name = "distsense", version, about = "Gaussian-receiver design for distributed phase sensing")]
struct Cli {
    /// Write output to this file instead of standard output
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Closed-form information values for one probe/energy point
    Gfi {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        n0: f64,
        #[arg(long)]
        energy: f64,
        /// Mode count of the balanced separable baseline
        #[arg(long, default_value_t = 2)]
        n_modes: usize,
        /// Dominant squared coefficient of the unbalanced baseline
        #[arg(long, default_value_t = 0.5)]
        v11_sq: f64,
    },
    /// Entanglement-gain curves over a seed-energy grid (CSV: E, param, eg)
    SweepEg {
        #[arg(long, value_enum)]
        mode: SweepMode,
        /// Mode counts (balanced) or v11^2 values (unbalanced):
        /// comma list, lin:<a>:<b>:<n>, or log:<a>:<b>:<n>
        #[arg(long, value_parser = parse_grid)]
        param_grid: Grid,
        #[arg(long, value_parser = parse_grid)]
        energy_grid: Grid,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        n0: f64,
    },
    /// Ratio of achieved to maximal information for a receiver designed at
    /// zero phases, over the true-phase plane (CSV: theta1, theta2, fir)
    FirMap {
        #[arg(long, default_value_t = 21)]
        theta_steps: usize,
        #[arg(long, default_value_t = 1e8)]
        energy: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        n0: f64,
    },
    /// Constrained maxima over per-mode thermal occupations
    /// (CSV: n1, n2, ftilde11)
    NonisoMap {
        #[arg(long, default_value_t = 2.0)]
        n1_max: f64,
        #[arg(long, default_value_t = 2.0)]
        n2_max: f64,
        #[arg(long, default_value_t = 21)]
        steps: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 4.0)]
        energy: f64,
    },
    /// Monte-Carlo Cramer-Rao saturation experiment (JSON report)
    McCrb {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        reps: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum)]
        receiver: Receiver,
        #[arg(long, default_value_t = 0.0)]
        energy: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        n0: f64,
    },
    /// Constrained two-mode maximization (JSON result)
    Optimize {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        n0: f64,
        /// Occupation of mode 1 (overrides --n0)
        #[arg(long)]
        n1: Option<f64>,
        /// Occupation of mode 2 (overrides --n0)
        #[arg(long)]
        n2: Option<f64>,
        #[arg(long)]
        energy: f64,
        #[arg(long, default_value_t = 0.0)]
        theta1: f64,
        #[arg(long, default_value_t = 0.0)]
        theta2: f64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SweepMode {
    Balanced,
    Unbalanced,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Receiver {
    Heterodyne,
    Optimal,
    Separable,
}

#[derive(Clone, Debug)]
struct Grid(Vec<f64>);

fn parse_grid(s: &str) -> Result<Grid, String> {
    fn spec3(body: &str, name: &str) -> Result<(f64, f64, usize), String> {
        let parts: Vec<&str> = body.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("{name} grid needs <start>:<stop>:<count>"));
        }
        let start: f64 = parts[0].parse().map_err(|e| format!("{name} start: {e}"))?;
        let stop: f64 = parts[1].parse().map_err(|e| format!("{name} stop: {e}"))?;
        let count: usize = parts[2].parse().map_err(|e| format!("{name} count: {e}"))?;
        if count < 2 {
            return Err(format!("{name} grid needs at least 2 points"));
        }
        Ok((start, stop, count))
    }
    let values = if let Some(body) = s.strip_prefix("lin:") {
        let (a, b, n) = spec3(body, "lin")?;
        (0..n)
            .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
            .collect()
    } else if let Some(body) = s.strip_prefix("log:") {
        let (a, b, n) = spec3(body, "log")?;
        if a <= 0.0 || b <= 0.0 {
            return Err("log grid endpoints must be positive".into());
        }
        (0..n)
            .map(|k| (a.ln() + (b.ln() - a.ln()) * k as f64 / (n - 1) as f64).exp())
            .collect()
    } else {
        s.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| format!("grid value: {e}")))
            .collect::<Result<Vec<f64>, String>>()?
    };
    if values.is_empty() {
        return Err("grid is empty".into());
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err("grid values must be finite".into());
    }
    Ok(Grid(values))
}

fn linspace(max: f64, steps: usize) -> Vec<f64> {
    (0..steps)
        .map(|k| max * k as f64 / (steps - 1) as f64)
        .collect()
}

fn symmetric_linspace(half_width: f64, steps: usize) -> Vec<f64> {
    (0..steps)
        .map(|k| -half_width + 2.0 * half_width * k as f64 / (steps - 1) as f64)
        .collect()
}

fn run(cmd: &Cmd) -> Result<String, Error> {
    let mut out = String::new();
    match cmd {
        Cmd::Gfi {
            alpha,
            n0,
            energy,
            n_modes,
            v11_sq,
        } => {
            let config = json!({
                "alpha": alpha, "n0": n0, "energy": energy,
                "n_modes": n_modes, "v11_sq": v11_sq,
            });
            let spec = ProbeSpec::symmetric_two_mode(*alpha, *n0)?;
            writeln!(out, "# {config}").unwrap();
            writeln!(out, "quantity,value").unwrap();
            writeln!(out, "qfi,{}", qfi_phase_difference(&spec)?).unwrap();
            writeln!(out, "gfi,{}", gfi_closed_form(*alpha, *n0, *energy)).unwrap();
            writeln!(out, "heterodyne_fi,{}", heterodyne_fi(*alpha, *n0)).unwrap();
            writeln!(
                out,
                "separable_balanced,{}",
                separable_fi_balanced(*alpha, *n0, *energy, *n_modes)
            )
            .unwrap();
            writeln!(
                out,
                "separable_unbalanced,{}",
                separable_fi_unbalanced(*alpha, *n0, *energy, *v11_sq)?
            )
            .unwrap();
        }
        Cmd::SweepEg {
            mode,
            param_grid,
            energy_grid,
            alpha,
            n0,
        } => {
            let config = json!({
                "mode": format!("{mode:?}").to_lowercase(),
                "param_grid": param_grid.0, "energy_grid": energy_grid.0,
                "alpha": alpha, "n0": n0,
            });
            writeln!(out, "# {config}").unwrap();
            writeln!(out, "E,param,eg").unwrap();
            for p in &param_grid.0 {
                let eg_mode = match mode {
                    SweepMode::Balanced => {
                        if *p < 1.0 || p.fract() != 0.0 {
                            return Err(Error::InvalidArgument(format!(
                                "balanced mode count must be a positive integer, got {p}"
                            )));
                        }
                        EgMode::Balanced {
                            n_modes: *p as usize,
                        }
                    }
                    SweepMode::Unbalanced => EgMode::Unbalanced { v11_sq: *p },
                };
                for e in &energy_grid.0 {
                    let eg = entanglement_gain(*alpha, *n0, *e, eg_mode)?;
                    writeln!(out, "{e},{p},{eg}").unwrap();
                }
            }
        }
        Cmd::FirMap {
            theta_steps,
            energy,
            alpha,
            n0,
        } => {
            if *theta_steps < 2 {
                return Err(Error::InvalidArgument(
                    "theta grid needs at least 2 steps".into(),
                ));
            }
            let config = json!({
                "theta_steps": theta_steps, "energy": energy,
                "alpha": alpha, "n0": n0,
            });
            writeln!(out, "# {config}").unwrap();
            writeln!(out, "theta1,theta2,fir").unwrap();
            let axis = symmetric_linspace(std::f64::consts::PI, *theta_steps);
            for t1 in &axis {
                for t2 in &axis {
                    let r = fir([*t1, *t2], *alpha, *n0, *energy)?;
                    writeln!(out, "{t1},{t2},{r}").unwrap();
                }
            }
        }
        Cmd::NonisoMap {
            n1_max,
            n2_max,
            steps,
            alpha,
            energy,
        } => {
            if *steps < 2 {
                return Err(Error::InvalidArgument(
                    "occupation grid needs at least 2 steps".into(),
                ));
            }
            let config = json!({
                "n1_max": n1_max, "n2_max": n2_max, "steps": steps,
                "alpha": alpha, "energy": energy,
            });
            writeln!(out, "# {config}").unwrap();
            writeln!(out, "n1,n2,ftilde11").unwrap();
            let n1_grid = linspace(*n1_max, *steps);
            let n2_grid = linspace(*n2_max, *steps);
            let values = noniso_sweep(&n1_grid, &n2_grid, *alpha, *energy)?;
            for (i, n1) in n1_grid.iter().enumerate() {
                for (j, n2) in n2_grid.iter().enumerate() {
                    writeln!(out, "{n1},{n2},{}", values[(i, j)]).unwrap();
                }
            }
        }
        Cmd::McCrb {
            m,
            reps,
            seed,
            receiver,
            energy,
            alpha,
            n0,
        } => {
            let config = json!({
                "m": m, "reps": reps, "seed": seed,
                "receiver": format!("{receiver:?}").to_lowercase(),
                "energy": energy, "alpha": alpha, "n0": n0,
            });
            let spec = ProbeSpec::symmetric_two_mode(*alpha, *n0)?;
            let v = [
                std::f64::consts::FRAC_1_SQRT_2,
                -std::f64::consts::FRAC_1_SQRT_2,
            ];
            let thetas = [0.0, 0.0];
            let ecgm = match receiver {
                Receiver::Heterodyne => Ecgm::heterodyne(2)?,
                Receiver::Optimal => Ecgm::from_params(&optimal_measurement_params(*energy))?,
                Receiver::Separable => {
                    let res = optimize_separable(
                        &spec.alphas,
                        &spec.thermal_occupations,
                        &thetas,
                        *energy,
                        &v,
                    )?;
                    match res.best_params {
                        SeedParams::Separable { squeezings } => {
                            Ecgm::separable(&squeezings, &thetas)?
                        }
                        _ => unreachable!("separable optimizer returns separable seeds"),
                    }
                }
            };
            let report = crb_experiment(&spec, &thetas, &ecgm, &v, *m, *reps, *seed)?;
            let doc = json!({ "config": config, "report": report });
            writeln!(out, "{doc}").unwrap();
        }
        Cmd::Optimize {
            alpha,
            n0,
            n1,
            n2,
            energy,
            theta1,
            theta2,
        } => {
            let occ = (n1.unwrap_or(*n0), n2.unwrap_or(*n0));
            let config = json!({
                "alpha": alpha, "n1": occ.0, "n2": occ.1,
                "energy": energy, "theta1": theta1, "theta2": theta2,
            });
            let result = optimize_two_mode(*alpha, occ, (*theta1, *theta2), *energy)?;
            if !result.converged {
                return Err(Error::NonConvergence(format!(
                    "optimizer stopped after {} objective evaluations",
                    result.objective_evals
                )));
            }
            let doc = json!({ "config": config, "result": result });
            writeln!(out, "{doc}").unwrap();
        }
    }
    Ok(out)
}

fn emit(out: &Option<PathBuf>, content: &str) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, content),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(content.as_bytes())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.cmd) {
        Ok(content) => match emit(&cli.out, &content) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: cannot write output: {e}");
                ExitCode::from(1)
            }
        },
        Err(e @ (Error::InvalidArgument(_) | Error::DimensionMismatch(_))) => {
            eprintln!("error: {e}");
            eprintln!("run with --help for usage");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
