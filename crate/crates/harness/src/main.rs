use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use drek_harness::config::{ExperimentConfig, MethodName, Overrides};
use drek_harness::harness::{self, resolve};

#[derive(Parser)]
#[command(name = "drek", version, about = "Randomized extended Kaczmarz experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Repeated runs of each method; writes runs.csv, traces.csv, summary.json.
    Run(Common),
    /// Momentum sweep with MDREK; writes grid.csv.
    GridSearch(Common),
    /// Bound parameters and Monte-Carlo envelope check; writes bounds.json.
    Bounds(Common),
    /// Median convergence curves; writes curves.csv.
    Curves(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// May be repeated.
    #[arg(long = "method")]
    methods: Vec<String>,
    #[arg(long, visible_alias = "beta")]
    gamma: Option<f64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
}

impl Common {
    fn load(&self) -> anyhow::Result<ExperimentConfig> {
        let mut config = ExperimentConfig::load(&self.config)?;
        let methods = self
            .methods
            .iter()
            .map(|m| m.parse::<MethodName>())
            .collect::<Result<Vec<_>, _>>()?;
        config.apply(&Overrides {
            seed: self.seed,
            out_dir: self.out.clone(),
            methods,
            gamma: self.gamma,
            repetitions: self.reps,
            max_iterations: self.max_iters,
            tolerance: self.tol,
        })?;
        // Matrix paths in a config file are relative to that file.
        if let (Some(path), Some(dir)) = (&config.problem.path, self.config.parent()) {
            config.problem.path = Some(resolve(dir, path));
        }
        Ok(config)
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run(c) => {
            let config = c.load()?;
            let report = harness::cmd_run(&config)?;
            print!("{}", harness::format_table(&report));
            let failed: usize = report.methods.iter().map(|m| m.failed).sum();
            if failed > 0 {
                eprintln!("{failed} run(s) failed; see runs.csv");
            }
        }
        Command::GridSearch(c) => {
            let config = c.load()?;
            let report = harness::cmd_grid_search(&config)?;
            for row in &report.rows {
                println!("{:.4} {:>12.4e} {:>10.1}", row.gamma, row.mean_final_rse, row.mean_iterations);
            }
            println!("best gamma: {}", report.best_gamma);
        }
        Command::Bounds(c) => {
            let config = c.load()?;
            let report = harness::cmd_bounds(&config)?;
            println!(
                "alpha1={} gamma={:.6e} gamma_max={:.6e} w={:.6}",
                report.alpha1,
                report.gamma,
                report.zero_momentum.gamma_max,
                report.zero_momentum.w
            );
            println!(
                "Z envelope: {}/{} violations",
                report.z_report.violations, report.z_report.checked
            );
            match &report.x_report {
                Some(x) => println!("X envelope: {}/{} violations", x.violations, x.checked),
                None => println!("X envelope: momentum outside the feasible range"),
            }
        }
        Command::Curves(c) => {
            let config = c.load()?;
            let points = harness::cmd_curves(&config)?;
            let dir = config.out_dir.join("curves.csv");
            println!("{} points written to {}", points.len(), dir.display());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;
    use std::path::Path;

    fn write_config(dir: &Path, body: &str) -> PathBuf {
        let path = dir.join("exp.toml");
        fs::write(&path, format!("version = 1\n{body}")).unwrap();
        path
    }

    fn cli(args: &[&str]) -> anyhow::Result<()> {
        let mut all = vec!["drek"];
        all.extend_from_slice(args);
        run(Cli::try_parse_from(all)?)
    }

    const SMALL: &str = r#"
seed = 3
repetitions = 3
methods = ["rek-baseline", "drek", "mdrek"]
gamma = 0.3

[problem]
kind = "randn"
m = 12
n = 6
p = 2
noise = 1e-4
"#;

    /// `csv` rows with the named columns removed.
    fn rows_without(path: &Path, drop: &[&str]) -> Vec<Vec<String>> {
        let mut r = csv::Reader::from_path(path).unwrap();
        let headers = r.headers().unwrap().clone();
        let keep: Vec<usize> = (0..headers.len()).filter(|&i| !drop.contains(&&headers[i])).collect();
        r.records()
            .map(|rec| {
                let rec = rec.unwrap();
                keep.iter().map(|&i| rec[i].to_string()).collect()
            })
            .collect()
    }

    #[test]
    fn run_is_reproducible_apart_from_timings() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = write_config(tmp.path(), SMALL);
        let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
        for out in [&a, &b] {
            cli(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).unwrap();
        }
        assert_eq!(
            rows_without(&a.join("runs.csv"), &["elapsed"]),
            rows_without(&b.join("runs.csv"), &["elapsed"])
        );
        assert_eq!(
            rows_without(&a.join("traces.csv"), &["elapsed"]),
            rows_without(&b.join("traces.csv"), &["elapsed"])
        );

        let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("summary.json")).unwrap()).unwrap();
        let runs = rows_without(&a.join("runs.csv"), &[]);
        for m in summary["methods"].as_array().unwrap() {
            let name = m["method"].as_str().unwrap();
            let its: Vec<f64> = runs.iter().filter(|r| r[0] == name).map(|r| r[3].parse().unwrap()).collect();
            assert_eq!(its.len(), 3);
            assert_eq!(m["mean_iterations"].as_f64().unwrap(), its.iter().sum::<f64>() / its.len() as f64);
        }
        // 17 significant digits in every real column.
        let rse = &runs[0][4];
        assert_eq!(rse.split('e').next().unwrap().replace(['.', '-'], "").len(), 17, "{rse}");
    }

    #[test]
    fn iteration_cap_flag_is_honoured() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = write_config(tmp.path(), SMALL);
        let out = tmp.path().join("out");
        cli(&[
            "run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(),
            "--max-iters", "10", "--method", "drek", "--reps", "2",
        ])
        .unwrap();
        let runs = rows_without(&out.join("runs.csv"), &[]);
        assert_eq!(runs.len(), 2);
        for r in &runs {
            assert_eq!((r[0].as_str(), r[3].as_str(), r[6].as_str()), ("drek", "10", "iteration-cap"));
        }
    }

    #[test]
    fn single_point_grid_with_zero_momentum_is_drek() {
        let tmp = tempfile::tempdir().unwrap();
        let body = format!("{SMALL}\n[grid]\nlo = 0.0\nhi = 0.0\nstep = 0.1\nbudget = 400\n");
        let cfg = write_config(tmp.path(), &body);
        let out = tmp.path().join("grid");
        cli(&["grid-search", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).unwrap();
        let rows = rows_without(&out.join("grid.csv"), &[]);
        assert_eq!(rows.len(), 1);

        let config = ExperimentConfig::from_toml(&format!("version = 1\n{body}")).unwrap();
        let problem = harness::build_problem(&config.problem, config.problem_seed()).unwrap();
        let mean_rse: f64 = (0..3)
            .map(|t| {
                let seed = harness::trial_seed(config.seed, MethodName::Mdrek, t);
                let sc = config.solver_config(0.0, seed);
                let mut s = drek_core::SolverState::new(&problem.a, &problem.b, drek_core::Method::Drek, &sc).unwrap();
                for _ in 0..400 {
                    s.step().unwrap();
                }
                drek_core::solver::relative_solution_error(s.x(), &problem.x_star).unwrap()
            })
            .sum::<f64>()
            / 3.0;
        let got: f64 = rows[0][1].parse().unwrap();
        assert!((got - mean_rse).abs() <= 1e-15 * mean_rse.max(1e-300), "{got} vs {mean_rse}");
    }

    #[test]
    fn bounds_on_a_scaled_identity_file() {
        let tmp = tempfile::tempdir().unwrap();
        fs::write(
            tmp.path().join("eye.mtx"),
            "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 3.0\n2 2 3.0\n",
        )
        .unwrap();
        let body = "seed = 1\n[problem]\nkind = \"mtx\"\npath = \"eye.mtx\"\np = 1\n\n[bounds]\nruns = 20\ngamma_fraction = 0.5\n";
        let cfg = write_config(tmp.path(), body);
        let out = tmp.path().join("b");
        cli(&["bounds", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("bounds.json")).unwrap()).unwrap();
        let zm = &v["zero_momentum"];
        // δ = 1 − α₁² λ_min / ‖A‖² = 1 − 0.25·9/18.
        assert!((zm["delta"].as_f64().unwrap() - 0.875).abs() < 1e-15);
        let gmax = (1.0 - 0.875f64.sqrt()) / (2.0 * 0.875f64.sqrt());
        assert!((zm["gamma_max"].as_f64().unwrap() - gmax).abs() < 1e-15);
        assert!((v["gamma"].as_f64().unwrap() - 0.5 * gmax).abs() < 1e-15);
        assert_eq!(v["z_report"]["passed"], serde_json::Value::Bool(true));
    }

    #[test]
    fn curves_cover_each_method() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = write_config(tmp.path(), SMALL);
        let out = tmp.path().join("c");
        cli(&[
            "curves", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(),
            "--method", "drek", "--method", "rek-baseline", "--beta", "0.2",
        ])
        .unwrap();
        let rows = rows_without(&out.join("curves.csv"), &[]);
        for name in ["drek", "rek-baseline"] {
            let its: Vec<usize> = rows.iter().filter(|r| r[0] == name).map(|r| r[1].parse().unwrap()).collect();
            assert!(!its.is_empty());
            assert!(its.windows(2).all(|w| w[0] < w[1]), "{name}");
        }
        assert!(rows.iter().all(|r| r[0] == "drek" || r[0] == "rek-baseline"));
    }

    #[test]
    fn bad_inputs_are_errors() {
        let tmp = tempfile::tempdir().unwrap();
        let empty = write_config(tmp.path(), &SMALL.replace(r#"methods = ["rek-baseline", "drek", "mdrek"]"#, "methods = []"));
        assert!(cli(&["run", "--config", empty.to_str().unwrap()]).is_err());
        let cfg = write_config(tmp.path(), SMALL);
        assert!(cli(&["run", "--config", cfg.to_str().unwrap(), "--method", "kaczmarz"]).is_err());
        let bad = write_config(tmp.path(), "seed = \"x\"\n");
        assert!(cli(&["run", "--config", bad.to_str().unwrap()]).is_err());
        assert!(cli(&["run", "--config", tmp.path().join("missing.toml").to_str().unwrap()]).is_err());
        assert!(cli(&["bounds"]).is_err());
    }
}
