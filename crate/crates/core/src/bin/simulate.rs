//! Command-line front end: `simulate --config <path> [--out <dir>]
//! [--tau-refine <levels>] [--validate-only]`.
//!
//! Exit codes: 0 ok, 2 bad config, 3 hypothesis violation, 4 solver
//! failure, 5 I/O.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use preisach_porous::sim::{run, tau_refinement, Scenario, SimError};
use preisach_porous::stepper::init_state;

#[derive(Debug, Parser)]
#[command(
    name = "simulate",
    about = "Porous-media flow with Preisach hysteresis"
)]
struct Cli {
    /// Scenario JSON document.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run a time-step refinement study with this many levels instead of a single run.
    #[arg(long, value_name = "LEVELS")]
    tau_refine: Option<usize>,
    /// Check the config and the initial compatibility conditions, then exit.
    #[arg(long)]
    validate_only: bool,
}

fn execute(cli: &Cli) -> Result<(), SimError> {
    let scenario = Scenario::load(&cli.config)?;
    let out = cli
        .out
        .clone()
        .or_else(|| {
            scenario.out_dir.as_ref().map(|d| {
                let p = PathBuf::from(d);
                match &scenario.base_dir {
                    Some(base) if p.is_relative() => base.join(p),
                    _ => p,
                }
            })
        })
        .unwrap_or_else(|| PathBuf::from("out"));

    if cli.validate_only {
        let model = scenario.build_model()?;
        let u0 = scenario.initial_field(&model.grid)?;
        let init = scenario.memory_init(&model)?;
        scenario.solver_options(&model)?;
        init_state(&model, u0, init)?;
        println!(
            "config ok: {} cells, initial memory admissible",
            model.grid.len()
        );
        return Ok(());
    }

    if let Some(levels) = cli.tau_refine {
        let rows = tau_refinement(&scenario, levels, Some(&out))?;
        println!("level  tau          tau_fine     diff_inf_end  ratio");
        for r in &rows {
            let ratio = r
                .ratio
                .map(|x| format!("{x:.3}"))
                .unwrap_or_else(|| "-".into());
            println!(
                "{:<6} {:<12.4e} {:<12.4e} {:<13.4e} {ratio}",
                r.level, r.tau, r.tau_fine, r.diff_inf_end
            );
        }
        println!("wrote {}", out.join("tau_refinement.csv").display());
        return Ok(());
    }

    let outcome = run(&scenario, Some(&out))?;
    let s = &outcome.summary;
    println!(
        "{} steps, t = {:.6e}, u_bar = {:.10e}",
        outcome.final_state.step_index, outcome.final_state.t, s.u_bar
    );
    match s.steady_time {
        Some(t) => println!("steady at t = {t:.6e}"),
        None => println!("steady state not detected"),
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
