use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

mod cli;
mod commands;
mod config;
mod data;
mod error;
mod report;
mod rosters;

use cli::{Cli, Command};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes; anything else is a
            // usage problem, reported without a stack trace.
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return ExitCode::from(1);
        }
    };

    let outcome = match cli.command {
        Command::Estimate {
            data,
            config,
            out,
            format,
            origin,
        } => commands::run_estimate(data, &config, out, format, origin),
        Command::Simulate {
            config,
            seed,
            n,
            out,
        } => commands::run_simulate(&config, seed, n, &out),
        Command::Effects {
            result,
            data,
            duration_scale,
            out,
            format,
            origin,
        } => commands::run_effects(&result, &data, duration_scale, out, format, origin),
        Command::Gof {
            llb,
            llr,
            k,
            n_obs,
            confidence_levels,
            out,
            format,
        } => commands::run_gof(llb, llr, k, n_obs, &confidence_levels, out, format),
        Command::Netmetrics {
            rosters,
            categories,
            continuous,
            categorical,
            out,
            format,
        } => commands::run_netmetrics(&rosters, categories, &continuous, &categorical, out, format),
        Command::Recover {
            config,
            reps,
            out,
            format,
        } => commands::run_recover(&config, reps, out, format),
    };

    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
