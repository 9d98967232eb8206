mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;
use crate::commands::Usage;

#[cfg(feature = "parallel")]
mod rayon_pool {
    pub type Pool = rayon::ThreadPool;

    pub fn build(jobs: Option<usize>) -> Result<Option<Pool>, String> {
        match jobs {
            None => Ok(None),
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map(Some)
                .map_err(|e| e.to_string()),
        }
    }
}

#[cfg(not(feature = "parallel"))]
mod rayon_pool {
    pub struct Pool;

    impl Pool {
        pub fn install<R>(&self, f: impl FnOnce() -> R) -> R {
            f()
        }
    }

    pub fn build(jobs: Option<usize>) -> Result<Option<Pool>, String> {
        Ok(jobs.map(|_| Pool))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if cli.jobs == Some(0) {
        eprintln!("error: --jobs must be at least 1");
        return ExitCode::from(1);
    }
    let pool = match rayon_pool::build(cli.jobs) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = match pool {
        Some(p) => p.install(|| commands::run(cli)),
        None => commands::run(cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
