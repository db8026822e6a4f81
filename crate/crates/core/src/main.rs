use std::process::ExitCode;

fn main() -> ExitCode {
    match fraclap::cli::run(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("fraclap: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
