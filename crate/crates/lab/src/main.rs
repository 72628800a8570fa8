use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(volterra_lab::cli::main_cli(std::env::args_os()))
}
