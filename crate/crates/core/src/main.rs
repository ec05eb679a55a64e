use std::process::ExitCode;

fn main() -> ExitCode {
    ucca_implicit::cli::main_with_args(std::env::args_os())
}
