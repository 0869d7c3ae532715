use std::process::ExitCode;

fn main() -> ExitCode {
    stabsim::cli::main_entry()
}
