use std::process::ExitCode;

fn main() -> ExitCode {
    qevent::cli::run()
}
