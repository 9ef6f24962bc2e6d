use std::process::ExitCode;

fn main() -> ExitCode {
    hierax::frontend::cli::run()
}
