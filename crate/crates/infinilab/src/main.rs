use std::process::ExitCode;

fn main() -> ExitCode {
    infinilab::cli::main_entry()
}
