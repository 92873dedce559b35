use std::process::ExitCode;

fn main() -> ExitCode {
    mismatch_lrt::cli::main()
}
