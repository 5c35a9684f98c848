use std::process::ExitCode;

fn main() -> ExitCode {
    match jacobnet::cli::run(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("jacobnet: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
