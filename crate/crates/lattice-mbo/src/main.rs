use std::process::ExitCode;

fn main() -> ExitCode {
    let mut stdout = std::io::stdout().lock();
    let code = lattice_mbo::cli::run_from(std::env::args_os(), &mut stdout);
    ExitCode::from(code.clamp(0, 255) as u8)
}
