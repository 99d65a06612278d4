use std::process::ExitCode;

fn main() -> ExitCode {
    let args: Vec<std::ffi::OsString> = std::env::args_os().collect();
    let code = meda::cli::run(args, &mut std::io::stdout(), &mut std::io::stderr());
    ExitCode::from(code)
}
