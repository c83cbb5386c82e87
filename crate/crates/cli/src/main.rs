use std::panic;
use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    panic::set_hook(Box::new(|info| {
        eprintln!("internal error: {info}");
    }));
    let code = panic::catch_unwind(|| solitonlab_cli::run(std::env::args_os())).unwrap_or(1);
    ExitCode::from(code.clamp(0, 255) as u8)
}
