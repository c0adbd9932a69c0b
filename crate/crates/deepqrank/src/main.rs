use std::process::ExitCode;

fn main() -> ExitCode {
    // DEEPQRANK_LOG={error,info,debug} controls verbosity; errors only by default.
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DEEPQRANK_LOG", "error"))
        .init();
    match deepqrank::cli::run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::FAILURE
        }
    }
}
