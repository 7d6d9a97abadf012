fn main() -> std::process::ExitCode {
    std::process::ExitCode::from(qgrav::cli::run(std::env::args_os()))
}
