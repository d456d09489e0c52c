fn main() -> std::process::ExitCode {
    wikinav::cli::main_with_args(std::env::args_os())
}
