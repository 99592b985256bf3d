fn main() -> std::process::ExitCode {
    odrs::cli::main_with_args(std::env::args_os())
}
