fn main() -> std::process::ExitCode {
    rsh_lab_cli::main_with_args(std::env::args_os())
}
