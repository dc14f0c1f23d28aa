fn main() -> std::process::ExitCode {
    twophoton_cli::run(std::env::args_os())
}
