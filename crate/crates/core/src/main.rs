fn main() -> std::process::ExitCode {
    delaymem::cli::main_with_args(std::env::args_os())
}
