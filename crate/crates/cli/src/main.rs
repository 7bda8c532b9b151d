fn main() -> std::process::ExitCode {
    elm_uq_cli::main_exit()
}
