fn main() -> std::process::ExitCode {
    form_lab::cli::main_entry()
}
