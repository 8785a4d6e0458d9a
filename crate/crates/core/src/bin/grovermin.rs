fn main() -> std::process::ExitCode {
    grovermin::cli::main_entry()
}
