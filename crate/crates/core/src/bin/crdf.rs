fn main() -> std::process::ExitCode {
    crdf::cli::main()
}
