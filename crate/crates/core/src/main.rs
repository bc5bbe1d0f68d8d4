fn main() -> std::process::ExitCode {
    taxo_suggest::cli::main()
}
