fn main() -> std::process::ExitCode {
    schwarz_inpaint::cli::main()
}
