fn main() -> std::process::ExitCode {
    ctxkit::cli::main()
}
