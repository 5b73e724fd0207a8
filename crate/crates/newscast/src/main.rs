fn main() -> std::process::ExitCode {
    newscast::cli::main()
}
