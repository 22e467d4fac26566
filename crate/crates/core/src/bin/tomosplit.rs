fn main() -> std::process::ExitCode {
    tomosplit::cli::main()
}
