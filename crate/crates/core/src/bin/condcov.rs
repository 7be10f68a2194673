fn main() -> std::process::ExitCode {
    condcov::cli::run()
}
