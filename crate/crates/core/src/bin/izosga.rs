fn main() -> std::process::ExitCode {
    izosga::harness::cli::main()
}
