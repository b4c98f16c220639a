fn main() -> std::process::ExitCode {
    pclstm::cli::main()
}
