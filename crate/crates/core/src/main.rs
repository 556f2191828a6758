fn main() -> std::process::ExitCode {
    ws_scatter::cli::main()
}
