fn main() {
    std::process::exit(gausspace_cli::cli_main());
}
