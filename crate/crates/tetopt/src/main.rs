fn main() {
    std::process::exit(tetopt::cli::run_cli(std::env::args_os()));
}
