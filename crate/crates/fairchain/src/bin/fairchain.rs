fn main() {
    std::process::exit(fairchain::cli::main_with_args(std::env::args_os()));
}
