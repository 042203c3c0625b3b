fn main() {
    std::process::exit(plateau::cli::main_with_args(std::env::args_os()));
}
