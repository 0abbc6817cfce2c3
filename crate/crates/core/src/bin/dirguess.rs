fn main() {
    std::process::exit(dirguess::cli::main_with_args(std::env::args_os()));
}
