fn main() {
    std::process::exit(xltag::cli::main_with_args(std::env::args_os()));
}
