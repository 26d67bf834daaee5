fn main() {
    std::process::exit(pecthresh::cli::main_with_args(std::env::args_os()));
}
