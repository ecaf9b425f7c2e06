fn main() {
    std::process::exit(fallrisk::cli::main_with_args(std::env::args_os()));
}
