fn main() {
    std::process::exit(psurf::cli::main_with_args(std::env::args_os()));
}
