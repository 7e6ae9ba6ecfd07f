fn main() {
    std::process::exit(flamelab::cli::main_with_args(std::env::args_os()));
}
