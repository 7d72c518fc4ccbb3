fn main() {
    std::process::exit(multileave::cli::main_with_args(std::env::args_os()));
}
