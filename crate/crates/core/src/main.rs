fn main() {
    std::process::exit(isofdp::cli::main_with_args(std::env::args_os()));
}
