fn main() {
    std::process::exit(dpstate::cli::main_with_args(std::env::args_os()));
}
