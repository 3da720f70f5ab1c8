fn main() {
    std::process::exit(dmh_core::cli::main_with_args(std::env::args_os()));
}
