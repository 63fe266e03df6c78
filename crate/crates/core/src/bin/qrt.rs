fn main() {
    std::process::exit(qrt_core::cli::main_with_args(std::env::args_os()));
}
