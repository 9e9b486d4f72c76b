fn main() {
    std::process::exit(advdrift::cli::main_with_args(std::env::args_os()));
}
