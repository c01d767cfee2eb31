fn main() {
    std::process::exit(critfrog::cli::main_with_args(std::env::args_os()));
}
