fn main() {
    std::process::exit(nordheim::cli::main_from_args(std::env::args_os()));
}
