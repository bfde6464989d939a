fn main() {
    std::process::exit(meshfl::cli::main_with_args(std::env::args_os()));
}
