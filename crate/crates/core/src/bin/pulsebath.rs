fn main() {
    std::process::exit(pulsebath::cli::main_with_args(std::env::args_os()));
}
