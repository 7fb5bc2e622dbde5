fn main() {
    std::process::exit(icuae_cli::main_with_args(std::env::args_os()));
}
