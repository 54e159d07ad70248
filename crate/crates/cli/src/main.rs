fn main() {
    std::process::exit(cayperc_cli::main_with_args(std::env::args_os()));
}
