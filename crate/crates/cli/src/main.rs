fn main() {
    std::process::exit(wpir_cli::run(std::env::args_os()));
}
