fn main() {
    std::process::exit(charentropy_cli::run(std::env::args_os()));
}
