fn main() {
    std::process::exit(alr_cli::run(std::env::args_os()));
}
