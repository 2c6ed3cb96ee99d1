fn main() {
    std::process::exit(feller_cli::run(std::env::args_os()));
}
