fn main() {
    std::process::exit(clockmag_cli::run(std::env::args_os()));
}
