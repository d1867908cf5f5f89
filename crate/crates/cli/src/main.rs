fn main() {
    std::process::exit(slowthink_cli::run(std::env::args_os()));
}
