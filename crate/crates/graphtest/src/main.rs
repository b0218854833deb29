fn main() {
    std::process::exit(graphtest::cli::run(std::env::args_os()));
}
