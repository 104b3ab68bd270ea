fn main() {
    std::process::exit(glss::cli::run(std::env::args_os()));
}
