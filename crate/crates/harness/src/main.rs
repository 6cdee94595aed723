fn main() {
    std::process::exit(mixfree::cli::run(std::env::args_os()));
}
