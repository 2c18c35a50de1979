fn main() {
    std::process::exit(rfou::harness::cli::run(std::env::args_os()));
}
