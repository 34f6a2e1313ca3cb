fn main() {
    std::process::exit(mdetox::harness::cli::run(std::env::args_os()));
}
