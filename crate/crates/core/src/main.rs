fn main() {
    std::process::exit(tailscan::cli::run(std::env::args_os()));
}
