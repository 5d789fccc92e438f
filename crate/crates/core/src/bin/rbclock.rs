fn main() {
    std::process::exit(rbclock::cli::run(std::env::args_os()));
}
