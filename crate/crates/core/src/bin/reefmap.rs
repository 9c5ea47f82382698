fn main() {
    std::process::exit(reefmap::cli::run(std::env::args_os()));
}
