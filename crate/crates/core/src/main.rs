fn main() {
    std::process::exit(skewcrit::cli::run(std::env::args_os()));
}
