fn main() {
    std::process::exit(aqfit::cli::run(std::env::args_os()));
}
