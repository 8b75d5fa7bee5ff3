fn main() {
    std::process::exit(plevy::cli::run(std::env::args_os()));
}
