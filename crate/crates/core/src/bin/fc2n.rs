fn main() {
    std::process::exit(fc2n::cli::run(std::env::args_os()));
}
