fn main() {
    std::process::exit(stereolens::cli::run(std::env::args_os()));
}
