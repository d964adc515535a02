fn main() {
    std::process::exit(frfc::cli::run(std::env::args_os()));
}
