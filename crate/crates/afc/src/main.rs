fn main() {
    std::process::exit(afc::cli::run(std::env::args_os()));
}
