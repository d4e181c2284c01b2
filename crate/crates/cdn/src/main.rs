fn main() {
    std::process::exit(cdn::cli::run(std::env::args_os()));
}
