fn main() {
    std::process::exit(vgan::cli::run(std::env::args_os()));
}
