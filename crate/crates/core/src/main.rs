fn main() {
    std::process::exit(invlab::cli::run(std::env::args_os()));
}
