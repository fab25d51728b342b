fn main() {
    std::process::exit(qsatlab::cli::run(std::env::args_os()));
}
