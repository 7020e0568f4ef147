fn main() {
    std::process::exit(qfslice::cli::run(std::env::args_os()));
}
