fn main() {
    std::process::exit(sparse_ecg::cli::run(std::env::args_os()));
}
