fn main() {
    std::process::exit(holo_evp::cli::run(std::env::args_os()));
}
