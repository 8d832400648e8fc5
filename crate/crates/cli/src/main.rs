fn main() {
    std::process::exit(edm_cli::run(std::env::args_os()));
}
