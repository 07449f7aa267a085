fn main() {
    std::process::exit(avsdf_cli::run(std::env::args_os()));
}
