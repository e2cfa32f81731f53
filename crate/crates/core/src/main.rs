fn main() {
    std::process::exit(woamlp::cli::run(std::env::args_os()));
}
