fn main() {
    std::process::exit(vqgen_cli::run(std::env::args_os()));
}
