fn main() {
    std::process::exit(kcoreset_cli::run(std::env::args_os()));
}
