fn main() {
    std::process::exit(htrl_cli::run(std::env::args_os()));
}
