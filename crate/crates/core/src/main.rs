fn main() {
    std::process::exit(ifslab::cli::run(std::env::args_os()));
}
