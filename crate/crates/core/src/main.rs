fn main() {
    std::process::exit(decree::cli::dispatch(std::env::args_os()).code());
}
