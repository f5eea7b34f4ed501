fn main() {
    std::process::exit(inhomo::cli::dispatch(std::env::args_os()));
}
