fn main() {
    std::process::exit(graphtopo::cli::dispatch(std::env::args_os()));
}
