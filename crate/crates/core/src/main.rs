fn main() {
    std::process::exit(cremer::cli::dispatch(std::env::args_os()));
}
