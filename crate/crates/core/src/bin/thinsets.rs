fn main() {
    std::process::exit(thinsets::experiments::cli_dispatch(std::env::args_os()));
}
