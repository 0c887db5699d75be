fn main() {
    std::process::exit(cglw_core::cli::run_from_args(std::env::args_os()));
}
