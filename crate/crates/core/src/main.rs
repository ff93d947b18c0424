fn main() {
    std::process::exit(rds_core::cli::dispatch(std::env::args_os()));
}
