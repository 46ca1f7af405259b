fn main() {
    std::process::exit(oht_service::cli::run_cli(std::env::args_os()));
}
